/* Copyright 2026 The nnl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

	http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
--------------------------------------------------------------------------------------------------------------*/

#pragma once

#include <nnl/dataset.hpp>
#include <nnl/evaluation.hpp>
#include <nnl/matrix.hpp>
#include <nnl/model.hpp>
#include <nnl/parallel.hpp>
#include <nnl/random.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// ---------------------------------------------------------------------------
// Learning-rate schedules. Epochs are 1-based.

enum class ScheduleKind { cifar_70, imagenet_48, linear, constant };

inline const char* to_string(ScheduleKind kind)
{
	switch (kind) {
	case ScheduleKind::cifar_70: return "cifar_70";
	case ScheduleKind::imagenet_48: return "imagenet_48";
	case ScheduleKind::linear: return "linear";
	case ScheduleKind::constant: return "constant";
	}
	return "?";
}

inline ScheduleKind parse_schedule_kind(const std::string& name)
{
	if (name == "cifar_70") return ScheduleKind::cifar_70;
	if (name == "imagenet_48") return ScheduleKind::imagenet_48;
	if (name == "linear") return ScheduleKind::linear;
	if (name == "constant") return ScheduleKind::constant;
	throw ConfigError("unknown learning-rate schedule \"" + name + "\"");
}

struct LrSchedule {
	ScheduleKind kind = ScheduleKind::cifar_70;
	double base = 1e-4;         // linear and constant only
	std::size_t epochs = 70;    // linear and constant only

	std::size_t length() const
	{
		switch (kind) {
		case ScheduleKind::cifar_70: return 70;
		case ScheduleKind::imagenet_48: return 48;
		default: return epochs;
		}
	}

	double at(std::size_t epoch) const
	{
		if (epoch < 1 || epoch > length()) {
			throw ConfigError("epoch " + std::to_string(epoch) + " outside the " + to_string(kind) + " schedule (1.." + std::to_string(length()) + ")");
		}
		switch (kind) {
		case ScheduleKind::cifar_70:
			if (epoch <= 15) return 1e-4;
			if (epoch <= 30) return 8e-5;
			if (epoch <= 45) return 5e-5;
			if (epoch <= 60) return 2e-5;
			return 1e-5;
		case ScheduleKind::imagenet_48:
			if (epoch <= 15) return 1e-4;
			if (epoch <= 25) return 8e-5;
			if (epoch <= 35) return 5e-5;
			if (epoch <= 45) return 2e-5;
			return 1e-5;
		case ScheduleKind::linear:
			return base * (1.0 - static_cast<double>(epoch - 1) / static_cast<double>(epochs));
		case ScheduleKind::constant:
			return base;
		}
		return base;
	}

	friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

inline double lr_schedule(ScheduleKind kind, std::size_t epoch)
{
	return LrSchedule{kind}.at(epoch);
}

// ---------------------------------------------------------------------------
// Adam

template <class T>
struct AdamState {
	std::vector<T> first_moment;
	std::vector<T> second_moment;
	std::size_t step_count = 0;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps_hat = 1e-8;

	explicit AdamState(std::size_t size = 0) : first_moment(size, T(0)), second_moment(size, T(0)) {}
};

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr)
{
	if (params.size() != grads.size() || state.first_moment.size() != params.size()) {
		throw ConfigError("adam_step: parameter, gradient and state sizes differ");
	}
	if (!all_finite<T>(grads)) {
		throw TrainingError("non-finite gradient at Adam step " + std::to_string(state.step_count + 1));
	}
	++state.step_count;
	const double t = static_cast<double>(state.step_count);
	const double correction1 = 1.0 - std::pow(state.beta1, t);
	const double correction2 = 1.0 - std::pow(state.beta2, t);
	for (std::size_t i = 0; i < params.size(); ++i) {
		const double g = static_cast<double>(grads[i]);
		const double m = state.beta1 * static_cast<double>(state.first_moment[i]) + (1.0 - state.beta1) * g;
		const double v = state.beta2 * static_cast<double>(state.second_moment[i]) + (1.0 - state.beta2) * g * g;
		state.first_moment[i] = static_cast<T>(m);
		state.second_moment[i] = static_cast<T>(v);
		const double m_hat = m / correction1;
		const double v_hat = v / correction2;
		params[i] = static_cast<T>(static_cast<double>(params[i]) - lr * m_hat / (std::sqrt(v_hat) + state.eps_hat));
	}
}

// ---------------------------------------------------------------------------

struct SupervisedConfig {
	std::size_t epochs = 70;
	std::size_t minibatch_size = 300;
	LrSchedule schedule;
	std::uint64_t seed = 1;
	// Top-layer training keeps all features in memory below this size and
	// recomputes them per minibatch above it.
	std::size_t feature_cache_bytes = std::size_t(2) << 30;

	void validate() const
	{
		if (minibatch_size == 0) {
			throw ConfigError("minibatch size must be at least 1");
		}
		if (epochs > schedule.length()) {
			throw ConfigError(std::to_string(epochs) + " epochs exceed the " + to_string(schedule.kind) + " schedule length " + std::to_string(schedule.length()));
		}
	}

	friend bool operator==(const SupervisedConfig&, const SupervisedConfig&) = default;
};

struct EpochRecord {
	std::size_t epoch = 0;
	double lr = 0.0;
	double train_error = 0.0; // percent, over the minibatches of the epoch
	double test_error = 0.0;  // percent, NaN when no test set was given
	double loss = 0.0;        // mean training cross-entropy over the epoch
};

struct TrainingLog {
	std::vector<EpochRecord> epochs;

	void write_csv(std::ostream& out) const
	{
		out << "epoch,lr,train_error,test_error,loss\n";
		char buf[160];
		for (const auto& r : epochs) {
			std::snprintf(buf, sizeof(buf), "%zu,%.6g,%.4f,%.4f,%.6f\n", r.epoch, r.lr, r.train_error, r.test_error, r.loss);
			out << buf;
		}
	}
};

using EpochObserver = std::function<void(const EpochRecord&)>;

// Minibatch order for one epoch, fixed by (seed, epoch).
inline std::vector<std::uint32_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch)
{
	Random rng = Random::derived(seed, 0x50000ULL + epoch);
	return random_permutation(count, rng);
}

// ---------------------------------------------------------------------------
// Classifier gradients. Losses and gradients are means over the minibatch.

template <class T>
struct ClassifierGradients {
	double loss = 0.0;
	std::size_t errors = 0;
	Matrix<T> weights;
	std::vector<T> biases;
};

// features: B x D rows of the minibatch.
template <class T>
ClassifierGradients<T> classifier_gradients(const Classifier<T>& classifier, const Matrix<T>& features, std::span<const std::uint16_t> labels)
{
	const std::size_t batch = features.rows();
	const std::size_t classes = classifier.classes();
	if (features.cols() != classifier.feature_dim() || labels.size() != batch) {
		throw ConfigError("classifier_gradients: shape mismatch");
	}
	Matrix<T> delta = gemm(features, classifier.weights);
	ClassifierGradients<T> out;
	out.biases.assign(classes, T(0));
	const T inv_batch = T(1) / static_cast<T>(batch);
	for (std::size_t b = 0; b < batch; ++b) {
		auto row = delta.row(b);
		for (std::size_t c = 0; c < classes; ++c) {
			row[c] += classifier.biases[c];
		}
		if (argmax<T>(row) != labels[b]) {
			++out.errors;
		}
		softmax_inplace<T>(row);
		out.loss += static_cast<double>(cross_entropy<T>(row, labels[b]));
		row[labels[b]] -= T(1);
		for (std::size_t c = 0; c < classes; ++c) {
			row[c] *= inv_batch;
			out.biases[c] += row[c];
		}
	}
	out.loss /= static_cast<double>(batch);
	out.weights = gemm(features, delta, true, false);
	return out;
}

template <class T>
double classifier_loss(const Classifier<T>& classifier, const Matrix<T>& features, std::span<const std::uint16_t> labels)
{
	double loss = 0.0;
	std::vector<T> logits(classifier.classes());
	for (std::size_t b = 0; b < features.rows(); ++b) {
		apply_classifier<T>(classifier, features.row(b), logits);
		softmax_inplace<T>(logits);
		loss += static_cast<double>(cross_entropy<T>(logits, labels[b]));
	}
	return loss / static_cast<double>(features.rows());
}

// Features of every image, one row each.
template <class T>
Matrix<T> feature_matrix(const BlockArchitecture<T>& arch, const ImageDataset& dataset, std::span<const std::uint32_t> indices)
{
	const std::size_t dim = arch.feature_dim();
	Matrix<T> features(indices.size(), dim);
	parallel_for(indices.size(), [&](std::size_t r) {
		const auto f = extract_features(arch, image_to_float<T>(dataset, indices[r]));
		std::copy(f.begin(), f.end(), features.row(r).begin());
	});
	return features;
}

inline std::vector<std::uint32_t> all_indices(std::size_t count)
{
	std::vector<std::uint32_t> idx(count);
	for (std::size_t i = 0; i < count; ++i) {
		idx[i] = static_cast<std::uint32_t>(i);
	}
	return idx;
}

using FeatureFetcher = std::function<Matrix<float>(std::span<const std::uint32_t>)>;

// Adam on the classifier alone. `fetch` returns feature rows for training
// indices; `test_logits` (optional) scores the held-out set after each epoch.
inline TrainingLog train_classifier(Classifier<float>& classifier, std::span<const std::uint16_t> train_labels, const FeatureFetcher& fetch,
	const std::function<double(const Classifier<float>&)>& test_error, const SupervisedConfig& config, const EpochObserver& observer = {})
{
	config.validate();
	const std::size_t count = train_labels.size();
	if (count == 0) {
		throw ConfigError("empty training set");
	}
	AdamState<float> weight_state(classifier.weights.size());
	AdamState<float> bias_state(classifier.biases.size());
	TrainingLog log;
	std::vector<std::uint16_t> labels;
	for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
		const double lr = config.schedule.at(epoch);
		const auto order = epoch_order(count, config.seed, epoch);
		double loss_sum = 0.0;
		std::size_t errors = 0;
		for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
			const std::size_t n = std::min(config.minibatch_size, order.size() - start);
			const std::span<const std::uint32_t> ids(order.data() + start, n);
			const Matrix<float> batch = fetch(ids);
			labels.resize(n);
			for (std::size_t b = 0; b < n; ++b) {
				labels[b] = train_labels[ids[b]];
			}
			const auto grads = classifier_gradients(classifier, batch, labels);
			if (!std::isfinite(grads.loss)) {
				throw TrainingError("non-finite loss in epoch " + std::to_string(epoch));
			}
			loss_sum += grads.loss * static_cast<double>(n);
			errors += grads.errors;
			adam_step<float>(classifier.weights.values(), grads.weights.values(), weight_state, lr);
			adam_step<float>(classifier.biases, grads.biases, bias_state, lr);
		}
		EpochRecord record;
		record.epoch = epoch;
		record.lr = lr;
		record.loss = loss_sum / static_cast<double>(count);
		record.train_error = 100.0 * static_cast<double>(errors) / static_cast<double>(count);
		record.test_error = test_error ? test_error(classifier) : std::nan("");
		log.epochs.push_back(record);
		if (observer) {
			observer(record);
		}
	}
	return log;
}

// Logits for precomputed feature rows; same accumulation order as
// apply_classifier.
template <class T>
Matrix<T> classifier_logits(const Classifier<T>& classifier, const Matrix<T>& features)
{
	if (features.cols() != classifier.feature_dim()) {
		throw ConfigError("classifier_logits: feature width mismatch");
	}
	Matrix<T> logits(features.rows(), classifier.classes());
	for (std::size_t r = 0; r < logits.rows(); ++r) {
		std::copy(classifier.biases.begin(), classifier.biases.end(), logits.row(r).begin());
	}
	gemm_kernel<T>(features.values(), classifier.weights.values(), logits.values(), features.rows(), features.cols(), classifier.classes(), true);
	return logits;
}

// Percent top-1 error of a classifier on precomputed features.
inline double classifier_error(const Classifier<float>& classifier, const Matrix<float>& features, std::span<const std::uint16_t> labels)
{
	return top_k_error(classifier_logits(classifier, features), labels, 1);
}

// Trains only the classifier of `arch`, starting from zero; the convolution
// blocks stay frozen. Features are computed once when they fit in
// config.feature_cache_bytes and per minibatch otherwise.
inline TrainingLog train_top_layer(BlockArchitecture<float>& arch, const ImageDataset& train, const ImageDataset* test, const SupervisedConfig& config, const EpochObserver& observer = {})
{
	config.validate();
	const std::size_t dim = arch.feature_dim();
	arch.classifier = zero_classifier<float>(dim, train.class_count);

	FeatureFetcher fetch;
	Matrix<float> train_features;
	if (train.size() * dim * sizeof(float) <= config.feature_cache_bytes) {
		train_features = feature_matrix(arch, train, all_indices(train.size()));
		fetch = [&](std::span<const std::uint32_t> ids) {
			Matrix<float> batch(ids.size(), dim);
			for (std::size_t b = 0; b < ids.size(); ++b) {
				const auto src = train_features.row(ids[b]);
				std::copy(src.begin(), src.end(), batch.row(b).begin());
			}
			return batch;
		};
	} else {
		fetch = [&](std::span<const std::uint32_t> ids) { return feature_matrix(arch, train, ids); };
	}

	std::function<double(const Classifier<float>&)> test_error;
	Matrix<float> test_features;
	if (test != nullptr) {
		if (test->size() * dim * sizeof(float) <= config.feature_cache_bytes) {
			test_features = feature_matrix(arch, *test, all_indices(test->size()));
			test_error = [&](const Classifier<float>& c) { return classifier_error(c, test_features, test->labels); };
		} else {
			test_error = [&](const Classifier<float>& c) {
				BlockArchitecture<float> probe = arch;
				probe.classifier = c;
				return top_k_error(dataset_logits(probe, *test), test->labels, 1);
			};
		}
	}
	return train_classifier(arch.classifier, train.labels, fetch, test_error, config, observer);
}

// ---------------------------------------------------------------------------
// End-to-end training of standard CONV networks.

// Per-block parameter gradients; empty for NNL blocks.
template <class T>
struct NetworkGradients {
	double loss = 0.0;
	std::size_t errors = 0;
	std::vector<Matrix<T>> conv_weights;
	std::vector<std::vector<T>> conv_biases;
	Matrix<T> classifier_weights;
	std::vector<T> classifier_biases;

	static NetworkGradients zeros_like(const BlockArchitecture<T>& arch)
	{
		NetworkGradients g;
		for (const auto& block : arch.blocks) {
			if (const auto* conv = std::get_if<ConvLayer<T>>(&block.conv)) {
				g.conv_weights.emplace_back(conv->weights.rows(), conv->weights.cols());
				g.conv_biases.emplace_back(conv->biases.size(), T(0));
			} else {
				g.conv_weights.emplace_back();
				g.conv_biases.emplace_back();
			}
		}
		g.classifier_weights = Matrix<T>(arch.classifier.weights.rows(), arch.classifier.weights.cols());
		g.classifier_biases.assign(arch.classifier.biases.size(), T(0));
		return g;
	}

	void add(const NetworkGradients& other)
	{
		loss += other.loss;
		errors += other.errors;
		for (std::size_t b = 0; b < conv_weights.size(); ++b) {
			auto dst = conv_weights[b].values();
			const auto src = other.conv_weights[b].values();
			for (std::size_t i = 0; i < dst.size(); ++i) {
				dst[i] += src[i];
			}
			for (std::size_t i = 0; i < conv_biases[b].size(); ++i) {
				conv_biases[b][i] += other.conv_biases[b][i];
			}
		}
		auto dst = classifier_weights.values();
		const auto src = other.classifier_weights.values();
		for (std::size_t i = 0; i < dst.size(); ++i) {
			dst[i] += src[i];
		}
		for (std::size_t i = 0; i < classifier_biases.size(); ++i) {
			classifier_biases[i] += other.classifier_biases[i];
		}
	}
};

// Accumulates one sample's gradient (already divided by the batch size via
// `weight`) into grads.
template <class T>
void accumulate_sample_gradient(const BlockArchitecture<T>& arch, const Image<T>& image, std::uint16_t label, T weight, NetworkGradients<T>& grads)
{
	const ForwardResult<T> fwd = block_forward(arch, image, true);
	std::vector<T> dlogits = fwd.logits;
	if (argmax<T>(dlogits) != label) {
		++grads.errors;
	}
	softmax_inplace<T>(dlogits);
	grads.loss += static_cast<double>(cross_entropy<T>(dlogits, label)) * static_cast<double>(weight);
	dlogits[label] -= T(1);
	for (T& d : dlogits) {
		d *= weight;
	}
	const std::size_t classes = dlogits.size();
	const std::size_t dim = fwd.features.size();
	for (std::size_t c = 0; c < classes; ++c) {
		grads.classifier_biases[c] += dlogits[c];
	}
	std::vector<T> dfeatures(dim, T(0));
	for (std::size_t d = 0; d < dim; ++d) {
		const T f = fwd.features[d];
		const auto w = arch.classifier.weights.row(d);
		auto gw = grads.classifier_weights.row(d);
		T acc = T(0);
		for (std::size_t c = 0; c < classes; ++c) {
			gw[c] += f * dlogits[c];
			acc += w[c] * dlogits[c];
		}
		dfeatures[d] = acc;
	}

	std::size_t offset = 0;
	for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
		const BlockCache<T>& cache = fwd.cache[b];
		const std::size_t pooled = cache.argmax.size();
		if (!arch.blocks[b].is_nnl()) {
			const std::size_t positions = cache.preactivation.rows();
			auto& gw = grads.conv_weights[b];
			auto& gb = grads.conv_biases[b];
			// Max-pool routes each pooled gradient to its argmax; ReLU passes it
			// only where the pre-activation was positive.
			for (std::size_t o = 0; o < pooled; ++o) {
				const T g = dfeatures[offset + o];
				if (g == T(0)) {
					continue;
				}
				const std::size_t src = cache.argmax[o];
				const std::size_t channel = src / positions;
				const std::size_t pos = src % positions;
				if (!(cache.preactivation(pos, channel) > T(0))) {
					continue;
				}
				gb[channel] += g;
				auto row = gw.row(channel);
				const auto patch = cache.patches.row(pos);
				for (std::size_t i = 0; i < row.size(); ++i) {
					row[i] += g * patch[i];
				}
			}
		}
		offset += pooled;
	}
}

// Mean loss and gradients over a minibatch. Samples are processed in fixed
// groups whose partial sums are added in group order, so the result does not
// depend on the thread count.
template <class T>
NetworkGradients<T> network_gradients(const BlockArchitecture<T>& arch, std::span<const Image<T>> images, std::span<const std::uint16_t> labels)
{
	constexpr std::size_t kGroup = 8;
	const std::size_t n = images.size();
	const std::size_t groups = (n + kGroup - 1) / kGroup;
	std::vector<NetworkGradients<T>> partial(groups);
	const T weight = T(1) / static_cast<T>(n);
	parallel_for(groups, [&](std::size_t g) {
		partial[g] = NetworkGradients<T>::zeros_like(arch);
		for (std::size_t i = g * kGroup; i < std::min(n, (g + 1) * kGroup); ++i) {
			accumulate_sample_gradient(arch, images[i], labels[i], weight, partial[g]);
		}
	});
	NetworkGradients<T> total = NetworkGradients<T>::zeros_like(arch);
	for (const auto& p : partial) {
		total.add(p);
	}
	return total;
}

template <class T>
double network_loss(const BlockArchitecture<T>& arch, std::span<const Image<T>> images, std::span<const std::uint16_t> labels)
{
	double loss = 0.0;
	for (std::size_t i = 0; i < images.size(); ++i) {
		auto logits = block_forward(arch, images[i], false).logits;
		softmax_inplace<T>(logits);
		loss += static_cast<double>(cross_entropy<T>(logits, labels[i]));
	}
	return loss / static_cast<double>(images.size());
}

// Shape of one CONV block before initialization.
struct ConvBlockSpec {
	std::size_t channels = 0;
	std::size_t window = 0;
	std::size_t stride = 1;
	MaxPoolLayer pool;
};

// Conv weights ~ N(0, 1/N), classifier ~ N(0, 1/feature_dim), zero biases.
template <class T>
BlockArchitecture<T> init_conv_architecture(std::span<const ConvBlockSpec> specs, std::size_t classes, std::uint64_t seed, std::size_t input_side = 32)
{
	Random rng = Random::derived(seed, 0xc0417ULL);
	BlockArchitecture<T> arch;
	arch.input_side = input_side;
	for (const auto& spec : specs) {
		ConvLayer<T> conv;
		conv.window = spec.window;
		conv.stride = spec.stride;
		conv.weights = Matrix<T>(spec.channels, patch_length(spec.window));
		const double scale = 1.0 / std::sqrt(static_cast<double>(conv.weights.cols()));
		for (T& w : conv.weights.values()) {
			w = static_cast<T>(rng.normal() * scale);
		}
		conv.biases.assign(spec.channels, T(0));
		arch.blocks.push_back(Block<T>{std::move(conv), spec.pool});
	}
	const std::size_t dim = arch.feature_dim();
	arch.classifier = zero_classifier<T>(dim, classes);
	const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
	for (T& w : arch.classifier.weights.values()) {
		w = static_cast<T>(rng.normal() * scale);
	}
	return arch;
}

// Backprop through every CONV block and the classifier with Adam.
inline TrainingLog train_end_to_end(BlockArchitecture<float>& arch, const ImageDataset& train, const ImageDataset* test, const SupervisedConfig& config, const EpochObserver& observer = {})
{
	config.validate();
	arch.validate();
	if (train.size() == 0) {
		throw ConfigError("empty training set");
	}
	for (const auto& block : arch.blocks) {
		if (block.is_nnl()) {
			throw ConfigError("end-to-end training needs CONV blocks; NNL blocks are trained by the local rule");
		}
	}
	if (arch.classifier.classes() != train.class_count) {
		throw ConfigError("classifier class count does not match the training set");
	}

	std::vector<AdamState<float>> conv_w_state;
	std::vector<AdamState<float>> conv_b_state;
	for (const auto& block : arch.blocks) {
		const auto& conv = std::get<ConvLayer<float>>(block.conv);
		conv_w_state.emplace_back(conv.weights.size());
		conv_b_state.emplace_back(conv.biases.size());
	}
	AdamState<float> cls_w_state(arch.classifier.weights.size());
	AdamState<float> cls_b_state(arch.classifier.biases.size());

	TrainingLog log;
	std::vector<Image<float>> images;
	std::vector<std::uint16_t> labels;
	for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
		const double lr = config.schedule.at(epoch);
		const auto order = epoch_order(train.size(), config.seed, epoch);
		double loss_sum = 0.0;
		std::size_t errors = 0;
		for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
			const std::size_t n = std::min(config.minibatch_size, order.size() - start);
			images.resize(n);
			labels.resize(n);
			for (std::size_t b = 0; b < n; ++b) {
				images[b] = image_to_float<float>(train, order[start + b]);
				labels[b] = train.labels[order[start + b]];
			}
			const auto grads = network_gradients<float>(arch, images, labels);
			if (!std::isfinite(grads.loss)) {
				throw TrainingError("non-finite loss in epoch " + std::to_string(epoch));
			}
			loss_sum += grads.loss * static_cast<double>(n);
			errors += grads.errors;
			for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
				auto& conv = std::get<ConvLayer<float>>(arch.blocks[b].conv);
				adam_step<float>(conv.weights.values(), grads.conv_weights[b].values(), conv_w_state[b], lr);
				adam_step<float>(conv.biases, grads.conv_biases[b], conv_b_state[b], lr);
			}
			adam_step<float>(arch.classifier.weights.values(), grads.classifier_weights.values(), cls_w_state, lr);
			adam_step<float>(arch.classifier.biases, grads.classifier_biases, cls_b_state, lr);
		}
		EpochRecord record;
		record.epoch = epoch;
		record.lr = lr;
		record.loss = loss_sum / static_cast<double>(train.size());
		record.train_error = 100.0 * static_cast<double>(errors) / static_cast<double>(train.size());
		record.test_error = test != nullptr ? top_k_error(dataset_logits(arch, *test), test->labels, 1) : std::nan("");
		log.epochs.push_back(record);
		if (observer) {
			observer(record);
		}
	}
	return log;
}

} // namespace nnl
