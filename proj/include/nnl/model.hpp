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

#include <nnl/binary_io.hpp>
#include <nnl/hebbian.hpp>
#include <nnl/matrix.hpp>
#include <nnl/patches.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace nnl {

// Channel-major activations: value(c, r, x) = values[(c * height + r) * width + x].
template <class T>
struct FeatureMap {
	std::size_t channels = 0;
	std::size_t height = 0;
	std::size_t width = 0;
	std::vector<T> values;

	FeatureMap() = default;
	FeatureMap(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), values(c * h * w, T(0)) {}

	T& at(std::size_t c, std::size_t r, std::size_t x) { return values[(c * height + r) * width + x]; }
	const T& at(std::size_t c, std::size_t r, std::size_t x) const { return values[(c * height + r) * width + x]; }
};

// Convolution with learned, frozen filters: every patch is L2-normalized
// before the dot product and the result passes through [ReLU(x)]^power.
struct NnlConvLayer {
	FilterBank bank;
	int power = 1;
	std::size_t stride = 1;

	std::size_t window() const { return bank.window; }
	std::size_t channels() const { return bank.channels(); }
};

// Standard convolution with biases and ReLU, no patch normalization.
template <class T>
struct ConvLayer {
	Matrix<T> weights; // K x (W*W*3)
	std::vector<T> biases;
	std::size_t window = 0;
	std::size_t stride = 1;

	std::size_t channels() const { return weights.rows(); }
};

struct MaxPoolLayer {
	std::size_t window = 1;
	std::size_t stride = 1;
};

template <class T>
struct Block {
	std::variant<NnlConvLayer, ConvLayer<T>> conv;
	MaxPoolLayer pool;

	bool is_nnl() const { return std::holds_alternative<NnlConvLayer>(conv); }
	std::size_t window() const
	{
		return std::visit([](const auto& layer) -> std::size_t {
			if constexpr (std::is_same_v<std::decay_t<decltype(layer)>, NnlConvLayer>) {
				return layer.window();
			} else {
				return layer.window;
			}
		}, conv);
	}
	std::size_t stride() const
	{
		return std::visit([](const auto& layer) { return layer.stride; }, conv);
	}
	std::size_t channels() const
	{
		return std::visit([](const auto& layer) { return layer.channels(); }, conv);
	}
};

template <class T>
struct Classifier {
	Matrix<T> weights; // feature_dim x classes
	std::vector<T> biases;

	std::size_t feature_dim() const { return weights.rows(); }
	std::size_t classes() const { return weights.cols(); }
};

// Block output sizes for a square input.
struct BlockShape {
	std::size_t conv_side = 0;
	std::size_t pooled_side = 0;
	std::size_t channels = 0;

	std::size_t features() const { return pooled_side * pooled_side * channels; }
};

// Parallel convolution blocks over the same input; pooled maps are flattened
// block-major, then channel, row, column, and fed to an affine softmax layer.
template <class T>
struct BlockArchitecture {
	std::size_t input_side = 32;
	std::vector<Block<T>> blocks;
	Classifier<T> classifier;

	std::vector<BlockShape> shapes() const
	{
		std::vector<BlockShape> out;
		for (const auto& block : blocks) {
			BlockShape s;
			s.channels = block.channels();
			s.conv_side = patch_grid_side(input_side, block.window(), block.stride());
			if (block.pool.window == 0 || block.pool.stride == 0) {
				throw ConfigError("pooling window and stride must be positive");
			}
			if (block.pool.window > s.conv_side) {
				throw ConfigError("pooling window " + std::to_string(block.pool.window) + " exceeds feature map side " + std::to_string(s.conv_side));
			}
			s.pooled_side = (s.conv_side - block.pool.window) / block.pool.stride + 1;
			out.push_back(s);
		}
		return out;
	}

	std::size_t feature_dim() const
	{
		std::size_t total = 0;
		for (const auto& s : shapes()) {
			total += s.features();
		}
		return total;
	}

	void validate() const
	{
		if (blocks.empty()) {
			throw ConfigError("architecture has no blocks");
		}
		const std::size_t dim = feature_dim();
		if (classifier.feature_dim() != dim) {
			throw ConfigError("classifier expects " + std::to_string(classifier.feature_dim()) + " features but blocks produce " + std::to_string(dim));
		}
		if (classifier.biases.size() != classifier.classes()) {
			throw ConfigError("classifier bias count does not match class count");
		}
	}

	template <class U>
	BlockArchitecture<U> cast() const
	{
		BlockArchitecture<U> out;
		out.input_side = input_side;
		for (const auto& block : blocks) {
			Block<U> b;
			b.pool = block.pool;
			if (const auto* nnl = std::get_if<NnlConvLayer>(&block.conv)) {
				b.conv = *nnl;
			} else {
				const auto& conv = std::get<ConvLayer<T>>(block.conv);
				b.conv = ConvLayer<U>{conv.weights.template cast<U>(), std::vector<U>(conv.biases.begin(), conv.biases.end()), conv.window, conv.stride};
			}
			out.blocks.push_back(std::move(b));
		}
		out.classifier.weights = classifier.weights.template cast<U>();
		out.classifier.biases.assign(classifier.biases.begin(), classifier.biases.end());
		return out;
	}
};

// Zero-initialized classifier sized for arch.
template <class T>
Classifier<T> zero_classifier(std::size_t feature_dim, std::size_t classes)
{
	return Classifier<T>{Matrix<T>(feature_dim, classes), std::vector<T>(classes, T(0))};
}

// Per-block settings for wrapping learned filter banks into a network.
struct NnlBlockSpec {
	int power = 1;
	std::size_t stride = 1;
	MaxPoolLayer pool;
};

// NNL network over `banks` with a zero classifier.
inline BlockArchitecture<float> make_nnl_architecture(std::span<const FilterBank> banks, std::span<const NnlBlockSpec> specs, std::size_t classes, std::size_t input_side = 32)
{
	if (banks.size() != specs.size()) {
		throw ConfigError("got " + std::to_string(banks.size()) + " filter banks for " + std::to_string(specs.size()) + " blocks");
	}
	BlockArchitecture<float> arch;
	arch.input_side = input_side;
	for (std::size_t b = 0; b < banks.size(); ++b) {
		banks[b].validate();
		if (specs[b].power < 1) {
			throw ConfigError("activation power must be at least 1");
		}
		arch.blocks.push_back(Block<float>{NnlConvLayer{banks[b], specs[b].power, specs[b].stride}, specs[b].pool});
	}
	arch.classifier = zero_classifier<float>(arch.feature_dim(), classes);
	return arch;
}

// ---------------------------------------------------------------------------
// Forward passes

// positions x K currents of normalized patches against the filters, before
// the power nonlinearity. Patches are normalized in place.
template <class T>
Matrix<T> nnl_conv_currents(const NnlConvLayer& layer, Matrix<T>& patches)
{
	for (std::size_t p = 0; p < patches.rows(); ++p) {
		l2_normalize_inplace<T>(patches.row(p));
	}
	const Matrix<T> filters_t = layer.bank.weights.template cast<T>().transposed();
	Matrix<T> currents(patches.rows(), layer.channels());
	gemm_kernel<T>(patches.values(), filters_t.values(), currents.values(), patches.rows(), patches.cols(), layer.channels());
	return currents;
}

template <class T>
FeatureMap<T> to_channel_major(const Matrix<T>& by_position, std::size_t side)
{
	FeatureMap<T> map(by_position.cols(), side, side);
	for (std::size_t p = 0; p < by_position.rows(); ++p) {
		for (std::size_t c = 0; c < by_position.cols(); ++c) {
			map.values[c * by_position.rows() + p] = by_position(p, c);
		}
	}
	return map;
}

template <class T>
FeatureMap<T> nnl_conv_forward(const NnlConvLayer& layer, const Image<T>& image)
{
	Matrix<T> patches = extract_patches(image, layer.window(), layer.stride);
	Matrix<T> currents = nnl_conv_currents(layer, patches);
	for (T& x : currents.values()) {
		x = rectified_power(x, layer.power);
	}
	return to_channel_major(currents, patch_grid_side(image.height, layer.window(), layer.stride));
}

// positions x K pre-activations (dot product + bias).
template <class T>
Matrix<T> conv_preactivation(const ConvLayer<T>& layer, const Matrix<T>& patches)
{
	if (patches.cols() != layer.weights.cols()) {
		throw ConfigError("conv: patch length does not match filter length");
	}
	const Matrix<T> filters_t = layer.weights.transposed();
	Matrix<T> pre(patches.rows(), layer.channels());
	for (std::size_t p = 0; p < pre.rows(); ++p) {
		std::copy(layer.biases.begin(), layer.biases.end(), pre.row(p).begin());
	}
	gemm_kernel<T>(patches.values(), filters_t.values(), pre.values(), patches.rows(), patches.cols(), layer.channels(), true);
	return pre;
}

template <class T>
FeatureMap<T> conv_forward(const ConvLayer<T>& layer, const Image<T>& image)
{
	const Matrix<T> patches = extract_patches(image, layer.window, layer.stride);
	Matrix<T> pre = conv_preactivation(layer, patches);
	for (T& x : pre.values()) {
		x = x > T(0) ? x : T(0);
	}
	return to_channel_major(pre, patch_grid_side(image.height, layer.window, layer.stride));
}

template <class T>
struct PoolResult {
	FeatureMap<T> pooled;
	std::vector<std::uint32_t> argmax; // flat index into the source map values
};

// Max over each window (no padding); ties keep the first index in row-major
// window order.
template <class T>
PoolResult<T> maxpool_forward(const MaxPoolLayer& pool, const FeatureMap<T>& map)
{
	if (pool.window == 0 || pool.stride == 0) {
		throw ConfigError("pooling window and stride must be positive");
	}
	if (pool.window > map.height || pool.window > map.width) {
		throw ConfigError("pooling window exceeds feature map");
	}
	const std::size_t out_h = (map.height - pool.window) / pool.stride + 1;
	const std::size_t out_w = (map.width - pool.window) / pool.stride + 1;
	PoolResult<T> result;
	result.pooled = FeatureMap<T>(map.channels, out_h, out_w);
	result.argmax.resize(result.pooled.values.size());
	for (std::size_t c = 0; c < map.channels; ++c) {
		for (std::size_t oy = 0; oy < out_h; ++oy) {
			for (std::size_t ox = 0; ox < out_w; ++ox) {
				std::size_t best = (c * map.height + oy * pool.stride) * map.width + ox * pool.stride;
				T best_value = map.values[best];
				for (std::size_t dy = 0; dy < pool.window; ++dy) {
					const std::size_t base = (c * map.height + oy * pool.stride + dy) * map.width + ox * pool.stride;
					for (std::size_t dx = 0; dx < pool.window; ++dx) {
						if (map.values[base + dx] > best_value) {
							best_value = map.values[base + dx];
							best = base + dx;
						}
					}
				}
				const std::size_t o = (c * out_h + oy) * out_w + ox;
				result.pooled.values[o] = best_value;
				result.argmax[o] = static_cast<std::uint32_t>(best);
			}
		}
	}
	return result;
}

// Everything backprop needs from one block.
template <class T>
struct BlockCache {
	Matrix<T> patches;        // positions x N (normalized for NNL blocks)
	Matrix<T> preactivation;  // positions x K, before the nonlinearity
	FeatureMap<T> activation; // channel-major, after the nonlinearity
	std::vector<std::uint32_t> argmax;
	bool normalized_patches = false;
};

template <class T>
struct ForwardResult {
	std::vector<T> features;
	std::vector<T> logits;
	std::vector<BlockCache<T>> cache;
};

template <class T>
void apply_classifier(const Classifier<T>& classifier, std::span<const T> features, std::span<T> logits)
{
	std::copy(classifier.biases.begin(), classifier.biases.end(), logits.begin());
	gemm_kernel<T>(features, classifier.weights.values(), logits, 1, classifier.feature_dim(), classifier.classes(), true);
}

template <class T>
BlockCache<T> run_block(const Block<T>& block, const Image<T>& image)
{
	BlockCache<T> cache;
	if (const auto* nnl = std::get_if<NnlConvLayer>(&block.conv)) {
		cache.patches = extract_patches(image, nnl->window(), nnl->stride);
		cache.preactivation = nnl_conv_currents(*nnl, cache.patches);
		cache.normalized_patches = true;
		Matrix<T> act = cache.preactivation;
		for (T& x : act.values()) {
			x = rectified_power(x, nnl->power);
		}
		cache.activation = to_channel_major(act, patch_grid_side(image.height, nnl->window(), nnl->stride));
	} else {
		const auto& conv = std::get<ConvLayer<T>>(block.conv);
		cache.patches = extract_patches(image, conv.window, conv.stride);
		cache.preactivation = conv_preactivation(conv, cache.patches);
		Matrix<T> act = cache.preactivation;
		for (T& x : act.values()) {
			x = x > T(0) ? x : T(0);
		}
		cache.activation = to_channel_major(act, patch_grid_side(image.height, conv.window, conv.stride));
	}
	return cache;
}

// Pooled, concatenated block outputs. When `cache` is non-null the per-block
// intermediates are kept for backprop.
template <class T>
std::vector<T> extract_features(const BlockArchitecture<T>& arch, const Image<T>& image, std::vector<BlockCache<T>>* cache = nullptr)
{
	// Any square side is accepted; block_forward rejects a side whose pooled
	// output does not fit the classifier.
	if (image.height != image.width) {
		throw ConfigError("image is " + std::to_string(image.height) + "x" + std::to_string(image.width) + ", blocks expect a square input");
	}
	std::vector<T> features;
	for (const auto& block : arch.blocks) {
		BlockCache<T> bc = run_block(block, image);
		PoolResult<T> pooled = maxpool_forward(block.pool, bc.activation);
		features.insert(features.end(), pooled.pooled.values.begin(), pooled.pooled.values.end());
		if (cache != nullptr) {
			bc.argmax = std::move(pooled.argmax);
			cache->push_back(std::move(bc));
		}
	}
	return features;
}

template <class T>
ForwardResult<T> block_forward(const BlockArchitecture<T>& arch, const Image<T>& image, bool keep_cache = true)
{
	ForwardResult<T> result;
	result.features = extract_features(arch, image, keep_cache ? &result.cache : nullptr);
	if (result.features.size() != arch.classifier.feature_dim()) {
		throw ConfigError("concatenated features (" + std::to_string(result.features.size()) + ") do not match classifier input (" + std::to_string(arch.classifier.feature_dim()) + ")");
	}
	result.logits.resize(arch.classifier.classes());
	apply_classifier<T>(arch.classifier, result.features, result.logits);
	return result;
}

// ---------------------------------------------------------------------------
// .nnlm: "NNLM", u32 version=1, u32 block count; per block: u32 type (0=NNL,
// 1=CONV), then an embedded .nnlf (NNL) or u32 K, u32 W, u32 colors=3, K*N f32
// weights, K f32 biases (CONV); then u32 n, ST, W_p, ST_p. Finally u32
// feature_dim, u32 classes, feature_dim*classes f32 weights, classes f32
// biases. The input side is not stored: 32 is assumed when it yields
// feature_dim, otherwise the smallest side that does.

inline constexpr std::uint32_t kModelVersion = 1;

inline void write_model(std::ostream& out, const BlockArchitecture<float>& arch)
{
	arch.validate();
	io::write_magic(out, "NNLM");
	io::write_le<std::uint32_t>(out, kModelVersion);
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arch.blocks.size()));
	for (const auto& block : arch.blocks) {
		std::uint32_t power = 1;
		if (const auto* nnl = std::get_if<NnlConvLayer>(&block.conv)) {
			io::write_le<std::uint32_t>(out, 0);
			write_filter_bank(out, nnl->bank);
			power = static_cast<std::uint32_t>(nnl->power);
		} else {
			const auto& conv = std::get<ConvLayer<float>>(block.conv);
			io::write_le<std::uint32_t>(out, 1);
			io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(conv.channels()));
			io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(conv.window));
			io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(kColorChannels));
			io::write_array<float>(out, conv.weights.values());
			io::write_array<float>(out, conv.biases);
		}
		io::write_le<std::uint32_t>(out, power);
		io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(block.stride()));
		io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(block.pool.window));
		io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(block.pool.stride));
	}
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arch.classifier.feature_dim()));
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arch.classifier.classes()));
	io::write_array<float>(out, arch.classifier.weights.values());
	io::write_array<float>(out, arch.classifier.biases);
}

inline BlockArchitecture<float> read_model(std::istream& in)
{
	io::expect_magic(in, "NNLM");
	const auto version = io::read_le<std::uint32_t>(in, "version");
	if (version != kModelVersion) {
		throw FormatError("unsupported model version " + std::to_string(version));
	}
	const auto block_count = io::read_le<std::uint32_t>(in, "block count");
	if (block_count == 0 || block_count > 4096) {
		throw FormatError("implausible block count " + std::to_string(block_count));
	}
	BlockArchitecture<float> arch;
	for (std::uint32_t b = 0; b < block_count; ++b) {
		Block<float> block;
		const auto type = io::read_le<std::uint32_t>(in, "block type");
		if (type == 0) {
			block.conv = NnlConvLayer{read_filter_bank(in), 1, 1};
		} else if (type == 1) {
			const auto channels = io::read_le<std::uint32_t>(in, "conv channels");
			const auto window = io::read_le<std::uint32_t>(in, "conv window");
			const auto colors = io::read_le<std::uint32_t>(in, "conv colors");
			if (colors != kColorChannels || window == 0 || window > 1024 || channels > (1u << 24)) {
				throw FormatError("bad conv block header");
			}
			ConvLayer<float> conv;
			conv.window = window;
			conv.weights = Matrix<float>(channels, patch_length(window));
			conv.biases.resize(channels);
			io::read_array<float>(in, conv.weights.values(), "conv weights");
			io::read_array<float>(in, conv.biases, "conv biases");
			block.conv = std::move(conv);
		} else {
			throw FormatError("unknown block type " + std::to_string(type));
		}
		const auto power = io::read_le<std::uint32_t>(in, "power");
		const auto stride = io::read_le<std::uint32_t>(in, "stride");
		block.pool.window = io::read_le<std::uint32_t>(in, "pool window");
		block.pool.stride = io::read_le<std::uint32_t>(in, "pool stride");
		if (stride == 0 || power == 0 || power > 100000) {
			throw FormatError("bad block parameters");
		}
		std::visit([&](auto& layer) { layer.stride = stride; }, block.conv);
		if (auto* nnl = std::get_if<NnlConvLayer>(&block.conv)) {
			nnl->power = static_cast<int>(power);
		}
		arch.blocks.push_back(std::move(block));
	}
	const auto feature_dim = io::read_le<std::uint32_t>(in, "feature dim");
	const auto classes = io::read_le<std::uint32_t>(in, "class count");
	if (classes == 0 || classes > 65536 || feature_dim > (1u << 28)) {
		throw FormatError("bad classifier header");
	}
	arch.classifier = zero_classifier<float>(feature_dim, classes);
	io::read_array<float>(in, arch.classifier.weights.values(), "classifier weights");
	io::read_array<float>(in, arch.classifier.biases, "classifier biases");

	std::size_t min_side = 1;
	for (const auto& block : arch.blocks) {
		min_side = std::max(min_side, block.window());
	}
	auto fits = [&](std::size_t side) {
		arch.input_side = side;
		try {
			return arch.feature_dim() == feature_dim;
		} catch (const ConfigError&) {
			return false;
		}
	};
	if (fits(32)) {
		return arch;
	}
	for (std::size_t side = min_side; side <= 4096; ++side) {
		if (fits(side)) {
			return arch;
		}
	}
	throw FormatError("no input size matches classifier feature dimension " + std::to_string(feature_dim));
}

inline void save_model(const BlockArchitecture<float>& arch, const std::filesystem::path& path)
{
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write " + path.string());
	}
	write_model(out, arch);
	if (!out) {
		throw FormatError("write failed for " + path.string());
	}
}

inline BlockArchitecture<float> load_model(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path.string());
	}
	return read_model(in);
}

} // namespace nnl
