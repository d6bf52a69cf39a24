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
#include <nnl/matrix.hpp>
#include <nnl/model.hpp>
#include <nnl/parallel.hpp>

#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// Percentage of samples whose label is not among the k largest logits. Ties
// rank the lower class index first.
template <class T>
double top_k_error(const Matrix<T>& logits, std::span<const std::uint16_t> labels, std::size_t k)
{
	if (logits.rows() != labels.size()) {
		throw ConfigError("top_k_error: logits and labels differ in length");
	}
	if (k == 0 || k > logits.cols()) {
		throw ConfigError("top_k_error: k must be in [1, class count]");
	}
	if (labels.empty()) {
		return 0.0;
	}
	std::size_t wrong = 0;
	for (std::size_t i = 0; i < logits.rows(); ++i) {
		const auto row = logits.row(i);
		const std::size_t label = labels[i];
		if (label >= row.size()) {
			throw ConfigError("top_k_error: label out of range");
		}
		std::size_t ahead = 0;
		for (std::size_t c = 0; c < row.size(); ++c) {
			if (row[c] > row[label] || (row[c] == row[label] && c < label)) {
				++ahead;
			}
		}
		if (ahead >= k) {
			++wrong;
		}
	}
	return 100.0 * static_cast<double>(wrong) / static_cast<double>(labels.size());
}

// Logits for every image in a dataset, optionally after multiplying the
// float image by `scale`.
template <class T>
Matrix<T> dataset_logits(const BlockArchitecture<T>& arch, const ImageDataset& dataset, double scale = 1.0)
{
	Matrix<T> logits(dataset.size(), arch.classifier.classes());
	parallel_for(dataset.size(), [&](std::size_t i) {
		Image<T> image = image_to_float<T>(dataset, i);
		if (scale != 1.0) {
			for (T& p : image.pixels) {
				p = static_cast<T>(p * static_cast<T>(scale));
			}
		}
		const auto out = block_forward(arch, image, false);
		std::copy(out.logits.begin(), out.logits.end(), logits.row(i).begin());
	});
	return logits;
}

template <class T>
std::vector<std::size_t> predictions(const Matrix<T>& logits)
{
	std::vector<std::size_t> out(logits.rows());
	for (std::size_t i = 0; i < logits.rows(); ++i) {
		out[i] = argmax<T>(logits.row(i));
	}
	return out;
}

struct EvalReport {
	std::string dataset;
	double top1_error = 0.0;
	double top5_error = 0.0;
	std::vector<double> per_class_errors;
	std::optional<ShadowSpec> shadow;
	double scale = 1.0;
	std::size_t n_samples = 0;

	void write_csv(std::ostream& out, bool header = true) const
	{
		if (header) {
			out << "dataset,n_samples,shadow_columns,shadow_intensity,scale,top1_error,top5_error";
			for (std::size_t c = 0; c < per_class_errors.size(); ++c) {
				out << ",class" << c << "_error";
			}
			out << '\n';
		}
		char buf[64];
		out << dataset << ',' << n_samples << ',' << (shadow ? shadow->columns : 0) << ',';
		std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.4f,%.4f", shadow ? shadow->intensity : 1.0, scale, top1_error, top5_error);
		out << buf;
		for (const double e : per_class_errors) {
			std::snprintf(buf, sizeof(buf), ",%.4f", e);
			out << buf;
		}
		out << '\n';
	}

	void write_text(std::ostream& out) const
	{
		char buf[160];
		out << "dataset:      " << dataset << " (" << n_samples << " images)\n";
		if (shadow) {
			std::snprintf(buf, sizeof(buf), "shadow:       first %zu columns x %.3g\n", shadow->columns, shadow->intensity);
			out << buf;
		}
		if (scale != 1.0) {
			std::snprintf(buf, sizeof(buf), "scale:        %.4g\n", scale);
			out << buf;
		}
		std::snprintf(buf, sizeof(buf), "top-1 error:  %.2f%%\ntop-5 error:  %.2f%%\n", top1_error, top5_error);
		out << buf;
		for (std::size_t c = 0; c < per_class_errors.size(); ++c) {
			std::snprintf(buf, sizeof(buf), "  class %-4zu  %.2f%%\n", c, per_class_errors[c]);
			out << buf;
		}
	}
};

template <class T>
EvalReport make_report(const Matrix<T>& logits, const ImageDataset& dataset)
{
	EvalReport report;
	report.dataset = dataset.name;
	report.n_samples = dataset.size();
	report.top1_error = top_k_error(logits, dataset.labels, 1);
	report.top5_error = top_k_error(logits, dataset.labels, std::min<std::size_t>(5, logits.cols()));
	std::vector<std::size_t> seen(logits.cols(), 0);
	std::vector<std::size_t> wrong(logits.cols(), 0);
	const auto predicted = predictions(logits);
	for (std::size_t i = 0; i < dataset.size(); ++i) {
		++seen[dataset.labels[i]];
		if (predicted[i] != dataset.labels[i]) {
			++wrong[dataset.labels[i]];
		}
	}
	report.per_class_errors.resize(logits.cols());
	for (std::size_t c = 0; c < logits.cols(); ++c) {
		report.per_class_errors[c] = seen[c] == 0 ? 0.0 : 100.0 * static_cast<double>(wrong[c]) / static_cast<double>(seen[c]);
	}
	return report;
}

// Applies the shadow in 8-bit space (if any), then the uniform float scale,
// then runs the network.
inline EvalReport evaluate(const BlockArchitecture<float>& arch, const ImageDataset& dataset, const std::optional<ShadowSpec>& shadow = std::nullopt, double scale = 1.0)
{
	if (arch.classifier.classes() != dataset.class_count) {
		throw ConfigError("model has " + std::to_string(arch.classifier.classes()) + " classes, dataset " + dataset.name + " has " + std::to_string(dataset.class_count));
	}
	if (!(scale > 0.0)) {
		throw ConfigError("image scale must be positive");
	}
	const ImageDataset shadowed = shadow ? apply_shadow(dataset, *shadow) : ImageDataset{};
	const ImageDataset& input = shadow ? shadowed : dataset;
	EvalReport report = make_report(dataset_logits(arch, input, scale), dataset);
	report.shadow = shadow;
	report.scale = scale;
	return report;
}

} // namespace nnl
