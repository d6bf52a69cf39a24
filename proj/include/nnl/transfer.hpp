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
#include <nnl/hebbian.hpp>
#include <nnl/model.hpp>
#include <nnl/supervised.hpp>

#include <cmath>
#include <span>
#include <vector>

namespace nnl {

struct TransferReport {
	std::vector<EvalReport> runs;
	std::vector<TrainingLog> logs;

	double mean_top1() const
	{
		double sum = 0.0;
		for (const auto& r : runs) {
			sum += r.top1_error;
		}
		return runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
	}

	// Sample standard deviation (n - 1 denominator).
	double std_top1() const
	{
		if (runs.size() < 2) {
			return 0.0;
		}
		const double mean = mean_top1();
		double sum = 0.0;
		for (const auto& r : runs) {
			sum += (r.top1_error - mean) * (r.top1_error - mean);
		}
		return std::sqrt(sum / static_cast<double>(runs.size() - 1));
	}
};

// Reuses filters learned elsewhere as frozen NNL blocks and retrains only the
// classifier on the target data, `runs` times with seeds config.seed,
// config.seed + 1, ... Features are computed once and shared by all runs.
inline TransferReport transfer(std::span<const FilterBank> banks, std::span<const NnlBlockSpec> specs, const ImageDataset& target_train, const ImageDataset& target_test,
	const SupervisedConfig& config, std::size_t runs = 5)
{
	if (target_train.class_count != target_test.class_count) {
		throw ConfigError("target train and test sets disagree on class count");
	}
	if (target_train.height != target_train.width) {
		throw ConfigError("only square images are supported");
	}
	BlockArchitecture<float> arch = make_nnl_architecture(banks, specs, target_train.class_count, target_train.height);
	const std::size_t dim = arch.feature_dim();
	const Matrix<float> train_features = feature_matrix(arch, target_train, all_indices(target_train.size()));
	const Matrix<float> test_features = feature_matrix(arch, target_test, all_indices(target_test.size()));
	const FeatureFetcher fetch = [&](std::span<const std::uint32_t> ids) {
		Matrix<float> batch(ids.size(), dim);
		for (std::size_t b = 0; b < ids.size(); ++b) {
			const auto src = train_features.row(ids[b]);
			std::copy(src.begin(), src.end(), batch.row(b).begin());
		}
		return batch;
	};

	TransferReport report;
	for (std::size_t run = 0; run < runs; ++run) {
		SupervisedConfig run_config = config;
		run_config.seed = config.seed + run;
		arch.classifier = zero_classifier<float>(dim, target_train.class_count);
		report.logs.push_back(train_classifier(arch.classifier, target_train.labels, fetch, {}, run_config));
		report.runs.push_back(make_report(classifier_logits(arch.classifier, test_features), target_test));
	}
	return report;
}

} // namespace nnl
