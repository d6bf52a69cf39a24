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
#include <nnl/matrix.hpp>
#include <nnl/patches.hpp>
#include <nnl/random.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// K x (W*W*3) filter matrix learned by the local rule, plus the per-row
// count of rank-1 wins during the last training epoch.
struct FilterBank {
	Matrix<float> weights;
	std::size_t window = 0;
	std::vector<std::uint64_t> win_counts;
	std::size_t epochs_trained = 0;
	std::uint64_t seed = 0;

	std::size_t channels() const { return weights.rows(); }
	std::size_t length() const { return weights.cols(); }

	void validate() const
	{
		if (window == 0 || weights.cols() != patch_length(window)) {
			throw ConfigError("filter bank rows must have window*window*3 entries");
		}
		if (win_counts.size() != weights.rows()) {
			throw ConfigError("filter bank win counts do not match channel count");
		}
	}
};

struct HebbianConfig {
	double learning_rate = 1e-4; // initial rate, decays linearly to zero
	std::size_t epochs = 500;
	std::size_t rank_m = 2;
	double delta = 0.2; // anti-Hebbian strength
	std::size_t minibatch_size = 1000;
	bool scale_update_by_max = true;
	bool normalize_patches = false;

	// Throws on invalid values; returns warnings for values outside the
	// explored range.
	std::vector<std::string> validate(std::size_t channels) const
	{
		std::vector<std::string> warnings;
		if (!(learning_rate > 0.0)) {
			throw ConfigError("hebbian learning rate must be positive");
		}
		if (rank_m < 2) {
			throw ConfigError("rank m must be at least 2 (m=" + std::to_string(rank_m) + ")");
		}
		if (channels == 0) {
			throw ConfigError("filter bank needs at least one channel");
		}
		if (delta < 0.0) {
			throw ConfigError("anti-Hebbian strength must be non-negative");
		}
		if (minibatch_size == 0) {
			throw ConfigError("minibatch size must be at least 1");
		}
		if (delta > 0.3) {
			warnings.push_back("anti-Hebbian strength " + std::to_string(delta) + " outside [0, 0.3]");
		}
		if (rank_m > channels) {
			warnings.push_back("rank m=" + std::to_string(rank_m) + " exceeds K=" + std::to_string(channels) + "; no row receives the anti-Hebbian term");
		}
		return warnings;
	}

	friend bool operator==(const HebbianConfig&, const HebbianConfig&) = default;
};

// Per-sample ranking of the input currents. kNoRow marks an absent rank-m
// row (m > K).
struct RankAssignment {
	static constexpr std::uint32_t kNoRow = 0xffffffffu;
	Matrix<float> currents; // batch x K
	std::vector<std::uint32_t> first;
	std::vector<std::uint32_t> rank_m;
};

// Learning activation by rank: 1 for the winner, -delta at rank m, else 0.
inline double g_of_rank(std::size_t rank, std::size_t m, double delta)
{
	if (rank == 1) {
		return 1.0;
	}
	if (rank == m) {
		return -delta;
	}
	return 0.0;
}

// Ranks channels by current for every sample. Larger current ranks first;
// equal currents rank by lower row index.
inline RankAssignment rank_activations(const Matrix<float>& weights, const Matrix<float>& batch, std::size_t m)
{
	if (batch.cols() != weights.cols()) {
		throw ConfigError("rank_activations: patch length " + std::to_string(batch.cols()) + " does not match filter length " + std::to_string(weights.cols()));
	}
	if (m < 1) {
		throw ConfigError("rank m must be at least 1");
	}
	RankAssignment out;
	out.currents = gemm(batch, weights, false, true);
	const std::size_t channels = weights.rows();
	const std::size_t depth = std::min(m, channels);
	out.first.assign(batch.rows(), 0);
	out.rank_m.assign(batch.rows(), RankAssignment::kNoRow);
	parallel_for(
		batch.rows(),
		[&](std::size_t a) {
			const auto cur = out.currents.row(a);
			// Insertion into a sorted top-`depth` list; strict comparison keeps
			// the earlier (lower) index ahead on ties.
			std::uint32_t top[64];
			std::vector<std::uint32_t> heap_top;
			std::uint32_t* best = top;
			if (depth > 64) {
				heap_top.resize(depth);
				best = heap_top.data();
			}
			std::size_t filled = 0;
			for (std::size_t mu = 0; mu < channels; ++mu) {
				const float v = cur[mu];
				if (filled == depth && !(v > cur[best[depth - 1]])) {
					continue;
				}
				std::size_t pos = filled < depth ? filled++ : depth - 1;
				while (pos > 0 && v > cur[best[pos - 1]]) {
					best[pos] = best[pos - 1];
					--pos;
				}
				best[pos] = static_cast<std::uint32_t>(mu);
			}
			out.first[a] = best[0];
			if (m <= channels) {
				out.rank_m[a] = best[m - 1];
			}
		},
		64);
	return out;
}

// Raw direction of the local rule, summed over the minibatch:
//   ds_mu = sum_A g_muA * (v^A - I_mu^A * M_mu)
// Only the rank-1 and rank-m rows of each sample contribute. Accumulated in
// double, in sample order.
inline Matrix<double> hebbian_direction(const Matrix<float>& weights, const Matrix<float>& batch, const RankAssignment& ranks, double delta)
{
	const std::size_t channels = weights.rows();
	const std::size_t length = weights.cols();
	Matrix<double> ds(channels, length);
	std::vector<double> current_sum(channels, 0.0);
	for (std::size_t a = 0; a < batch.rows(); ++a) {
		const auto v = batch.row(a);
		const std::uint32_t winner = ranks.first[a];
		{
			auto row = ds.row(winner);
			for (std::size_t i = 0; i < length; ++i) {
				row[i] += static_cast<double>(v[i]);
			}
			current_sum[winner] += static_cast<double>(ranks.currents(a, winner));
		}
		const std::uint32_t loser = ranks.rank_m[a];
		if (delta != 0.0 && loser != RankAssignment::kNoRow) {
			auto row = ds.row(loser);
			for (std::size_t i = 0; i < length; ++i) {
				row[i] -= delta * static_cast<double>(v[i]);
			}
			current_sum[loser] -= delta * static_cast<double>(ranks.currents(a, loser));
		}
	}
	for (std::size_t mu = 0; mu < channels; ++mu) {
		if (current_sum[mu] == 0.0) {
			continue;
		}
		auto row = ds.row(mu);
		const auto w = weights.row(mu);
		for (std::size_t i = 0; i < length; ++i) {
			row[i] -= current_sum[mu] * static_cast<double>(w[i]);
		}
	}
	return ds;
}

inline constexpr double kUpdatePrecisionFloor = 1e-30;

// The weight change for one minibatch. With scale_by_max the raw direction is
// divided by its largest absolute entry before the learning rate is applied.
inline Matrix<float> hebbian_update(const Matrix<float>& weights, const Matrix<float>& batch, double learning_rate, std::size_t m, double delta, bool scale_by_max = false)
{
	const RankAssignment ranks = rank_activations(weights, batch, m);
	const Matrix<double> ds = hebbian_direction(weights, batch, ranks, delta);
	double scale = learning_rate;
	if (scale_by_max) {
		double largest = 0.0;
		for (const double x : ds.values()) {
			largest = std::max(largest, std::abs(x));
		}
		scale /= std::max(largest, kUpdatePrecisionFloor);
	}
	Matrix<float> update(ds.rows(), ds.cols());
	for (std::size_t i = 0; i < ds.size(); ++i) {
		update.data()[i] = static_cast<float>(scale * ds.data()[i]);
	}
	return update;
}

// Largest |‖row‖ - 1| over the rows that won at least once, and the share of
// those rows within tolerance.
struct ConvergenceStats {
	std::size_t winning_rows = 0;
	std::size_t converged_rows = 0;
	double max_deviation = 0.0;

	double converged_fraction() const { return winning_rows == 0 ? 0.0 : static_cast<double>(converged_rows) / static_cast<double>(winning_rows); }
};

inline ConvergenceStats convergence_stats(const Matrix<float>& weights, std::span<const std::uint64_t> wins, double tolerance = 1e-2)
{
	ConvergenceStats stats;
	for (std::size_t mu = 0; mu < weights.rows(); ++mu) {
		if (wins[mu] == 0) {
			continue;
		}
		const double deviation = std::abs(l2_norm<float>(weights.row(mu)) - 1.0);
		++stats.winning_rows;
		if (deviation < tolerance) {
			++stats.converged_rows;
		}
		stats.max_deviation = std::max(stats.max_deviation, deviation);
	}
	return stats;
}

struct HebbianEpochReport {
	std::size_t epoch = 0; // zero-based
	double learning_rate = 0.0;
	std::vector<std::uint64_t> wins;
	ConvergenceStats convergence;
};

using HebbianObserver = std::function<void(const HebbianEpochReport&)>;

// Standard-normal initial filters drawn from the bank seed.
inline Matrix<float> initial_filters(std::size_t channels, std::size_t length, std::uint64_t seed)
{
	Random rng = Random::derived(seed, 0xf117e25ULL);
	Matrix<float> weights(channels, length);
	for (float& w : weights.values()) {
		w = static_cast<float>(rng.normal());
	}
	return weights;
}

// Runs the epoch-budgeted local learning loop. The rate at zero-based epoch e
// is learning_rate * (1 - e / epochs); win counts come from the final epoch.
inline FilterBank train_filters(const PatchSet& patches, std::size_t channels, const HebbianConfig& config, std::uint64_t seed, const HebbianObserver& observer = {})
{
	config.validate(channels);
	FilterBank bank;
	bank.window = patches.window();
	bank.seed = seed;
	bank.weights = initial_filters(channels, patches.length(), seed);
	bank.win_counts.assign(channels, 0);

	PatchBatch batch;
	for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
		const double rate = config.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(config.epochs));
		std::vector<std::uint64_t> wins(channels, 0);
		EpochStream stream(patches, config.minibatch_size, seed, epoch, config.normalize_patches);
		while (stream.next(batch)) {
			const RankAssignment ranks = rank_activations(bank.weights, batch.patches, config.rank_m);
			for (const std::uint32_t w : ranks.first) {
				++wins[w];
			}
			const Matrix<double> ds = hebbian_direction(bank.weights, batch.patches, ranks, config.delta);
			double scale = rate;
			if (config.scale_update_by_max) {
				double largest = 0.0;
				for (const double x : ds.values()) {
					largest = std::max(largest, std::abs(x));
				}
				scale /= std::max(largest, kUpdatePrecisionFloor);
			}
			float* w = bank.weights.data();
			const double* d = ds.data();
			for (std::size_t i = 0; i < ds.size(); ++i) {
				w[i] = static_cast<float>(static_cast<double>(w[i]) + scale * d[i]);
			}
		}
		bank.epochs_trained = epoch + 1;
		if (epoch + 1 == config.epochs) {
			bank.win_counts = wins;
		}
		if (observer) {
			HebbianEpochReport report;
			report.epoch = epoch;
			report.learning_rate = rate;
			report.convergence = convergence_stats(bank.weights, wins);
			report.wins = std::move(wins);
			observer(report);
		}
	}
	if (!all_finite<float>(bank.weights.values())) {
		throw TrainingError("filter weights became non-finite; lower the learning rate");
	}
	return bank;
}

// Rows whose share of final-epoch wins is below threshold.
inline std::vector<std::size_t> detect_dead_units(const FilterBank& bank, double threshold = 1e-5)
{
	std::uint64_t total = 0;
	for (const auto w : bank.win_counts) {
		total += w;
	}
	std::vector<std::size_t> dead;
	for (std::size_t mu = 0; mu < bank.win_counts.size(); ++mu) {
		const double share = total == 0 ? 0.0 : static_cast<double>(bank.win_counts[mu]) / static_cast<double>(total);
		if (share < threshold) {
			dead.push_back(mu);
		}
	}
	return dead;
}

inline FilterBank prune(const FilterBank& bank, std::span<const std::size_t> rows_to_drop)
{
	std::vector<bool> drop(bank.channels(), false);
	for (const auto r : rows_to_drop) {
		if (r >= bank.channels()) {
			throw ConfigError("prune: row index out of range");
		}
		drop[r] = true;
	}
	FilterBank out;
	out.window = bank.window;
	out.epochs_trained = bank.epochs_trained;
	out.seed = bank.seed;
	std::vector<float> kept;
	for (std::size_t mu = 0; mu < bank.channels(); ++mu) {
		if (drop[mu]) {
			continue;
		}
		const auto row = bank.weights.row(mu);
		kept.insert(kept.end(), row.begin(), row.end());
		out.win_counts.push_back(bank.win_counts[mu]);
	}
	out.weights = Matrix<float>(out.win_counts.size(), bank.length(), std::move(kept));
	return out;
}

// ---------------------------------------------------------------------------
// .nnlf: "NNLF", u32 version=1, u32 K, u32 W, u32 channels=3, u32 dtype (0=f32),
// K*W*W*3 f32 (row-major, planar within a row), K u64 win counts. All LE.

inline constexpr std::uint32_t kFilterBankVersion = 1;

inline void write_filter_bank(std::ostream& out, const FilterBank& bank)
{
	bank.validate();
	io::write_magic(out, "NNLF");
	io::write_le<std::uint32_t>(out, kFilterBankVersion);
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.channels()));
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.window));
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(kColorChannels));
	io::write_le<std::uint32_t>(out, 0);
	io::write_array<float>(out, bank.weights.values());
	io::write_array<std::uint64_t>(out, bank.win_counts);
}

inline FilterBank read_filter_bank(std::istream& in)
{
	io::expect_magic(in, "NNLF");
	const auto version = io::read_le<std::uint32_t>(in, "version");
	if (version != kFilterBankVersion) {
		throw FormatError("unsupported filter bank version " + std::to_string(version));
	}
	const auto channels = io::read_le<std::uint32_t>(in, "channel count");
	const auto window = io::read_le<std::uint32_t>(in, "window");
	const auto colors = io::read_le<std::uint32_t>(in, "color channels");
	const auto dtype = io::read_le<std::uint32_t>(in, "dtype");
	if (colors != kColorChannels) {
		throw FormatError("filter bank must have 3 color channels");
	}
	if (dtype != 0) {
		throw FormatError("unsupported filter bank dtype " + std::to_string(dtype));
	}
	if (window == 0 || window > 1024 || channels > (1u << 24)) {
		throw FormatError("implausible filter bank dimensions");
	}
	FilterBank bank;
	bank.window = window;
	bank.weights = Matrix<float>(channels, patch_length(window));
	bank.win_counts.resize(channels);
	io::read_array<float>(in, bank.weights.values(), "filter weights");
	io::read_array<std::uint64_t>(in, bank.win_counts, "win counts");
	return bank;
}

inline void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path)
{
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write " + path.string());
	}
	write_filter_bank(out, bank);
	if (!out) {
		throw FormatError("write failed for " + path.string());
	}
}

inline FilterBank load_filter_bank(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path.string());
	}
	return read_filter_bank(in);
}

} // namespace nnl
