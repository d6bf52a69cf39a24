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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace nnl {

// Reproducible randomness. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, so a 64-bit seed yields the same
// stream on every platform. The standard distributions are
// implementation-defined, so the bounded-integer and normal draws below are
// implemented here on top of the raw engine output.
class Random {
public:
	explicit Random(std::uint64_t seed) : engine_(seed) {}

	// Seed derived from a base seed and a stream id (e.g. an epoch number).
	static Random derived(std::uint64_t seed, std::uint64_t stream)
	{
		return Random(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
	}

	std::uint64_t next_u64() { return engine_(); }

	// Uniform double in [0, 1) with 53 random bits.
	double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	// Uniform integer in [0, bound) by rejection, no modulo bias.
	std::uint64_t below(std::uint64_t bound)
	{
		if (bound <= 1) {
			return 0;
		}
		const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
		std::uint64_t x;
		do {
			x = engine_();
		} while (x >= limit);
		return x % bound;
	}

	// Standard normal via the Box-Muller transform; the second variate of
	// each pair is cached.
	double normal()
	{
		if (has_spare_) {
			has_spare_ = false;
			return spare_;
		}
		double u1;
		do {
			u1 = uniform();
		} while (u1 <= 0.0);
		const double u2 = uniform();
		const double radius = std::sqrt(-2.0 * std::log(u1));
		const double angle = 2.0 * std::numbers::pi * u2;
		spare_ = radius * std::sin(angle);
		has_spare_ = true;
		return radius * std::cos(angle);
	}

	// Fisher-Yates.
	template <class T>
	void shuffle(std::span<T> values)
	{
		for (std::size_t i = values.size(); i > 1; --i) {
			const std::size_t j = static_cast<std::size_t>(below(i));
			std::swap(values[i - 1], values[j]);
		}
	}

	// SplitMix64 finalizer.
	static std::uint64_t mix(std::uint64_t z)
	{
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}

private:
	std::mt19937_64 engine_;
	double spare_ = 0.0;
	bool has_spare_ = false;
};

// Identity permutation of [0, count) shuffled by rng.
inline std::vector<std::uint32_t> random_permutation(std::size_t count, Random& rng)
{
	std::vector<std::uint32_t> order(count);
	for (std::size_t i = 0; i < count; ++i) {
		order[i] = static_cast<std::uint32_t>(i);
	}
	rng.shuffle(std::span<std::uint32_t>(order));
	return order;
}

} // namespace nnl
