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

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nnl;
using namespace nnl::testing;

TEST(Gemm, IdentityTimesColumn)
{
	const Matrix<float> a{{1, 0}, {0, 1}};
	const Matrix<float> b{{3}, {4}};
	EXPECT_EQ(gemm(a, b), (Matrix<float>{{3}, {4}}));
}

TEST(Gemm, RowTimesColumn)
{
	EXPECT_EQ(gemm(Matrix<float>{{1, 2}}, Matrix<float>{{3}, {4}}), (Matrix<float>{{11}}));
}

TEST(Gemm, MatchesTripleLoop)
{
	Random rng(11);
	for (const auto [m, k, n] : {std::array<std::size_t, 3>{7, 5, 3}, {1, 64, 1}, {64, 64, 64}, {13, 1, 9}, {33, 47, 20}}) {
		const auto a = random_matrix(m, k, rng);
		const auto b = random_matrix(k, n, rng);
		const auto c = gemm(a, b);
		const auto ref = oracle_gemm(a, b);
		for (std::size_t i = 0; i < ref.size(); ++i) {
			EXPECT_LE(std::abs(c.values()[i] - ref[i]), 1e-5 * std::max(1.0, std::abs(ref[i]))) << m << "x" << k << "x" << n;
		}
	}
}

TEST(Gemm, TransposeFlags)
{
	Random rng(12);
	const auto a = random_matrix(6, 4, rng);
	const auto b = random_matrix(5, 4, rng);
	const auto expected = gemm(a, b.transposed());
	EXPECT_EQ(gemm(a, b, false, true), expected);
	EXPECT_EQ(gemm(a.transposed(), b, true, true), expected);
	EXPECT_EQ(gemm(a.transposed(), b.transposed(), true, false), expected);
}

TEST(Gemm, DimensionMismatchThrows)
{
	EXPECT_THROW(gemm(Matrix<float>(2, 3), Matrix<float>(2, 3)), ConfigError);
}

TEST(Gemm, BitIdenticalAcrossThreadCounts)
{
	Random rng(13);
	const auto a = random_matrix(200, 75, rng);
	const auto b = random_matrix(75, 120, rng);
	Matrix<float> one;
	{
		ThreadScope scope(1);
		one = gemm(a, b);
	}
	ThreadScope scope(8);
	EXPECT_EQ(gemm(a, b), one);
	EXPECT_EQ(gemm(a, b), one);
}

TEST(RectifiedPower, Examples)
{
	EXPECT_EQ(rectified_power(-0.3, 40), 0.0);
	EXPECT_EQ(rectified_power(1.0, 40), 1.0);
	EXPECT_NEAR(rectified_power(0.9, 2), 0.81, 1e-15);
	EXPECT_EQ(rectified_power(0.0, 3), 0.0);
}

TEST(RectifiedPower, MonotoneAndBoundedOnUnitInterval)
{
	for (int n : {1, 2, 7, 40, 100}) {
		double previous = rectified_power(-2.0, n);
		for (double x = -2.0; x <= 2.0; x += 0.01) {
			const double y = rectified_power(x, n);
			EXPECT_GE(y, previous);
			if (x >= 0.0 && x <= 1.0) {
				EXPECT_GE(y, 0.0);
				EXPECT_LE(y, 1.0);
			}
			EXPECT_NEAR(y, x > 0 ? std::pow(x, n) : 0.0, 1e-12 * std::max(1.0, std::pow(std::abs(x), n)));
			previous = y;
		}
	}
}

TEST(L2Normalize, Examples)
{
	const std::vector<float> v{3, 4};
	const auto u = l2_normalize<float>(v);
	EXPECT_NEAR(u[0], 0.6f, 1e-7);
	EXPECT_NEAR(u[1], 0.8f, 1e-7);
	const std::vector<float> zero{0, 0, 0};
	EXPECT_EQ(l2_normalize<float>(zero), zero);
	for (float c : {1e-6f, 0.3f, 17.0f, 1e5f}) {
		const std::vector<float> scaled{3 * c, 4 * c};
		const auto s = l2_normalize<float>(scaled);
		EXPECT_NEAR(s[0], 0.6f, 1e-6);
		EXPECT_NEAR(s[1], 0.8f, 1e-6);
	}
}

TEST(L2Normalize, BelowFloorBecomesZero)
{
	const std::vector<double> tiny{1e-9, 0.0};
	EXPECT_EQ(l2_normalize<double>(tiny), (std::vector<double>{0.0, 0.0}));
}

TEST(L2Normalize, UnitNormOrZero)
{
	Random rng(5);
	for (int t = 0; t < 200; ++t) {
		std::vector<float> v(1 + rng.below(50));
		for (float& x : v) {
			x = static_cast<float>(rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-9, 3)));
		}
		const auto u = l2_normalize<float>(v);
		const double n = l2_norm<float>(u);
		EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-6) << n;
	}
}

TEST(Softmax, Examples)
{
	const auto p = softmax<double>(std::vector<double>{0, 0, 0, 0});
	for (double x : p) {
		EXPECT_DOUBLE_EQ(x, 0.25);
	}
	const auto big = softmax<float>(std::vector<float>{1000, 0});
	EXPECT_NEAR(big[0], 1.0f, 1e-7);
	EXPECT_GE(big[1], 0.0f);
	EXPECT_TRUE(all_finite<float>(big));
}

TEST(Softmax, SumsToOneAndShiftInvariant)
{
	Random rng(8);
	for (int t = 0; t < 100; ++t) {
		std::vector<float> z(2 + rng.below(20));
		for (float& x : z) {
			x = static_cast<float>(rng.uniform(-30, 30));
		}
		const auto p = softmax<float>(z);
		double sum = 0.0;
		for (float x : p) {
			EXPECT_GT(x, 0.0f - 1e-30f);
			sum += x;
		}
		EXPECT_NEAR(sum, 1.0, 1e-6);
		auto shifted = z;
		for (float& x : shifted) {
			x += 5.0f;
		}
		const auto q = softmax<float>(shifted);
		EXPECT_EQ(argmax<float>(p), argmax<float>(z));
		EXPECT_EQ(argmax<float>(q), argmax<float>(p));
		for (std::size_t i = 0; i < p.size(); ++i) {
			EXPECT_NEAR(p[i], q[i], 1e-6);
		}
	}
}

TEST(CrossEntropy, Examples)
{
	EXPECT_EQ(cross_entropy<double>(std::vector<double>{0, 1, 0}, 1), 0.0);
	const std::vector<double> uniform(10, 0.1);
	EXPECT_NEAR(cross_entropy<double>(uniform, 4), 2.302585, 1e-6);
	EXPECT_NEAR(cross_entropy<double>(std::vector<double>{1, 0}, 1), -std::log(kProbabilityFloor), 1e-9);
	EXPECT_THROW(cross_entropy<double>(uniform, 10), ConfigError);
}

TEST(CrossEntropy, LogitGradientMatchesFiniteDifferences)
{
	Random rng(21);
	for (int t = 0; t < 20; ++t) {
		std::vector<double> z(2 + rng.below(9));
		for (double& x : z) {
			x = rng.uniform(-3, 3);
		}
		const std::size_t label = rng.below(z.size());
		const auto p = softmax<double>(z);
		for (std::size_t i = 0; i < z.size(); ++i) {
			const double h = 1e-6;
			auto up = z;
			auto down = z;
			up[i] += h;
			down[i] -= h;
			const double numeric = (cross_entropy<double>(softmax<double>(up), label) - cross_entropy<double>(softmax<double>(down), label)) / (2 * h);
			const double analytic = p[i] - (i == label ? 1.0 : 0.0);
			EXPECT_NEAR(numeric, analytic, 1e-4 * std::max(1.0, std::abs(analytic)));
		}
	}
}

TEST(Argmax, LowestIndexOnTies)
{
	EXPECT_EQ(argmax<float>(std::vector<float>{1, 3, 3, 2}), 1u);
	EXPECT_EQ(argmax<float>(std::vector<float>{0, 0, 0}), 0u);
}

TEST(Matrix, ShapeChecks)
{
	EXPECT_THROW(Matrix<float>(2, 2, std::vector<float>{1, 2, 3}), ConfigError);
	Matrix<float> m(3, 4, 1.5f);
	EXPECT_EQ(m.size(), 12u);
	EXPECT_EQ(m.transposed().rows(), 4u);
	EXPECT_EQ(m.transposed().transposed(), m);
}

TEST(Random, ReproducibleStreams)
{
	Random a(42);
	Random b(42);
	for (int i = 0; i < 100; ++i) {
		EXPECT_EQ(a.next_u64(), b.next_u64());
	}
	Random c = Random::derived(7, 1);
	Random d = Random::derived(7, 2);
	EXPECT_NE(c.next_u64(), d.next_u64());
}

TEST(Random, NormalMoments)
{
	Random rng(3);
	const int n = 200000;
	double sum = 0.0;
	double sq = 0.0;
	for (int i = 0; i < n; ++i) {
		const double x = rng.normal();
		sum += x;
		sq += x * x;
	}
	EXPECT_NEAR(sum / n, 0.0, 0.01);
	EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Random, PermutationIsComplete)
{
	Random rng(4);
	auto p = random_permutation(1000, rng);
	std::sort(p.begin(), p.end());
	for (std::uint32_t i = 0; i < 1000; ++i) {
		EXPECT_EQ(p[i], i);
	}
}

TEST(ParallelFor, CoversEveryIndexAndRethrows)
{
	ThreadScope scope(4);
	std::vector<int> hits(1000, 0);
	parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
	EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
	EXPECT_THROW(parallel_for(100, [](std::size_t i) {
		if (i == 57) {
			throw std::runtime_error("boom");
		}
	}),
		std::runtime_error);
}
