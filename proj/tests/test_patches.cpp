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

#include <set>

using namespace nnl;
using namespace nnl::testing;

TEST(Patches, CountFormula)
{
	for (std::size_t side : {8, 13, 32}) {
		for (std::size_t w = 1; w <= side; w += 3) {
			for (std::size_t st = 1; st <= 4; ++st) {
				const std::size_t g = (side - w) / st + 1;
				Image<float> img(side, side);
				EXPECT_EQ(extract_patches(img, w, st).rows(), g * g);
				EXPECT_EQ(patch_grid_side(side, w, st), g);
			}
		}
	}
	EXPECT_EQ(extract_patches(Image<float>(32, 32), 4, 1).rows(), 841u);
	EXPECT_THROW(extract_patches(Image<float>(8, 8), 9, 1), ConfigError);
	EXPECT_THROW(extract_patches(Image<float>(8, 8), 2, 0), ConfigError);
}

TEST(Patches, FullWindowIsFlattenedImage)
{
	Random rng(1);
	const auto img = random_image<float>(32, rng);
	const auto p = extract_patches(img, 32, 1);
	ASSERT_EQ(p.rows(), 1u);
	EXPECT_TRUE(std::equal(img.pixels.begin(), img.pixels.end(), p.row(0).begin()));
}

TEST(Patches, RampImageMatchesIndexOracle)
{
	Image<float> img(8, 8);
	for (std::size_t c = 0; c < 3; ++c) {
		for (std::size_t r = 0; r < 8; ++r) {
			for (std::size_t x = 0; x < 8; ++x) {
				img.at(c, r, x) = static_cast<float>(100 * c + 10 * r + x);
			}
		}
	}
	const auto p = extract_patches(img, 3, 2);
	ASSERT_EQ(p.rows(), 9u);
	for (std::size_t py = 0; py < 3; ++py) {
		for (std::size_t px = 0; px < 3; ++px) {
			std::size_t i = 0;
			for (std::size_t c = 0; c < 3; ++c) {
				for (std::size_t r = 0; r < 3; ++r) {
					for (std::size_t x = 0; x < 3; ++x) {
						EXPECT_EQ(p(py * 3 + px, i++), static_cast<float>(100 * c + 10 * (2 * py + r) + 2 * px + x));
					}
				}
			}
		}
	}
}

TEST(Patches, PatchSetGatherMatchesExtraction)
{
	const auto ds = random_dataset(3, 10, 2, 12);
	const PatchSet set(ds, 5, 2);
	EXPECT_EQ(set.size(), 3u * 16u);
	std::vector<float> buf(set.length());
	for (std::size_t img = 0; img < 3; ++img) {
		const auto p = extract_patches(image_to_float<float>(ds, img), 5, 2);
		for (std::size_t r = 0; r < p.rows(); ++r) {
			set.gather(img * 16 + r, buf);
			EXPECT_TRUE(std::equal(buf.begin(), buf.end(), p.row(r).begin()));
		}
	}
}

TEST(EpochStream, ShortBatchRule)
{
	const auto ds = random_dataset(1, 10, 3);
	const PatchSet set(ds, 4, 1);
	EpochStream stream(set, 1000, 1, 0);
	PatchBatch batch;
	ASSERT_TRUE(stream.next(batch));
	EXPECT_EQ(batch.patches.rows(), 841u);
	EXPECT_FALSE(stream.next(batch));
}

TEST(EpochStream, EveryPatchOncePerEpoch)
{
	const auto ds = random_dataset(2000, 10, 4, 1);
	const PatchSet set(ds, 1, 1);
	ASSERT_EQ(set.size(), 2000u);
	EpochStream stream(set, 1000, 5, 3);
	EXPECT_EQ(stream.batch_count(), 2u);
	std::multiset<std::vector<float>> seen;
	PatchBatch batch;
	int batches = 0;
	while (stream.next(batch)) {
		EXPECT_EQ(batch.patches.rows(), 1000u);
		for (std::size_t r = 0; r < batch.patches.rows(); ++r) {
			seen.emplace(batch.patches.row(r).begin(), batch.patches.row(r).end());
		}
		++batches;
	}
	EXPECT_EQ(batches, 2);
	std::multiset<std::vector<float>> expected;
	std::vector<float> buf(3);
	for (std::size_t i = 0; i < set.size(); ++i) {
		set.gather(i, buf);
		expected.insert(buf);
	}
	EXPECT_EQ(seen, expected);
	auto order = std::vector<std::uint32_t>(stream.order().begin(), stream.order().end());
	std::sort(order.begin(), order.end());
	for (std::uint32_t i = 0; i < 2000; ++i) {
		EXPECT_EQ(order[i], i);
	}
}

TEST(EpochStream, PermutationDependsOnSeedAndEpoch)
{
	const auto ds = random_dataset(3, 10, 5);
	const PatchSet set(ds, 4, 1);
	auto order = [&](std::uint64_t seed, std::uint64_t epoch) {
		EpochStream s(set, 100, seed, epoch);
		return std::vector<std::uint32_t>(s.order().begin(), s.order().end());
	};
	EXPECT_EQ(order(1, 0), order(1, 0));
	EXPECT_NE(order(1, 0), order(1, 1));
	EXPECT_NE(order(1, 0), order(2, 0));
}

TEST(NormalizeBatch, Examples)
{
	PatchBatch batch{Matrix<float>(3, 12), 2, false};
	batch.patches(0, 0) = 3;
	batch.patches(0, 1) = 4;
	for (std::size_t i = 0; i < 12; ++i) {
		batch.patches(2, i) = 0.3f * static_cast<float>(i + 1);
	}
	Matrix<float> unscaled(1, 12);
	for (std::size_t i = 0; i < 12; ++i) {
		unscaled(0, i) = static_cast<float>(i + 1);
	}
	const auto out = normalize_batch(batch);
	EXPECT_TRUE(out.normalized);
	EXPECT_NEAR(out.patches(0, 0), 0.6f, 1e-7);
	EXPECT_NEAR(out.patches(0, 1), 0.8f, 1e-7);
	for (std::size_t i = 0; i < 12; ++i) {
		EXPECT_EQ(out.patches(1, i), 0.0f);
	}
	const auto ref = l2_normalize<float>(unscaled.row(0));
	for (std::size_t i = 0; i < 12; ++i) {
		EXPECT_NEAR(out.patches(2, i), ref[i], 1e-6);
	}
}

TEST(NormalizeBatch, RowsUnitOrZero)
{
	const auto ds = random_dataset(2, 10, 6);
	const PatchSet set(ds, 3, 1);
	EpochStream stream(set, 500, 1, 0, true);
	PatchBatch batch;
	while (stream.next(batch)) {
		EXPECT_TRUE(batch.normalized);
		for (std::size_t r = 0; r < batch.patches.rows(); ++r) {
			const double n = l2_norm<float>(batch.patches.row(r));
			EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-5);
		}
	}
}
