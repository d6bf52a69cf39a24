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

#include <fstream>
#include <sstream>

using namespace nnl;
using namespace nnl::testing;

namespace {

FilterBank unit_bank(std::size_t k, std::size_t window, Random& rng, bool nonnegative = false)
{
	FilterBank bank;
	bank.window = window;
	bank.weights = Matrix<float>(k, patch_length(window));
	for (float& v : bank.weights.values()) {
		v = static_cast<float>(nonnegative ? rng.uniform() : rng.normal());
	}
	for (std::size_t r = 0; r < k; ++r) {
		l2_normalize_inplace<float>(bank.weights.row(r));
	}
	bank.win_counts.assign(k, 1);
	return bank;
}

BlockArchitecture<float> random_nnl_arch(Random& rng, std::size_t side = 12)
{
	std::vector<FilterBank> banks{unit_bank(4, 3, rng), unit_bank(3, 5, rng)};
	std::vector<NnlBlockSpec> specs{{3, 1, {4, 2}}, {2, 2, {2, 1}}};
	auto arch = make_nnl_architecture(banks, specs, 5, side);
	for (float& w : arch.classifier.weights.values()) {
		w = static_cast<float>(rng.normal());
	}
	for (float& b : arch.classifier.biases) {
		b = static_cast<float>(rng.normal());
	}
	return arch;
}

template <class T>
Image<T> scaled(const Image<T>& img, T c)
{
	Image<T> out = img;
	for (T& v : out.pixels) {
		v *= c;
	}
	return out;
}

} // namespace

TEST(NnlConv, MatchesLoopOracle)
{
	Random rng(41);
	for (int t = 0; t < 20; ++t) {
		const std::size_t side = 6 + rng.below(8);
		const std::size_t window = 1 + rng.below(4);
		const std::size_t stride = 1 + rng.below(3);
		const int power = 1 + static_cast<int>(rng.below(6));
		const NnlConvLayer layer{unit_bank(1 + rng.below(6), window, rng), power, stride};
		const auto img = random_image<float>(side, rng);
		const auto map = nnl_conv_forward(layer, img);
		EXPECT_LE(max_abs_diff(map.values, oracle_nnl_conv(layer.bank.weights, img, window, stride, power)), 1e-5);
	}
}

TEST(NnlConv, FullSizeLayerMatchesOracle)
{
	Random rng(42);
	const NnlConvLayer layer{unit_bank(400, 4, rng), 40, 1};
	const auto img = random_image<float>(32, rng);
	const auto map = nnl_conv_forward(layer, img);
	EXPECT_EQ(map.channels, 400u);
	EXPECT_EQ(map.height, 29u);
	EXPECT_LE(max_abs_diff(map.values, oracle_nnl_conv(layer.bank.weights, img, 4, 1, 40)), 1e-5);
}

TEST(NnlConv, MatchingAndOrthogonalPatches)
{
	FilterBank bank;
	bank.window = 1;
	bank.weights = Matrix<float>{{0.6f, 0.8f, 0.0f}, {0.0f, 0.0f, 1.0f}};
	bank.win_counts = {1, 1};
	const NnlConvLayer layer{bank, 40, 1};
	Image<float> img(1, 1);
	img.pixels = {0.3f, 0.4f, 0.0f}; // parallel to row 0, orthogonal to row 1
	const auto map = nnl_conv_forward(layer, img);
	EXPECT_NEAR(map.values[0], 1.0f, 1e-5);
	EXPECT_EQ(map.values[1], 0.0f);
}

TEST(NnlConv, ActivationsInUnitInterval)
{
	Random rng(43);
	const NnlConvLayer layer{unit_bank(16, 4, rng), 5, 1};
	const auto map = nnl_conv_forward(layer, random_image<float>(12, rng));
	for (const float v : map.values) {
		EXPECT_GE(v, 0.0f);
		EXPECT_LE(v, 1.0f + 1e-6f);
	}
}

TEST(NnlConv, UniformScalingInvariance)
{
	Random rng(44);
	const NnlConvLayer layer{unit_bank(8, 4, rng), 10, 1};
	const auto img = random_image<float>(16, rng);
	const auto base = nnl_conv_forward(layer, img);
	for (const float c : {0.1f, 0.3f, 0.7f, 3.0f}) {
		const auto map = nnl_conv_forward(layer, scaled(img, c));
		for (std::size_t i = 0; i < map.values.size(); ++i) {
			EXPECT_NEAR(map.values[i], base.values[i], 1e-5);
		}
	}
}

TEST(Conv, MatchesLoopOracle)
{
	Random rng(45);
	for (int t = 0; t < 20; ++t) {
		const std::size_t side = 6 + rng.below(8);
		const std::size_t window = 1 + rng.below(4);
		const std::size_t stride = 1 + rng.below(3);
		ConvLayer<float> layer{random_matrix(1 + rng.below(6), patch_length(window), rng), {}, window, stride};
		for (std::size_t k = 0; k < layer.channels(); ++k) {
			layer.biases.push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
		}
		const auto img = random_image<float>(side, rng);
		EXPECT_LE(max_abs_diff(conv_forward(layer, img).values, oracle_conv(layer.weights, layer.biases, img, window, stride)), 1e-5);
	}
}

TEST(Conv, ZeroWeightsGiveBias)
{
	const ConvLayer<float> layer{Matrix<float>(2, 12), {0.25f, 0.5f}, 2, 1};
	Random rng(46);
	const auto map = conv_forward(layer, random_image<float>(5, rng));
	for (std::size_t i = 0; i < 16; ++i) {
		EXPECT_EQ(map.values[i], 0.25f);
		EXPECT_EQ(map.values[16 + i], 0.5f);
	}
}

TEST(Conv, NotScaleInvariant)
{
	Random rng(47);
	ConvLayer<float> layer{random_matrix(3, 27, rng), {0.1f, 0.1f, 0.1f}, 3, 1};
	const auto img = random_image<float>(8, rng);
	const auto patches = extract_patches(img, 3, 1);
	const auto patches_dark = extract_patches(scaled(img, 0.3f), 3, 1);
	const auto pre = conv_preactivation(layer, patches);
	const auto pre_dark = conv_preactivation(layer, patches_dark);
	for (std::size_t i = 0; i < pre.size(); ++i) {
		const float b = 0.1f;
		EXPECT_NEAR(pre_dark.values()[i] - b, 0.3f * (pre.values()[i] - b), 1e-5);
	}
	const auto a = conv_forward(layer, img);
	const auto d = conv_forward(layer, scaled(img, 0.3f));
	double diff = 0.0;
	for (std::size_t i = 0; i < a.values.size(); ++i) {
		diff = std::max(diff, static_cast<double>(std::abs(a.values[i] - d.values[i])));
	}
	EXPECT_GT(diff, 1e-3);
}

TEST(MaxPool, MatchesLoopOracle)
{
	Random rng(48);
	for (int t = 0; t < 20; ++t) {
		const std::size_t side = 4 + rng.below(8);
		const std::size_t window = 1 + rng.below(std::min<std::size_t>(side, 4));
		const std::size_t stride = 1 + rng.below(3);
		const std::size_t channels = 1 + rng.below(4);
		FeatureMap<float> map(channels, side, side);
		std::vector<double> ref;
		for (float& v : map.values) {
			v = static_cast<float>(rng.below(5)); // plenty of ties
			ref.push_back(v);
		}
		const auto pooled = maxpool_forward(MaxPoolLayer{window, stride}, map);
		const auto oracle = oracle_maxpool(ref, channels, side, window, stride);
		ASSERT_EQ(pooled.pooled.values.size(), oracle.values.size());
		for (std::size_t i = 0; i < oracle.values.size(); ++i) {
			EXPECT_EQ(pooled.pooled.values[i], oracle.values[i]);
			EXPECT_EQ(pooled.argmax[i], oracle.argmax[i]);
			EXPECT_EQ(map.values[pooled.argmax[i]], pooled.pooled.values[i]);
		}
	}
}

TEST(MaxPool, CifarGeometryAndConstantMap)
{
	const FeatureMap<float> map(2, 29, 29);
	const auto pooled = maxpool_forward(MaxPoolLayer{11, 2}, map);
	EXPECT_EQ(pooled.pooled.height, 10u);
	EXPECT_EQ(pooled.pooled.width, 10u);
	for (std::size_t c = 0; c < 2; ++c) {
		for (std::size_t oy = 0; oy < 10; ++oy) {
			for (std::size_t ox = 0; ox < 10; ++ox) {
				EXPECT_EQ(pooled.argmax[(c * 10 + oy) * 10 + ox], (c * 29 + 2 * oy) * 29 + 2 * ox);
			}
		}
	}
	EXPECT_THROW(maxpool_forward(MaxPoolLayer{30, 1}, map), ConfigError);
}

TEST(BlockForward, ComposesLayersInFlattenOrder)
{
	Random rng(49);
	const auto arch = random_nnl_arch(rng);
	const auto img = random_image<float>(12, rng);
	const auto result = block_forward(arch, img);
	std::vector<float> features;
	for (const auto& block : arch.blocks) {
		const auto& layer = std::get<NnlConvLayer>(block.conv);
		const auto pooled = maxpool_forward(block.pool, nnl_conv_forward(layer, img));
		features.insert(features.end(), pooled.pooled.values.begin(), pooled.pooled.values.end());
	}
	EXPECT_EQ(result.features, features);
	EXPECT_EQ(result.features.size(), arch.feature_dim());
	for (std::size_t c = 0; c < 5; ++c) {
		double logit = arch.classifier.biases[c];
		for (std::size_t i = 0; i < features.size(); ++i) {
			logit += static_cast<double>(features[i]) * arch.classifier.weights(i, c);
		}
		EXPECT_NEAR(result.logits[c], logit, 1e-4);
	}
	ASSERT_EQ(result.cache.size(), 2u);
	EXPECT_TRUE(result.cache[0].normalized_patches);
}

TEST(BlockForward, PermutingBlocksWithClassifierSlicesKeepsLogits)
{
	Random rng(50);
	const auto arch = random_nnl_arch(rng);
	const auto shapes = arch.shapes();
	const std::size_t first = shapes[0].features();
	const std::size_t second = shapes[1].features();
	BlockArchitecture<float> swapped = arch;
	std::swap(swapped.blocks[0], swapped.blocks[1]);
	for (std::size_t i = 0; i < second; ++i) {
		for (std::size_t c = 0; c < 5; ++c) {
			swapped.classifier.weights(i, c) = arch.classifier.weights(first + i, c);
		}
	}
	for (std::size_t i = 0; i < first; ++i) {
		for (std::size_t c = 0; c < 5; ++c) {
			swapped.classifier.weights(second + i, c) = arch.classifier.weights(i, c);
		}
	}
	const auto img = random_image<float>(12, rng);
	const auto a = block_forward(arch, img).logits;
	const auto b = block_forward(swapped, img).logits;
	for (std::size_t c = 0; c < 5; ++c) {
		EXPECT_NEAR(a[c], b[c], 1e-5);
	}
}

TEST(BlockForward, SingleBlockFeatureDim)
{
	Random rng(51);
	const std::vector<FilterBank> banks{unit_bank(400, 4, rng)};
	const std::vector<NnlBlockSpec> specs{{40, 1, {11, 2}}};
	const auto arch = make_nnl_architecture(banks, specs, 10);
	EXPECT_EQ(arch.feature_dim(), 40000u);
	EXPECT_EQ(block_forward(arch, random_image<float>(32, rng), false).features.size(), 40000u);
}

TEST(BlockForward, ClassifierMismatchThrows)
{
	Random rng(52);
	auto arch = random_nnl_arch(rng);
	arch.classifier = zero_classifier<float>(arch.feature_dim() + 1, 5);
	EXPECT_THROW(block_forward(arch, random_image<float>(12, rng)), ConfigError);
	EXPECT_THROW(arch.validate(), ConfigError);
	EXPECT_THROW(block_forward(random_nnl_arch(rng), random_image<float>(13, rng)), ConfigError);
}

TEST(BlockForward, NetworkLogitsScaleInvariant)
{
	Random rng(53);
	const auto arch = random_nnl_arch(rng);
	for (int t = 0; t < 5; ++t) {
		const auto img = random_image<float>(12, rng);
		const auto base = block_forward(arch, img, false).logits;
		for (const float c : {0.1f, 0.3f, 0.7f}) {
			const auto logits = block_forward(arch, scaled(img, c), false).logits;
			for (std::size_t i = 0; i < logits.size(); ++i) {
				EXPECT_NEAR(logits[i], base[i], 1e-5 * std::max(1.0f, std::abs(base[i])));
			}
			EXPECT_EQ(argmax<float>(logits), argmax<float>(base));
		}
	}
}

TEST(BlockForward, PureAndRepeatable)
{
	Random rng(54);
	const auto arch = random_nnl_arch(rng);
	const auto img = random_image<float>(12, rng);
	EXPECT_EQ(block_forward(arch, img).logits, block_forward(arch, img).logits);
}

TEST(ModelFile, RoundTripNnlAndConv)
{
	TempDir dir;
	Random rng(55);
	const auto nnl_arch = random_nnl_arch(rng, 32);
	save_model(nnl_arch, dir / "n.nnlm");
	const auto loaded = load_model(dir / "n.nnlm");
	EXPECT_EQ(loaded.input_side, 32u);
	ASSERT_EQ(loaded.blocks.size(), 2u);
	EXPECT_EQ(std::get<NnlConvLayer>(loaded.blocks[1].conv).power, 2);
	EXPECT_EQ(std::get<NnlConvLayer>(loaded.blocks[0].conv).bank.weights, std::get<NnlConvLayer>(nnl_arch.blocks[0].conv).bank.weights);
	EXPECT_EQ(loaded.classifier.weights, nnl_arch.classifier.weights);
	EXPECT_EQ(loaded.classifier.biases, nnl_arch.classifier.biases);

	const std::vector<ConvBlockSpec> specs{{3, 2, 1, {2, 2}}};
	const auto conv_arch = init_conv_architecture<float>(specs, 4, 7, 6);
	save_model(conv_arch, dir / "c.nnlm");
	const auto conv_loaded = load_model(dir / "c.nnlm");
	EXPECT_EQ(conv_loaded.feature_dim(), conv_arch.feature_dim()); // side 5 and 6 both give 2x2 pooled maps
	const auto img = random_image<float>(6, rng);
	EXPECT_EQ(block_forward(conv_loaded, img).logits, block_forward(conv_arch, img).logits);
	EXPECT_EQ(std::get<ConvLayer<float>>(conv_loaded.blocks[0].conv).weights, std::get<ConvLayer<float>>(conv_arch.blocks[0].conv).weights);
	save_model(conv_loaded, dir / "c2.nnlm");
	std::ifstream a(dir / "c.nnlm", std::ios::binary);
	std::ifstream b(dir / "c2.nnlm", std::ios::binary);
	EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(ModelFile, RejectsBadMagic)
{
	std::stringstream bad("NNLF....");
	EXPECT_THROW(read_model(bad), FormatError);
}
