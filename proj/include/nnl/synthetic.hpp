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
#include <nnl/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

// Procedural 32x32 RGB images in CIFAR-10 layout, for tests and demos where
// the real dataset is not available. Ten shape classes are drawn at random
// position and size with random foreground/background colors, a background
// gradient, pixel noise and a global illumination factor, so color and
// brightness carry no label information and only shape does.
namespace nnl {

struct ShapesOptions {
	double min_illumination = 0.5;
	double max_illumination = 1.0;
	double noise = 0.04;
	double min_contrast = 0.25;
	// Random blob of a third color per image.
	bool distractor = true;
};

namespace detail {

// Coverage of class `label` at point (x, y) in shape-local coordinates:
// (u, v) relative to the shape center in units of the shape size.
inline bool shape_contains(int label, double u, double v)
{
	const double au = std::abs(u);
	const double av = std::abs(v);
	const double r = std::sqrt(u * u + v * v);
	switch (label) {
	case 0: return r <= 1.0;                                   // disk
	case 1: return au <= 0.85 && av <= 0.85;                   // square
	case 2: return r <= 1.0 && r >= 0.6;                       // ring
	case 3: return au <= 1.0 && av <= 1.0 && std::fmod(v + 1.0 + 8.0, 0.8) < 0.4;  // horizontal stripes
	case 4: return au <= 1.0 && av <= 1.0 && std::fmod(u + 1.0 + 8.0, 0.8) < 0.4;  // vertical stripes
	case 5: return au <= 1.0 && av <= 1.0 && std::fmod(u + v + 8.0, 0.9) < 0.45;   // diagonal /
	case 6: return au <= 1.0 && av <= 1.0 && std::fmod(u - v + 8.0, 0.9) < 0.45;   // diagonal \ .
	case 7: return (au <= 1.0 && av <= 0.25) || (av <= 1.0 && au <= 0.25);          // plus
	case 8: return au <= 1.0 && av <= 1.0 && (std::abs(u - v) <= 0.3 || std::abs(u + v) <= 0.3); // X
	case 9: return v <= 0.9 && v >= -0.9 && au <= (v + 0.9) * 0.6;                   // triangle
	default: return false;
	}
}

inline double luminance(const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

} // namespace detail

inline ImageDataset make_shapes_dataset(std::size_t count, std::uint64_t seed, const ShapesOptions& options = {})
{
	constexpr std::size_t kSide = 32;
	constexpr int kSuper = 3;
	ImageDataset ds;
	ds.name = "shapes10";
	ds.height = kSide;
	ds.width = kSide;
	ds.class_count = 10;
	ds.labels.resize(count);
	ds.pixels.resize(count * kCifarImageBytes);

	Random rng(Random::mix(seed ^ 0x5a4e5ULL));
	auto random_color = [&] { return std::array<double, 3>{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)}; };
	for (std::size_t i = 0; i < count; ++i) {
		const int label = static_cast<int>(rng.below(10));
		ds.labels[i] = static_cast<std::uint16_t>(label);
		const auto bg = random_color();
		std::array<double, 3> fg;
		do {
			fg = random_color();
		} while (std::abs(detail::luminance(fg) - detail::luminance(bg)) < options.min_contrast);
		const auto blob_color = random_color();
		const double cx = rng.uniform(10.0, 22.0);
		const double cy = rng.uniform(10.0, 22.0);
		const double size = rng.uniform(6.0, 10.5);
		const double angle = rng.uniform(-0.17, 0.17);
		const double ca = std::cos(angle);
		const double sa = std::sin(angle);
		const double grad_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
		const double grad_amp = rng.uniform(0.0, 0.15);
		const double light = rng.uniform(options.min_illumination, options.max_illumination);
		const double bx = rng.uniform(2.0, 30.0);
		const double by = rng.uniform(2.0, 30.0);
		const double br = rng.uniform(1.5, 3.5);

		auto img = ds.image(i);
		for (std::size_t y = 0; y < kSide; ++y) {
			for (std::size_t x = 0; x < kSide; ++x) {
				int hits = 0;
				for (int sy = 0; sy < kSuper; ++sy) {
					for (int sx = 0; sx < kSuper; ++sx) {
						const double px = static_cast<double>(x) + (sx + 0.5) / kSuper - cx;
						const double py = static_cast<double>(y) + (sy + 0.5) / kSuper - cy;
						const double u = (ca * px + sa * py) / size;
						const double v = (-sa * px + ca * py) / size;
						hits += detail::shape_contains(label, u, v) ? 1 : 0;
					}
				}
				const double cover = static_cast<double>(hits) / (kSuper * kSuper);
				const double shade = 1.0 + grad_amp * ((static_cast<double>(x) - 16.0) * std::cos(grad_angle) + (static_cast<double>(y) - 16.0) * std::sin(grad_angle)) / 16.0;
				const double bdist = std::hypot(static_cast<double>(x) - bx, static_cast<double>(y) - by);
				const bool in_blob = options.distractor && bdist <= br && cover == 0.0;
				for (std::size_t c = 0; c < 3; ++c) {
					double value = in_blob ? blob_color[c] : bg[c] * shade * (1.0 - cover) + fg[c] * cover;
					value = light * value + options.noise * rng.normal();
					value = std::clamp(value, 0.0, 1.0);
					img[(c * kSide + y) * kSide + x] = static_cast<std::uint8_t>(std::lround(value * 255.0));
				}
			}
		}
	}
	return ds;
}

} // namespace nnl
