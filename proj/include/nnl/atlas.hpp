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

#include <nnl/errors.hpp>
#include <nnl/hebbian.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// Interleaved 8-bit RGB raster.
struct RgbImage {
	std::size_t width = 0;
	std::size_t height = 0;
	std::vector<std::uint8_t> pixels; // row-major, RGB per pixel

	std::uint8_t* at(std::size_t row, std::size_t col) { return pixels.data() + 3 * (row * width + col); }
	const std::uint8_t* at(std::size_t row, std::size_t col) const { return pixels.data() + 3 * (row * width + col); }
};

// One filter as a W×W RGB tile. The stretch maps [min, max] over all three
// channels jointly to [0, 255]; a constant filter becomes mid-gray.
inline RgbImage filter_tile(std::span<const float> row, std::size_t window)
{
	const std::size_t plane = window * window;
	if (row.size() != plane * kColorChannels) {
		throw ConfigError("filter row length does not match window");
	}
	const auto [lo_it, hi_it] = std::minmax_element(row.begin(), row.end());
	const double lo = *lo_it;
	const double hi = *hi_it;
	RgbImage tile{window, window, std::vector<std::uint8_t>(plane * 3)};
	for (std::size_t p = 0; p < plane; ++p) {
		for (std::size_t c = 0; c < kColorChannels; ++c) {
			std::uint8_t v = 128;
			if (hi > lo) {
				v = static_cast<std::uint8_t>(std::lround((row[c * plane + p] - lo) / (hi - lo) * 255.0));
			}
			tile.pixels[3 * p + c] = v;
		}
	}
	return tile;
}

// Filters ordered by descending win count, ties by row index.
inline std::vector<std::size_t> atlas_order(const FilterBank& bank)
{
	std::vector<std::size_t> order(bank.weights.rows());
	std::iota(order.begin(), order.end(), std::size_t{0});
	if (bank.win_counts.size() == order.size()) {
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bank.win_counts[a] > bank.win_counts[b]; });
	}
	return order;
}

// Tiles every filter into a grid with 1-pixel black separators.
inline RgbImage filter_atlas(const FilterBank& bank, std::size_t columns)
{
	bank.validate();
	const std::size_t count = bank.weights.rows();
	if (columns == 0) {
		throw ConfigError("atlas needs at least one column");
	}
	columns = std::min(columns, std::max<std::size_t>(count, 1));
	const std::size_t rows = (count + columns - 1) / columns;
	const std::size_t w = bank.window;
	RgbImage atlas;
	atlas.width = columns * (w + 1) + 1;
	atlas.height = rows * (w + 1) + 1;
	atlas.pixels.assign(atlas.width * atlas.height * 3, 0);
	const auto order = atlas_order(bank);
	for (std::size_t i = 0; i < count; ++i) {
		const RgbImage tile = filter_tile(bank.weights.row(order[i]), w);
		const std::size_t top = (i / columns) * (w + 1) + 1;
		const std::size_t left = (i % columns) * (w + 1) + 1;
		for (std::size_t r = 0; r < w; ++r) {
			std::copy_n(tile.at(r, 0), 3 * w, atlas.at(top + r, left));
		}
	}
	return atlas;
}

namespace png_detail {

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v)
{
	for (int shift = 24; shift >= 0; shift -= 8) {
		out.push_back(static_cast<std::uint8_t>(v >> shift));
	}
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5], const std::vector<std::uint8_t>& data)
{
	put_u32_be(out, static_cast<std::uint32_t>(data.size()));
	const std::size_t start = out.size();
	out.insert(out.end(), type, type + 4);
	out.insert(out.end(), data.begin(), data.end());
	const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
	put_u32_be(out, static_cast<std::uint32_t>(crc));
}

} // namespace png_detail

inline std::vector<std::uint8_t> encode_png(const RgbImage& image)
{
	using namespace png_detail;
	std::vector<std::uint8_t> raw;
	raw.reserve(image.height * (image.width * 3 + 1));
	for (std::size_t r = 0; r < image.height; ++r) {
		raw.push_back(0); // filter type none
		raw.insert(raw.end(), image.at(r, 0), image.at(r, 0) + 3 * image.width);
	}
	uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
	std::vector<std::uint8_t> packed(packed_size);
	if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
		throw FormatError("zlib compression failed");
	}
	packed.resize(packed_size);

	std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
	std::vector<std::uint8_t> header;
	put_u32_be(header, static_cast<std::uint32_t>(image.width));
	put_u32_be(header, static_cast<std::uint32_t>(image.height));
	header.insert(header.end(), {8, 2, 0, 0, 0}); // 8-bit RGB, no interlace
	put_chunk(out, "IHDR", header);
	put_chunk(out, "IDAT", packed);
	put_chunk(out, "IEND", {});
	return out;
}

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& image)
{
	const std::string head = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
	std::vector<std::uint8_t> out(head.begin(), head.end());
	out.insert(out.end(), image.pixels.begin(), image.pixels.end());
	return out;
}

// Writes PNG, or binary PPM when the path ends in ".ppm".
inline void export_filter_atlas(const FilterBank& bank, std::size_t columns, const std::filesystem::path& path)
{
	const RgbImage atlas = filter_atlas(bank, columns);
	const auto bytes = path.extension() == ".ppm" ? encode_ppm(atlas) : encode_png(atlas);
	std::ofstream out(path, std::ios::binary);
	out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
	if (!out) {
		throw FormatError("cannot write " + path.string());
	}
}

} // namespace nnl
