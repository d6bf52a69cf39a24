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
#include <nnl/errors.hpp>
#include <nnl/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nnl {

inline constexpr std::size_t kColorChannels = 3;

// Planar RGB image: all R rows, then all G rows, then all B rows.
template <class T>
struct Image {
	std::size_t height = 0;
	std::size_t width = 0;
	std::vector<T> pixels;

	Image() = default;
	Image(std::size_t h, std::size_t w, T fill = T(0)) : height(h), width(w), pixels(kColorChannels * h * w, fill) {}

	T& at(std::size_t channel, std::size_t row, std::size_t col) { return pixels[(channel * height + row) * width + col]; }
	const T& at(std::size_t channel, std::size_t row, std::size_t col) const { return pixels[(channel * height + row) * width + col]; }
};

// Labeled 8-bit images sharing one size, stored back to back.
struct ImageDataset {
	std::string name;
	std::size_t height = 32;
	std::size_t width = 32;
	std::size_t class_count = 10;
	std::vector<std::uint8_t> pixels;
	std::vector<std::uint16_t> labels;

	std::size_t size() const { return labels.size(); }
	std::size_t image_bytes() const { return kColorChannels * height * width; }

	std::span<const std::uint8_t> image(std::size_t i) const { return {pixels.data() + i * image_bytes(), image_bytes()}; }
	std::span<std::uint8_t> image(std::size_t i) { return {pixels.data() + i * image_bytes(), image_bytes()}; }

	friend bool operator==(const ImageDataset&, const ImageDataset&) = default;
};

// Multiplicative shadow over the leading image columns.
struct ShadowSpec {
	std::size_t columns = 0;
	double intensity = 1.0;

	void validate(std::size_t image_width) const
	{
		if (!(intensity > 0.0 && intensity <= 1.0)) {
			throw ConfigError("shadow intensity must be in (0, 1], got " + std::to_string(intensity));
		}
		if (columns > image_width) {
			throw ConfigError("shadow covers " + std::to_string(columns) + " columns of a " + std::to_string(image_width) + "-wide image");
		}
	}

	friend bool operator==(const ShadowSpec&, const ShadowSpec&) = default;
};

// ---------------------------------------------------------------------------
// CIFAR-10 binary: records of 1 label byte + 1024 R + 1024 G + 1024 B bytes.

inline constexpr std::size_t kCifarImageBytes = 3072;
inline constexpr std::size_t kCifarRecordBytes = kCifarImageBytes + 1;

inline ImageDataset load_cifar10_binary(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path.string());
	}
	std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	if (bytes.size() % kCifarRecordBytes != 0) {
		throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of " + std::to_string(kCifarRecordBytes));
	}
	ImageDataset ds;
	ds.name = path.filename().string();
	const std::size_t count = bytes.size() / kCifarRecordBytes;
	ds.labels.resize(count);
	ds.pixels.resize(count * kCifarImageBytes);
	for (std::size_t i = 0; i < count; ++i) {
		const std::uint8_t* record = bytes.data() + i * kCifarRecordBytes;
		if (record[0] >= 10) {
			throw FormatError(path.string() + ": record " + std::to_string(i) + " has label " + std::to_string(record[0]));
		}
		ds.labels[i] = record[0];
		std::copy(record + 1, record + kCifarRecordBytes, ds.pixels.begin() + static_cast<std::ptrdiff_t>(i * kCifarImageBytes));
	}
	return ds;
}

inline void save_cifar10_binary(const ImageDataset& ds, const std::filesystem::path& path)
{
	if (ds.image_bytes() != kCifarImageBytes || ds.class_count > 10) {
		throw ConfigError("CIFAR-10 binary holds 32x32 images with at most 10 classes");
	}
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write " + path.string());
	}
	for (std::size_t i = 0; i < ds.size(); ++i) {
		out.put(static_cast<char>(ds.labels[i]));
		const auto img = ds.image(i);
		out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
	}
	if (!out) {
		throw FormatError("write failed for " + path.string());
	}
}

// ---------------------------------------------------------------------------
// Generic raw format: "RAWI", u32 count, u32 class_count, u8 label_bytes (1|2),
// then records of label (LE) + 3072 planar pixel bytes.

inline void save_raw(const ImageDataset& ds, const std::filesystem::path& path)
{
	if (ds.image_bytes() != kCifarImageBytes) {
		throw ConfigError("raw format holds 32x32 RGB images");
	}
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write " + path.string());
	}
	const std::uint8_t label_bytes = ds.class_count > 256 ? 2 : 1;
	io::write_magic(out, "RAWI");
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.size()));
	io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.class_count));
	io::write_le<std::uint8_t>(out, label_bytes);
	for (std::size_t i = 0; i < ds.size(); ++i) {
		if (label_bytes == 1) {
			io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(ds.labels[i]));
		} else {
			io::write_le<std::uint16_t>(out, ds.labels[i]);
		}
		const auto img = ds.image(i);
		out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
	}
	if (!out) {
		throw FormatError("write failed for " + path.string());
	}
}

inline ImageDataset load_raw(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path.string());
	}
	io::expect_magic(in, "RAWI");
	const auto count = io::read_le<std::uint32_t>(in, "record count");
	const auto class_count = io::read_le<std::uint32_t>(in, "class count");
	const auto label_bytes = io::read_le<std::uint8_t>(in, "label width");
	if (label_bytes != 1 && label_bytes != 2) {
		throw FormatError(path.string() + ": label width must be 1 or 2 bytes");
	}
	if (class_count == 0 || class_count > 65536) {
		throw FormatError(path.string() + ": bad class count");
	}
	ImageDataset ds;
	ds.name = path.filename().string();
	ds.class_count = class_count;
	ds.labels.resize(count);
	ds.pixels.resize(static_cast<std::size_t>(count) * kCifarImageBytes);
	for (std::size_t i = 0; i < count; ++i) {
		const std::uint16_t label = label_bytes == 1 ? io::read_le<std::uint8_t>(in, "label") : io::read_le<std::uint16_t>(in, "label");
		if (label >= class_count) {
			throw FormatError(path.string() + ": record " + std::to_string(i) + " has label " + std::to_string(label));
		}
		ds.labels[i] = label;
		io::read_array<std::uint8_t>(in, ds.image(i), "pixels");
	}
	if (in.peek() != std::char_traits<char>::eof()) {
		throw FormatError(path.string() + ": trailing bytes after " + std::to_string(count) + " records");
	}
	return ds;
}

// RAWI files are recognized by magic; anything else is read as CIFAR-10.
inline ImageDataset load_dataset(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path.string());
	}
	char magic[4] = {};
	in.read(magic, 4);
	if (in.gcount() == 4 && std::string(magic, 4) == "RAWI") {
		return load_raw(path);
	}
	return load_cifar10_binary(path);
}

// ---------------------------------------------------------------------------

inline ImageDataset subset(const ImageDataset& ds, std::span<const std::uint32_t> indices, std::string name = {})
{
	ImageDataset out;
	out.name = name.empty() ? ds.name : std::move(name);
	out.height = ds.height;
	out.width = ds.width;
	out.class_count = ds.class_count;
	out.labels.reserve(indices.size());
	out.pixels.reserve(indices.size() * ds.image_bytes());
	for (const std::uint32_t i : indices) {
		if (i >= ds.size()) {
			throw ConfigError("subset index out of range");
		}
		out.labels.push_back(ds.labels[i]);
		const auto img = ds.image(i);
		out.pixels.insert(out.pixels.end(), img.begin(), img.end());
	}
	return out;
}

// First `count` records (or all if fewer).
inline ImageDataset head(const ImageDataset& ds, std::size_t count, std::size_t offset = 0)
{
	std::vector<std::uint32_t> idx;
	for (std::size_t i = offset; i < std::min(ds.size(), offset + count); ++i) {
		idx.push_back(static_cast<std::uint32_t>(i));
	}
	return subset(ds, idx);
}

inline ImageDataset concatenate(const ImageDataset& a, const ImageDataset& b)
{
	if (a.height != b.height || a.width != b.width) {
		throw ConfigError("cannot concatenate datasets with different image sizes");
	}
	ImageDataset out = a;
	out.class_count = std::max(a.class_count, b.class_count);
	out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
	out.pixels.insert(out.pixels.end(), b.pixels.begin(), b.pixels.end());
	return out;
}

struct SplitIndices {
	std::vector<std::uint32_t> train;
	std::vector<std::uint32_t> val;
};

// Seeded permutation; the first round(count * val_fraction) entries go to
// validation. Index lists are returned in ascending order.
inline SplitIndices split_indices(std::size_t count, double val_fraction, std::uint64_t seed)
{
	if (count == 0) {
		throw ConfigError("cannot split an empty dataset");
	}
	if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
		throw ConfigError("validation fraction must be in (0, 1)");
	}
	Random rng(seed);
	auto order = random_permutation(count, rng);
	const auto val_count = static_cast<std::size_t>(std::llround(static_cast<double>(count) * val_fraction));
	SplitIndices split;
	split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
	split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
	std::sort(split.val.begin(), split.val.end());
	std::sort(split.train.begin(), split.train.end());
	return split;
}

inline std::pair<ImageDataset, ImageDataset> split_train_val(const ImageDataset& ds, double val_fraction, std::uint64_t seed)
{
	const SplitIndices split = split_indices(ds.size(), val_fraction, seed);
	return {subset(ds, split.train, ds.name + ":train"), subset(ds, split.val, ds.name + ":val")};
}

// Pixels in the first spec.columns columns of every channel are multiplied
// by spec.intensity and rounded to the nearest 8-bit value.
inline ImageDataset apply_shadow(const ImageDataset& ds, const ShadowSpec& spec)
{
	spec.validate(ds.width);
	ImageDataset out = ds;
	for (std::size_t i = 0; i < out.size(); ++i) {
		auto img = out.image(i);
		for (std::size_t c = 0; c < kColorChannels; ++c) {
			for (std::size_t r = 0; r < out.height; ++r) {
				std::uint8_t* row = img.data() + (c * out.height + r) * out.width;
				for (std::size_t x = 0; x < spec.columns; ++x) {
					row[x] = static_cast<std::uint8_t>(std::lround(static_cast<double>(row[x]) * spec.intensity));
				}
			}
		}
	}
	return out;
}

// [0, 255] -> [0, 1].
template <class T = float>
Image<T> image_to_float(const ImageDataset& ds, std::size_t i)
{
	Image<T> img(ds.height, ds.width);
	const auto src = ds.image(i);
	for (std::size_t p = 0; p < src.size(); ++p) {
		img.pixels[p] = static_cast<T>(src[p]) / T(255);
	}
	return img;
}

template <class T = float>
std::vector<Image<T>> to_float(const ImageDataset& ds)
{
	std::vector<Image<T>> out;
	out.reserve(ds.size());
	for (std::size_t i = 0; i < ds.size(); ++i) {
		out.push_back(image_to_float<T>(ds, i));
	}
	return out;
}

} // namespace nnl
