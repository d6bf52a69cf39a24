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
#include <nnl/random.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// Number of window positions along one side: floor((side - window) / stride) + 1.
inline std::size_t patch_grid_side(std::size_t side, std::size_t window, std::size_t stride)
{
	if (window == 0 || stride == 0) {
		throw ConfigError("window and stride must be positive");
	}
	if (window > side) {
		throw ConfigError("window " + std::to_string(window) + " exceeds image side " + std::to_string(side));
	}
	return (side - window) / stride + 1;
}

inline std::size_t patch_length(std::size_t window) { return window * window * kColorChannels; }

// Copies the window at (top, left) into out, planar channel order, row-major
// within each channel.
template <class T>
void copy_patch(const Image<T>& image, std::size_t window, std::size_t top, std::size_t left, std::span<T> out)
{
	std::size_t o = 0;
	for (std::size_t c = 0; c < kColorChannels; ++c) {
		for (std::size_t r = 0; r < window; ++r) {
			const T* src = &image.at(c, top + r, left);
			for (std::size_t x = 0; x < window; ++x) {
				out[o++] = src[x];
			}
		}
	}
}

// im2col: one flattened patch per row, positions in row-major order.
template <class T>
Matrix<T> extract_patches(const Image<T>& image, std::size_t window, std::size_t stride)
{
	if (image.height != image.width) {
		throw ConfigError("only square images are supported");
	}
	const std::size_t grid = patch_grid_side(image.height, window, stride);
	Matrix<T> patches(grid * grid, patch_length(window));
	for (std::size_t py = 0; py < grid; ++py) {
		for (std::size_t px = 0; px < grid; ++px) {
			copy_patch<T>(image, window, py * stride, px * stride, patches.row(py * grid + px));
		}
	}
	return patches;
}

struct PatchBatch {
	Matrix<float> patches;
	std::size_t window = 0;
	bool normalized = false;
};

inline PatchBatch normalize_batch(PatchBatch batch)
{
	for (std::size_t r = 0; r < batch.patches.rows(); ++r) {
		l2_normalize_inplace<float>(batch.patches.row(r));
	}
	batch.normalized = true;
	return batch;
}

// Every (image, row, col) window of a dataset, addressed by a flat index and
// gathered on demand so the full patch set never sits in memory.
class PatchSet {
public:
	PatchSet(const ImageDataset& dataset, std::size_t window, std::size_t stride = 1)
		: dataset_(&dataset), window_(window), stride_(stride)
	{
		if (dataset.height != dataset.width) {
			throw ConfigError("only square images are supported");
		}
		grid_ = patch_grid_side(dataset.height, window, stride);
		const std::uint64_t total = static_cast<std::uint64_t>(dataset.size()) * grid_ * grid_;
		if (total > std::numeric_limits<std::uint32_t>::max()) {
			throw ConfigError("patch set too large for 32-bit patch indices");
		}
		count_ = static_cast<std::size_t>(total);
	}

	std::size_t size() const { return count_; }
	std::size_t window() const { return window_; }
	std::size_t length() const { return patch_length(window_); }
	std::size_t per_image() const { return grid_ * grid_; }

	// Pixels scaled to [0, 1], same arithmetic as image_to_float.
	void gather(std::size_t index, std::span<float> out) const
	{
		const std::size_t image = index / per_image();
		const std::size_t pos = index % per_image();
		const std::size_t top = (pos / grid_) * stride_;
		const std::size_t left = (pos % grid_) * stride_;
		const auto pixels = dataset_->image(image);
		const std::size_t h = dataset_->height;
		const std::size_t w = dataset_->width;
		std::size_t o = 0;
		for (std::size_t c = 0; c < kColorChannels; ++c) {
			for (std::size_t r = 0; r < window_; ++r) {
				const std::uint8_t* src = pixels.data() + (c * h + top + r) * w + left;
				for (std::size_t x = 0; x < window_; ++x) {
					out[o++] = static_cast<float>(src[x]) / 255.0f;
				}
			}
		}
	}

private:
	const ImageDataset* dataset_;
	std::size_t window_;
	std::size_t stride_;
	std::size_t grid_ = 0;
	std::size_t count_ = 0;
};

// One epoch over a PatchSet in an order fixed by (seed, epoch). The last
// batch may be short.
class EpochStream {
public:
	EpochStream(const PatchSet& patches, std::size_t minibatch_size, std::uint64_t seed, std::uint64_t epoch, bool normalize = false)
		: patches_(&patches), minibatch_(minibatch_size), normalize_(normalize)
	{
		if (minibatch_size == 0) {
			throw ConfigError("minibatch size must be at least 1");
		}
		Random rng = Random::derived(seed, epoch);
		order_ = random_permutation(patches.size(), rng);
	}

	std::span<const std::uint32_t> order() const { return order_; }
	std::size_t batch_count() const { return (order_.size() + minibatch_ - 1) / minibatch_; }

	// Fills batch with the next minibatch; returns false once the epoch is done.
	bool next(PatchBatch& batch)
	{
		if (cursor_ >= order_.size()) {
			return false;
		}
		const std::size_t n = std::min(minibatch_, order_.size() - cursor_);
		if (batch.patches.rows() != n || batch.patches.cols() != patches_->length()) {
			batch.patches = Matrix<float>(n, patches_->length());
		}
		batch.window = patches_->window();
		const std::uint32_t* ids = order_.data() + cursor_;
		parallel_for(
			n, [&](std::size_t r) { patches_->gather(ids[r], batch.patches.row(r)); }, 256);
		batch.normalized = false;
		if (normalize_) {
			batch = normalize_batch(std::move(batch));
		}
		cursor_ += n;
		return true;
	}

private:
	const PatchSet* patches_;
	std::size_t minibatch_;
	bool normalize_;
	std::vector<std::uint32_t> order_;
	std::size_t cursor_ = 0;
};

} // namespace nnl
