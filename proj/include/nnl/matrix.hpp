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
#include <nnl/parallel.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nnl {

// Patches or vectors with L2 norm below this normalize to zero.
inline constexpr double kNormFloor = 1e-8;
// Probability floor inside cross_entropy.
inline constexpr double kProbabilityFloor = 1e-12;

// Dense row-major matrix. T is float for training/inference and double for
// gradient verification.
template <class T>
class Matrix {
public:
	using value_type = T;

	Matrix() = default;
	Matrix(std::size_t rows, std::size_t cols, T fill = T(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
	Matrix(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data))
	{
		if (data_.size() != rows_ * cols_) {
			throw ConfigError("matrix data length " + std::to_string(data_.size()) + " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
		}
	}
	// Nested initializer, handy in tests: Matrix<float>{{1, 2}, {3, 4}}.
	Matrix(std::initializer_list<std::initializer_list<T>> rows)
	{
		rows_ = rows.size();
		cols_ = rows_ == 0 ? 0 : rows.begin()->size();
		data_.reserve(rows_ * cols_);
		for (const auto& r : rows) {
			if (r.size() != cols_) {
				throw ConfigError("ragged matrix initializer");
			}
			data_.insert(data_.end(), r.begin(), r.end());
		}
	}

	std::size_t rows() const { return rows_; }
	std::size_t cols() const { return cols_; }
	std::size_t size() const { return data_.size(); }
	bool empty() const { return data_.empty(); }

	T& operator()(std::size_t r, std::size_t c)
	{
		assert(r < rows_ && c < cols_);
		return data_[r * cols_ + c];
	}
	const T& operator()(std::size_t r, std::size_t c) const
	{
		assert(r < rows_ && c < cols_);
		return data_[r * cols_ + c];
	}

	std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
	std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

	std::span<T> values() { return data_; }
	std::span<const T> values() const { return data_; }
	T* data() { return data_.data(); }
	const T* data() const { return data_.data(); }
	const std::vector<T>& storage() const { return data_; }

	void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

	Matrix transposed() const
	{
		Matrix out(cols_, rows_);
		for (std::size_t r = 0; r < rows_; ++r) {
			for (std::size_t c = 0; c < cols_; ++c) {
				out.data_[c * rows_ + r] = data_[r * cols_ + c];
			}
		}
		return out;
	}

	template <class U>
	Matrix<U> cast() const
	{
		std::vector<U> converted(data_.begin(), data_.end());
		return Matrix<U>(rows_, cols_, std::move(converted));
	}

	friend bool operator==(const Matrix& a, const Matrix& b)
	{
		return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
	}

private:
	std::size_t rows_ = 0;
	std::size_t cols_ = 0;
	std::vector<T> data_;
};

template <class T>
bool all_finite(std::span<const T> values)
{
	return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

// c[m x n] (+)= a[m x k] * b[k x n], all row-major. Each output element is
// accumulated over p = 0..k-1 in order; rows are split across threads, so the
// result is bit-identical for any thread count.
template <class T>
void gemm_kernel(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k, std::size_t n, bool accumulate = false)
{
	assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
	const std::size_t rows_per_thread = std::max<std::size_t>(1, (1u << 15) / std::max<std::size_t>(1, k * n));
	parallel_for(
		m,
		[&](std::size_t i) {
			T* out = c.data() + i * n;
			if (!accumulate) {
				std::fill(out, out + n, T(0));
			}
			const T* a_row = a.data() + i * k;
			for (std::size_t p = 0; p < k; ++p) {
				const T scale = a_row[p];
				if (scale == T(0)) {
					continue;
				}
				const T* b_row = b.data() + p * n;
				for (std::size_t j = 0; j < n; ++j) {
					out[j] += scale * b_row[j];
				}
			}
		},
		rows_per_thread);
}

// op(a) * op(b) where op optionally transposes.
template <class T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b, bool transpose_a = false, bool transpose_b = false)
{
	const std::size_t m = transpose_a ? a.cols() : a.rows();
	const std::size_t k = transpose_a ? a.rows() : a.cols();
	const std::size_t kb = transpose_b ? b.cols() : b.rows();
	const std::size_t n = transpose_b ? b.rows() : b.cols();
	if (k != kb) {
		throw ConfigError("gemm: inner dimensions differ (" + std::to_string(k) + " vs " + std::to_string(kb) + ")");
	}
	Matrix<T> out(m, n);
	if (transpose_a && transpose_b) {
		const Matrix<T> at = a.transposed();
		const Matrix<T> bt = b.transposed();
		gemm_kernel<T>(at.values(), bt.values(), out.values(), m, k, n);
	} else if (transpose_a) {
		const Matrix<T> at = a.transposed();
		gemm_kernel<T>(at.values(), b.values(), out.values(), m, k, n);
	} else if (transpose_b) {
		const Matrix<T> bt = b.transposed();
		gemm_kernel<T>(a.values(), bt.values(), out.values(), m, k, n);
	} else {
		gemm_kernel<T>(a.values(), b.values(), out.values(), m, k, n);
	}
	return out;
}

// [ReLU(x)]^n by binary exponentiation.
template <class T>
T rectified_power(T x, int power)
{
	assert(power >= 1);
	if (!(x > T(0))) {
		return T(0);
	}
	T result = T(1);
	T base = x;
	unsigned e = static_cast<unsigned>(power);
	while (e != 0) {
		if (e & 1u) {
			result *= base;
		}
		e >>= 1;
		if (e != 0) {
			base *= base;
		}
	}
	return result;
}

// L2 norm accumulated in double, in index order.
template <class T>
double l2_norm(std::span<const T> v)
{
	double sum = 0.0;
	for (const T x : v) {
		sum += static_cast<double>(x) * static_cast<double>(x);
	}
	return std::sqrt(sum);
}

// Scales v to unit length in place. Vectors with norm below kNormFloor become
// zero. Returns the original norm.
template <class T>
double l2_normalize_inplace(std::span<T> v)
{
	const double norm = l2_norm<T>(v);
	if (norm < kNormFloor) {
		std::fill(v.begin(), v.end(), T(0));
		return norm;
	}
	const double inv = 1.0 / norm;
	for (T& x : v) {
		x = static_cast<T>(static_cast<double>(x) * inv);
	}
	return norm;
}

template <class T>
std::vector<T> l2_normalize(std::span<const T> v)
{
	std::vector<T> out(v.begin(), v.end());
	l2_normalize_inplace<T>(out);
	return out;
}

template <class T>
void softmax_inplace(std::span<T> logits)
{
	if (logits.empty()) {
		return;
	}
	const T top = *std::max_element(logits.begin(), logits.end());
	double sum = 0.0;
	for (T& x : logits) {
		x = static_cast<T>(std::exp(static_cast<double>(x - top)));
		sum += static_cast<double>(x);
	}
	const double inv = 1.0 / sum;
	for (T& x : logits) {
		x = static_cast<T>(static_cast<double>(x) * inv);
	}
}

template <class T>
std::vector<T> softmax(std::span<const T> logits)
{
	std::vector<T> out(logits.begin(), logits.end());
	softmax_inplace<T>(out);
	return out;
}

template <class T>
T cross_entropy(std::span<const T> probs, std::size_t label)
{
	if (label >= probs.size()) {
		throw ConfigError("cross_entropy: label " + std::to_string(label) + " out of range for " + std::to_string(probs.size()) + " classes");
	}
	const double p = std::max(static_cast<double>(probs[label]), kProbabilityFloor);
	return static_cast<T>(-std::log(p));
}

// Index of the largest value; ties go to the lowest index.
template <class T>
std::size_t argmax(std::span<const T> values)
{
	std::size_t best = 0;
	for (std::size_t i = 1; i < values.size(); ++i) {
		if (values[i] > values[best]) {
			best = i;
		}
	}
	return best;
}

} // namespace nnl
