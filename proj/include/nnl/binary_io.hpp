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

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

// Little-endian primitives shared by the .nnlf/.nnlm/RAWI formats.
namespace nnl::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void write_le(std::ostream& out, T value)
{
	static_assert(std::is_arithmetic_v<T>);
	std::array<char, sizeof(T)> bytes;
	std::memcpy(bytes.data(), &value, sizeof(T));
	if constexpr (std::endian::native == std::endian::big) {
		std::reverse(bytes.begin(), bytes.end());
	}
	out.write(bytes.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const char* what)
{
	static_assert(std::is_arithmetic_v<T>);
	std::array<char, sizeof(T)> bytes;
	if (!in.read(bytes.data(), sizeof(T))) {
		throw FormatError(std::string("unexpected end of file while reading ") + what);
	}
	if constexpr (std::endian::native == std::endian::big) {
		std::reverse(bytes.begin(), bytes.end());
	}
	T value;
	std::memcpy(&value, bytes.data(), sizeof(T));
	return value;
}

template <class T>
void write_array(std::ostream& out, std::span<const T> values)
{
	if constexpr (std::endian::native == std::endian::little) {
		out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
	} else {
		for (const T v : values) {
			write_le(out, v);
		}
	}
}

template <class T>
void read_array(std::istream& in, std::span<T> values, const char* what)
{
	if constexpr (std::endian::native == std::endian::little) {
		if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()))) {
			throw FormatError(std::string("unexpected end of file while reading ") + what);
		}
	} else {
		for (T& v : values) {
			v = read_le<T>(in, what);
		}
	}
}

inline void write_magic(std::ostream& out, const char (&magic)[5])
{
	out.write(magic, 4);
}

inline void expect_magic(std::istream& in, const char (&magic)[5])
{
	char got[4] = {};
	if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
		throw FormatError(std::string("bad magic, expected \"") + magic + "\"");
	}
}

} // namespace nnl::io
