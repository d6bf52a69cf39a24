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

#include <stdexcept>
#include <string>

namespace nnl {

// Bad arguments, shapes or config values supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
	explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed data or model files.
class FormatError : public std::runtime_error {
public:
	explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during training (NaN loss or gradient).
class TrainingError : public std::runtime_error {
public:
	explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nnl
