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
#include <nnl/errors.hpp>
#include <nnl/hebbian.hpp>
#include <nnl/model.hpp>
#include <nnl/supervised.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// Plain-text run configuration: "[section]" headers, "key = value" lines,
// '#' comments. Architecture keys take a scalar (shared by every block) or a
// bracketed list with one entry per block.
namespace nnl {

enum class BlockType { nnl, conv };

struct BlockConfig {
	BlockType type = BlockType::nnl;
	std::size_t channels = 0;    // K
	std::size_t window = 0;      // W
	int power = 1;               // n
	std::size_t stride = 1;      // ST
	std::size_t pool_window = 1; // W_p
	std::size_t pool_stride = 1; // ST_p
	double delta = 0.2;          // anti-Hebbian strength
	std::size_t rank_m = 2;

	friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

struct RunConfig {
	std::uint64_t seed = 1;
	int threads = 1;

	std::vector<std::string> train_paths;
	std::vector<std::string> test_paths;
	std::size_t train_limit = 0; // 0 keeps every record
	std::size_t test_limit = 0;
	double val_fraction = 0.0;   // > 0 holds out a validation split as the test set

	HebbianConfig hebbian; // delta and rank_m come from the blocks
	std::vector<BlockConfig> blocks;
	SupervisedConfig supervised;

	std::string output_dir = ".";

	friend bool operator==(const RunConfig&, const RunConfig&) = default;

	HebbianConfig hebbian_for(std::size_t block) const
	{
		HebbianConfig h = hebbian;
		h.delta = blocks.at(block).delta;
		h.rank_m = blocks.at(block).rank_m;
		return h;
	}

	std::vector<NnlBlockSpec> nnl_specs() const
	{
		std::vector<NnlBlockSpec> specs;
		for (const auto& b : blocks) {
			specs.push_back({b.power, b.stride, {b.pool_window, b.pool_stride}});
		}
		return specs;
	}

	std::vector<ConvBlockSpec> conv_specs() const
	{
		std::vector<ConvBlockSpec> specs;
		for (const auto& b : blocks) {
			specs.push_back({b.channels, b.window, b.stride, {b.pool_window, b.pool_stride}});
		}
		return specs;
	}
};

namespace config_detail {

inline std::string trim(std::string s)
{
	const auto first = s.find_first_not_of(" \t\r");
	if (first == std::string::npos) {
		return {};
	}
	const auto last = s.find_last_not_of(" \t\r");
	return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& raw)
{
	std::string v = trim(raw);
	if (!v.empty() && v.front() == '[') {
		if (v.back() != ']') {
			throw ConfigError("unterminated list: " + raw);
		}
		v = v.substr(1, v.size() - 2);
	}
	std::vector<std::string> items;
	std::stringstream ss(v);
	std::string item;
	while (std::getline(ss, item, ',')) {
		item = trim(item);
		if (item.empty()) {
			throw ConfigError("empty list entry in: " + raw);
		}
		items.push_back(item);
	}
	if (items.empty()) {
		throw ConfigError("empty value");
	}
	return items;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& text)
{
	std::uint64_t value = 0;
	const auto* end = text.data() + text.size();
	const auto [ptr, ec] = std::from_chars(text.data(), end, value);
	if (ec != std::errc() || ptr != end) {
		throw ConfigError(key + ": expected a non-negative integer, got \"" + text + "\"");
	}
	return value;
}

inline double to_double(const std::string& key, const std::string& text)
{
	errno = 0;
	char* end = nullptr;
	const double value = std::strtod(text.c_str(), &end);
	if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(value)) {
		throw ConfigError(key + ": expected a number, got \"" + text + "\"");
	}
	return value;
}

inline bool to_bool(const std::string& key, const std::string& text)
{
	if (text == "true" || text == "yes" || text == "1") {
		return true;
	}
	if (text == "false" || text == "no" || text == "0") {
		return false;
	}
	throw ConfigError(key + ": expected true/false, got \"" + text + "\"");
}

inline BlockType to_block_type(const std::string& key, const std::string& text)
{
	if (text == "nnl") {
		return BlockType::nnl;
	}
	if (text == "conv") {
		return BlockType::conv;
	}
	throw ConfigError(key + ": expected nnl or conv, got \"" + text + "\"");
}

inline std::string format_double(double v)
{
	char buf[40];
	std::snprintf(buf, sizeof(buf), "%.17g", v);
	return buf;
}

inline const std::map<std::string, std::set<std::string>>& known_keys()
{
	static const std::map<std::string, std::set<std::string>> keys = {
		{"run", {"seed", "threads"}},
		{"data", {"train", "test", "train_limit", "test_limit", "val_fraction"}},
		{"hebbian", {"learning_rate", "epochs", "minibatch", "scale_update_by_max", "normalize_patches"}},
		{"architecture", {"type", "channels", "window", "power", "stride", "pool_window", "pool_stride", "delta", "rank_m"}},
		{"supervised", {"epochs", "minibatch", "schedule", "learning_rate"}},
		{"output", {"dir"}},
	};
	return keys;
}

} // namespace config_detail

// Warnings for values outside the ranges explored when the method was tuned.
inline std::vector<std::string> range_warnings(const RunConfig& config)
{
	std::vector<std::string> warnings;
	auto check = [&](std::size_t block, const char* name, double value, double lo, double hi) {
		if (value < lo || value > hi) {
			char buf[160];
			std::snprintf(buf, sizeof(buf), "block %zu: %s = %g outside the usual range [%g, %g]", block, name, value, lo, hi);
			warnings.emplace_back(buf);
		}
	};
	for (std::size_t b = 0; b < config.blocks.size(); ++b) {
		const auto& blk = config.blocks[b];
		check(b, "channels", static_cast<double>(blk.channels), 100, 2000);
		check(b, "window", static_cast<double>(blk.window), 2, 18);
		check(b, "stride", static_cast<double>(blk.stride), 1, 4);
		check(b, "pool_window", static_cast<double>(blk.pool_window), 1, 18);
		check(b, "pool_stride", static_cast<double>(blk.pool_stride), 1, 4);
		if (blk.type == BlockType::nnl) {
			check(b, "delta", blk.delta, 0.0, 0.3);
			check(b, "power", blk.power, 1, 100);
			if (blk.rank_m > blk.channels) {
				warnings.push_back("block " + std::to_string(b) + ": rank_m exceeds channels, no anti-Hebbian term");
			}
		}
	}
	return warnings;
}

// Applies one "section.key = value" assignment. Architecture assignments are
// collected in `arch` and expanded into blocks by finalize.
class ConfigBuilder {
public:
	void set(const std::string& section, const std::string& key, const std::string& raw_value)
	{
		using namespace config_detail;
		const auto& known = known_keys();
		const auto sec = known.find(section);
		if (sec == known.end()) {
			throw ConfigError("unknown section [" + section + "]");
		}
		if (sec->second.count(key) == 0) {
			throw ConfigError("unknown key \"" + key + "\" in [" + section + "]");
		}
		const std::string name = section + "." + key;
		const std::string value = trim(raw_value);
		if (value.empty()) {
			throw ConfigError(name + ": empty value");
		}
		RunConfig& c = config_;
		if (section == "run") {
			if (key == "seed") c.seed = to_unsigned(name, value);
			else if (key == "threads") c.threads = static_cast<int>(std::max<std::uint64_t>(1, to_unsigned(name, value)));
		} else if (section == "data") {
			if (key == "train") c.train_paths = split_list(value);
			else if (key == "test") c.test_paths = split_list(value);
			else if (key == "train_limit") c.train_limit = to_unsigned(name, value);
			else if (key == "test_limit") c.test_limit = to_unsigned(name, value);
			else if (key == "val_fraction") {
				c.val_fraction = to_double(name, value);
				if (c.val_fraction < 0.0 || c.val_fraction >= 1.0) {
					throw ConfigError(name + " must be in [0, 1)");
				}
			}
		} else if (section == "hebbian") {
			if (key == "learning_rate") c.hebbian.learning_rate = to_double(name, value);
			else if (key == "epochs") c.hebbian.epochs = to_unsigned(name, value);
			else if (key == "minibatch") c.hebbian.minibatch_size = to_unsigned(name, value);
			else if (key == "scale_update_by_max") c.hebbian.scale_update_by_max = to_bool(name, value);
			else if (key == "normalize_patches") c.hebbian.normalize_patches = to_bool(name, value);
		} else if (section == "architecture") {
			arch_[key] = split_list(value);
		} else if (section == "supervised") {
			if (key == "epochs") c.supervised.epochs = to_unsigned(name, value);
			else if (key == "minibatch") c.supervised.minibatch_size = to_unsigned(name, value);
			else if (key == "schedule") c.supervised.schedule.kind = parse_schedule_kind(value);
			else if (key == "learning_rate") c.supervised.schedule.base = to_double(name, value);
		} else if (section == "output") {
			c.output_dir = value;
		}
	}

	// Expands architecture lists into blocks and validates everything.
	RunConfig finalize()
	{
		using namespace config_detail;
		for (const char* required : {"channels", "window"}) {
			if (arch_.count(required) == 0) {
				throw ConfigError(std::string("missing required key architecture.") + required);
			}
		}
		std::size_t count = 1;
		for (const auto& [key, values] : arch_) {
			if (values.size() > 1) {
				if (count > 1 && values.size() != count) {
					throw ConfigError("architecture." + key + " has " + std::to_string(values.size()) + " entries, other keys have " + std::to_string(count));
				}
				count = values.size();
			}
		}
		auto entry = [&](const std::string& key, std::size_t b) -> const std::string* {
			const auto it = arch_.find(key);
			if (it == arch_.end()) {
				return nullptr;
			}
			return &it->second[it->second.size() == 1 ? 0 : b];
		};
		RunConfig c = config_;
		c.blocks.assign(count, BlockConfig{});
		for (std::size_t b = 0; b < count; ++b) {
			BlockConfig& blk = c.blocks[b];
			const std::string prefix = "architecture.";
			if (const auto* v = entry("type", b)) blk.type = to_block_type(prefix + "type", *v);
			if (const auto* v = entry("channels", b)) blk.channels = to_unsigned(prefix + "channels", *v);
			if (const auto* v = entry("window", b)) blk.window = to_unsigned(prefix + "window", *v);
			if (const auto* v = entry("power", b)) blk.power = static_cast<int>(to_unsigned(prefix + "power", *v));
			if (const auto* v = entry("stride", b)) blk.stride = to_unsigned(prefix + "stride", *v);
			if (const auto* v = entry("pool_window", b)) blk.pool_window = to_unsigned(prefix + "pool_window", *v);
			if (const auto* v = entry("pool_stride", b)) blk.pool_stride = to_unsigned(prefix + "pool_stride", *v);
			if (const auto* v = entry("delta", b)) blk.delta = to_double(prefix + "delta", *v);
			if (const auto* v = entry("rank_m", b)) blk.rank_m = to_unsigned(prefix + "rank_m", *v);
			if (blk.channels == 0 || blk.window == 0 || blk.stride == 0 || blk.pool_window == 0 || blk.pool_stride == 0 || blk.power < 1) {
				throw ConfigError("block " + std::to_string(b) + ": channels, window, strides, pool window and power must be positive");
			}
			if (blk.type == BlockType::nnl) {
				c.hebbian_for(b).validate(blk.channels);
			}
		}
		if (c.hebbian.epochs > 0 && !(c.hebbian.learning_rate > 0.0)) {
			throw ConfigError("hebbian.learning_rate must be positive");
		}
		if (c.hebbian.minibatch_size == 0 || c.supervised.minibatch_size == 0) {
			throw ConfigError("minibatch sizes must be positive");
		}
		if (c.supervised.schedule.kind == ScheduleKind::linear || c.supervised.schedule.kind == ScheduleKind::constant) {
			c.supervised.schedule.epochs = c.supervised.epochs;
		}
		c.supervised.seed = c.seed;
		c.supervised.validate();
		return c;
	}

private:
	RunConfig config_;
	std::map<std::string, std::vector<std::string>> arch_;
};

// Parses a config stream, then applies "section.key=value" overrides.
// Range warnings are appended to `warnings` when given.
inline RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}, std::vector<std::string>* warnings = nullptr)
{
	using namespace config_detail;
	ConfigBuilder builder;
	std::string section;
	std::string line;
	std::size_t line_no = 0;
	std::set<std::string> seen;
	while (std::getline(in, line)) {
		++line_no;
		const auto hash = line.find('#');
		if (hash != std::string::npos) {
			line.erase(hash);
		}
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		const std::string where = "line " + std::to_string(line_no) + ": ";
		try {
			if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
				section = trim(line.substr(1, line.size() - 2));
				if (known_keys().count(section) == 0) {
					throw ConfigError("unknown section [" + section + "]");
				}
				continue;
			}
			const auto eq = line.find('=');
			if (eq == std::string::npos) {
				throw ConfigError("expected key = value");
			}
			if (section.empty()) {
				throw ConfigError("key outside of any [section]");
			}
			const std::string key = trim(line.substr(0, eq));
			if (!seen.insert(section + "." + key).second) {
				throw ConfigError("duplicate key \"" + key + "\" in [" + section + "]");
			}
			builder.set(section, key, line.substr(eq + 1));
		} catch (const ConfigError& e) {
			throw ConfigError(where + e.what());
		}
	}
	for (const auto& o : overrides) {
		const auto eq = o.find('=');
		const auto dot = o.find('.');
		if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
			throw ConfigError("override must look like section.key=value: " + o);
		}
		builder.set(trim(o.substr(0, dot)), trim(o.substr(dot + 1, eq - dot - 1)), o.substr(eq + 1));
	}
	RunConfig config = builder.finalize();
	if (warnings != nullptr) {
		const auto w = range_warnings(config);
		warnings->insert(warnings->end(), w.begin(), w.end());
	}
	return config;
}

inline RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}, std::vector<std::string>* warnings = nullptr)
{
	std::istringstream in(text);
	return parse_config(in, overrides, warnings);
}

inline RunConfig parse_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}, std::vector<std::string>* warnings = nullptr)
{
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open config file " + path.string());
	}
	return parse_config(in, overrides, warnings);
}

struct RunData {
	ImageDataset train;
	ImageDataset test; // empty when neither test paths nor a validation split are configured
};

inline ImageDataset load_dataset_list(const std::vector<std::string>& paths)
{
	if (paths.empty()) {
		throw ConfigError("no dataset paths given");
	}
	ImageDataset out = load_dataset(paths.front());
	for (std::size_t i = 1; i < paths.size(); ++i) {
		out = concatenate(out, load_dataset(paths[i]));
	}
	return out;
}

// Loads [data]: train files are concatenated and truncated to train_limit;
// with val_fraction > 0 a seeded validation split replaces the test files.
inline RunData load_run_data(const RunConfig& config, bool need_test = true)
{
	RunData data;
	data.train = load_dataset_list(config.train_paths);
	if (config.train_limit > 0 && config.train_limit < data.train.size()) {
		data.train = head(data.train, config.train_limit);
	}
	if (config.val_fraction > 0.0) {
		auto [train, val] = split_train_val(data.train, config.val_fraction, config.seed);
		data.train = std::move(train);
		data.test = std::move(val);
	} else if (!config.test_paths.empty()) {
		data.test = load_dataset_list(config.test_paths);
	} else if (need_test) {
		throw ConfigError("no test data: set data.test or data.val_fraction");
	}
	if (config.test_limit > 0 && config.test_limit < data.test.size()) {
		data.test = head(data.test, config.test_limit);
	}
	return data;
}

// Inverse of parse_config: every key is written, doubles at full precision.
inline std::string serialize_config(const RunConfig& c)
{
	using config_detail::format_double;
	std::ostringstream out;
	auto join = [](const std::vector<std::string>& items) {
		std::string s;
		for (std::size_t i = 0; i < items.size(); ++i) {
			s += (i ? ", " : "") + items[i];
		}
		return s;
	};
	auto block_list = [&](auto field) {
		std::string s = "[";
		for (std::size_t b = 0; b < c.blocks.size(); ++b) {
			s += (b ? ", " : "") + field(c.blocks[b]);
		}
		return s + "]";
	};
	out << "[run]\nseed = " << c.seed << "\nthreads = " << c.threads << "\n\n";
	out << "[data]\n";
	if (!c.train_paths.empty()) out << "train = " << join(c.train_paths) << "\n";
	if (!c.test_paths.empty()) out << "test = " << join(c.test_paths) << "\n";
	out << "train_limit = " << c.train_limit << "\ntest_limit = " << c.test_limit << "\nval_fraction = " << format_double(c.val_fraction) << "\n\n";
	out << "[hebbian]\nlearning_rate = " << format_double(c.hebbian.learning_rate) << "\nepochs = " << c.hebbian.epochs << "\nminibatch = " << c.hebbian.minibatch_size
		<< "\nscale_update_by_max = " << (c.hebbian.scale_update_by_max ? "true" : "false") << "\nnormalize_patches = " << (c.hebbian.normalize_patches ? "true" : "false") << "\n\n";
	out << "[architecture]\n";
	out << "type = " << block_list([](const BlockConfig& b) { return std::string(b.type == BlockType::nnl ? "nnl" : "conv"); }) << "\n";
	out << "channels = " << block_list([](const BlockConfig& b) { return std::to_string(b.channels); }) << "\n";
	out << "window = " << block_list([](const BlockConfig& b) { return std::to_string(b.window); }) << "\n";
	out << "power = " << block_list([](const BlockConfig& b) { return std::to_string(b.power); }) << "\n";
	out << "stride = " << block_list([](const BlockConfig& b) { return std::to_string(b.stride); }) << "\n";
	out << "pool_window = " << block_list([](const BlockConfig& b) { return std::to_string(b.pool_window); }) << "\n";
	out << "pool_stride = " << block_list([](const BlockConfig& b) { return std::to_string(b.pool_stride); }) << "\n";
	out << "delta = " << block_list([&](const BlockConfig& b) { return format_double(b.delta); }) << "\n";
	out << "rank_m = " << block_list([](const BlockConfig& b) { return std::to_string(b.rank_m); }) << "\n\n";
	out << "[supervised]\nepochs = " << c.supervised.epochs << "\nminibatch = " << c.supervised.minibatch_size << "\nschedule = " << to_string(c.supervised.schedule.kind)
		<< "\nlearning_rate = " << format_double(c.supervised.schedule.base) << "\n\n";
	out << "[output]\ndir = " << c.output_dir << "\n";
	return out.str();
}

} // namespace nnl
