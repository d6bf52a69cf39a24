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

#include <nnl/nnl.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace nnl;

struct Common {
	std::string config_path;
	std::vector<std::string> overrides;
	std::optional<std::uint64_t> seed;
	std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& common, bool config_required)
{
	auto* opt = cmd->add_option("-c,--config", common.config_path, "run configuration file")->check(CLI::ExistingFile);
	if (config_required) {
		opt->required();
	}
	cmd->add_option("--set", common.overrides, "override a config key, e.g. --set hebbian.epochs=10");
	cmd->add_option("--seed", common.seed, "random seed");
	cmd->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig load_config(const Common& common)
{
	std::vector<std::string> overrides = common.overrides;
	if (common.seed) {
		overrides.push_back("run.seed=" + std::to_string(*common.seed));
	}
	if (common.threads) {
		overrides.push_back("run.threads=" + std::to_string(*common.threads));
	}
	std::vector<std::string> warnings;
	RunConfig config = parse_config_file(common.config_path, overrides, &warnings);
	for (const auto& w : warnings) {
		std::cerr << "warning: " << w << '\n';
	}
	set_num_threads(config.threads);
	return config;
}

// Commands without a config file still honor --seed and --threads.
std::uint64_t apply_flags(const Common& common)
{
	if (common.threads) {
		set_num_threads(*common.threads);
	}
	return common.seed.value_or(1);
}

// Creates the parent directory of an output file.
const std::string& prepare(const std::string& path)
{
	const auto parent = std::filesystem::path(path).parent_path();
	if (!parent.empty()) {
		std::filesystem::create_directories(parent);
	}
	return path;
}

void write_log(const TrainingLog& log, const std::string& path)
{
	if (path.empty()) {
		return;
	}
	std::ofstream out(prepare(path));
	log.write_csv(out);
	if (!out) {
		throw FormatError("cannot write " + path);
	}
}

void print_epoch(const EpochRecord& r)
{
	std::printf("epoch %4zu  lr %.3g  loss %.4f  train %.2f%%  test %.2f%%\n", r.epoch, r.lr, r.loss, r.train_error, r.test_error);
	std::fflush(stdout);
}

std::vector<FilterBank> load_banks(const std::vector<std::string>& paths)
{
	std::vector<FilterBank> banks;
	for (const auto& p : paths) {
		banks.push_back(load_filter_bank(p));
	}
	return banks;
}

std::vector<NnlBlockSpec> nnl_specs_for(const RunConfig& config, std::size_t bank_count)
{
	if (config.blocks.size() != bank_count) {
		throw ConfigError("config describes " + std::to_string(config.blocks.size()) + " blocks but " + std::to_string(bank_count) + " filter files were given");
	}
	for (const auto& b : config.blocks) {
		if (b.type != BlockType::nnl) {
			throw ConfigError("filter files can only fill nnl blocks");
		}
	}
	return config.nnl_specs();
}

// Output path for block b: the path itself for one block, "stem.b<b>.ext" otherwise.
std::string block_path(const std::string& path, std::size_t b, std::size_t count)
{
	if (count == 1) {
		return path;
	}
	const std::filesystem::path p(path);
	return (p.parent_path() / (p.stem().string() + ".b" + std::to_string(b) + p.extension().string())).string();
}

ShadowSpec parse_shadow(const std::string& text)
{
	ShadowSpec spec;
	bool have_cols = false;
	bool have_factor = false;
	std::stringstream ss(text);
	std::string item;
	while (std::getline(ss, item, ',')) {
		const auto eq = item.find('=');
		if (eq == std::string::npos) {
			throw ConfigError("--shadow expects cols=N,factor=F");
		}
		const std::string key = item.substr(0, eq);
		const std::string value = item.substr(eq + 1);
		try {
			if (key == "cols") {
				spec.columns = std::stoul(value);
				have_cols = true;
			} else if (key == "factor") {
				spec.intensity = std::stod(value);
				have_factor = true;
			} else {
				throw ConfigError("unknown --shadow field " + key);
			}
		} catch (const std::logic_error&) {
			throw ConfigError("bad --shadow value: " + item);
		}
	}
	if (!have_cols || !have_factor) {
		throw ConfigError("--shadow expects cols=N,factor=F");
	}
	return spec;
}

void inspect_file(const std::string& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open " + path);
	}
	char magic[4] = {};
	in.read(magic, 4);
	const std::string tag(magic, 4);
	std::printf("%s\n", path.c_str());
	if (tag == "NNLF") {
		const FilterBank bank = load_filter_bank(path);
		const auto stats = convergence_stats(bank.weights, bank.win_counts);
		std::printf("  filter bank: K=%zu W=%zu channels=3\n", bank.channels(), bank.window);
		std::printf("  winning rows %zu, converged %.1f%%, max | |row|-1 | %.3g, dead units %zu\n", stats.winning_rows, 100.0 * stats.converged_fraction(),
			stats.max_deviation, detect_dead_units(bank).size());
	} else if (tag == "NNLM") {
		const auto arch = load_model(path);
		const auto shapes = arch.shapes();
		std::printf("  model: input %zux%zu, %zu blocks, %zu features, %zu classes\n", arch.input_side, arch.input_side, arch.blocks.size(), arch.feature_dim(),
			arch.classifier.classes());
		for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
			const auto& blk = arch.blocks[b];
			std::printf("  block %zu: %s K=%zu W=%zu ST=%zu", b, blk.is_nnl() ? "nnl" : "conv", blk.channels(), blk.window(), blk.stride());
			if (const auto* n = std::get_if<NnlConvLayer>(&blk.conv)) {
				std::printf(" n=%d", n->power);
			}
			std::printf(" pool %zu/%zu -> %zux%zu\n", blk.pool.window, blk.pool.stride, shapes[b].pooled_side, shapes[b].pooled_side);
		}
	} else {
		const auto ds = load_dataset(path);
		std::printf("  dataset: %zu images %zux%zu, %zu classes\n", ds.size(), ds.height, ds.width, ds.class_count);
	}
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Local Hebbian filter learning and NNL-CONV networks"};
	app.require_subcommand(1);

	Common common;
	std::string out_path;
	std::string log_path;
	std::vector<std::string> filter_paths;

	auto* train_filters_cmd = app.add_subcommand("train-filters", "learn a filter bank per nnl block with the local rule");
	add_common(train_filters_cmd, common, true);
	train_filters_cmd->add_option("-o,--out", out_path, "output .nnlf (one file per block: name.b<i>.nnlf)")->required();

	auto* train_cls_cmd = app.add_subcommand("train-classifier", "train the top layer over frozen filter banks");
	add_common(train_cls_cmd, common, true);
	train_cls_cmd->add_option("-f,--filters", filter_paths, "one .nnlf per block")->required()->check(CLI::ExistingFile);
	train_cls_cmd->add_option("-o,--out", out_path, "output .nnlm")->required();
	train_cls_cmd->add_option("--log", log_path, "per-epoch CSV log");

	auto* train_e2e_cmd = app.add_subcommand("train-e2e", "train a standard CONV network end to end");
	add_common(train_e2e_cmd, common, true);
	train_e2e_cmd->add_option("-o,--out", out_path, "output .nnlm")->required();
	train_e2e_cmd->add_option("--log", log_path, "per-epoch CSV log");

	std::string model_path;
	std::vector<std::string> data_paths;
	std::string shadow_text;
	double scale = 1.0;
	std::string csv_path;
	auto* eval_cmd = app.add_subcommand("eval", "report top-1/top-5 and per-class error");
	add_common(eval_cmd, common, false);
	eval_cmd->add_option("-m,--model", model_path, ".nnlm model")->required()->check(CLI::ExistingFile);
	eval_cmd->add_option("-d,--data", data_paths, "dataset files (default: the config's test set)")->check(CLI::ExistingFile);
	eval_cmd->add_option("--shadow", shadow_text, "darken leading columns, e.g. cols=25,factor=0.3");
	eval_cmd->add_option("--scale", scale, "multiply every pixel by this factor before the network")->check(CLI::PositiveNumber);
	eval_cmd->add_option("--csv", csv_path, "also write the report as CSV");

	std::size_t runs = 5;
	auto* transfer_cmd = app.add_subcommand("transfer", "reuse filter banks on the configured target data");
	add_common(transfer_cmd, common, true);
	transfer_cmd->add_option("-f,--filters", filter_paths, "one .nnlf per block")->required()->check(CLI::ExistingFile);
	transfer_cmd->add_option("--runs", runs, "independent classifier trainings")->check(CLI::PositiveNumber);
	transfer_cmd->add_option("--csv", csv_path, "per-run reports as CSV");

	std::string bank_path;
	std::size_t columns = 20;
	auto* atlas_cmd = app.add_subcommand("export-atlas", "tile a filter bank into an image (PNG, or PPM by extension)");
	add_common(atlas_cmd, common, false);
	atlas_cmd->add_option("-f,--filters", bank_path, ".nnlf file")->required()->check(CLI::ExistingFile);
	atlas_cmd->add_option("--columns", columns, "tiles per row")->check(CLI::PositiveNumber);
	atlas_cmd->add_option("-o,--out", out_path, "output image")->required();

	std::vector<std::string> inspect_paths;
	auto* inspect_cmd = app.add_subcommand("inspect", "print header metadata of .nnlf, .nnlm or dataset files");
	add_common(inspect_cmd, common, false);
	inspect_cmd->add_option("files", inspect_paths)->required()->check(CLI::ExistingFile);

	std::size_t count = 3000;
	std::size_t test_count = 0;
	auto* synth_cmd = app.add_subcommand("make-synthetic", "write the 10-class synthetic shapes dataset");
	add_common(synth_cmd, common, false);
	synth_cmd->add_option("-n,--count", count, "training images")->check(CLI::PositiveNumber);
	synth_cmd->add_option("--test-count", test_count, "images in a separate test file name.test.<ext>");
	synth_cmd->add_option("-o,--out", out_path, "output file (.bin for CIFAR layout, otherwise raw)")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		return app.exit(e) == 0 ? 0 : 1;
	}

	try {
		if (train_filters_cmd->parsed()) {
			const RunConfig config = load_config(common);
			const ImageDataset train = load_run_data(config, false).train;
			for (std::size_t b = 0; b < config.blocks.size(); ++b) {
				const auto& blk = config.blocks[b];
				if (blk.type != BlockType::nnl) {
					throw ConfigError("block " + std::to_string(b) + " is a conv block; use train-e2e");
				}
				const PatchSet patches(train, blk.window, blk.stride);
				std::printf("block %zu: K=%zu W=%zu, %zu patches\n", b, blk.channels, blk.window, patches.size());
				const FilterBank bank = train_filters(patches, blk.channels, config.hebbian_for(b), config.seed + b, [](const HebbianEpochReport& r) {
					std::printf("  epoch %4zu  lr %.3g  winning %zu  converged %.1f%%\n", r.epoch + 1, r.learning_rate, r.convergence.winning_rows,
						100.0 * r.convergence.converged_fraction());
					std::fflush(stdout);
				});
				const std::string path = block_path(out_path, b, config.blocks.size());
				save_filter_bank(bank, prepare(path));
				std::printf("wrote %s\n", path.c_str());
			}
		} else if (train_cls_cmd->parsed()) {
			const RunConfig config = load_config(common);
			const auto banks = load_banks(filter_paths);
			const auto specs = nnl_specs_for(config, banks.size());
			const RunData data = load_run_data(config, false);
			auto arch = make_nnl_architecture(banks, specs, data.train.class_count, data.train.height);
			const auto log = train_top_layer(arch, data.train, data.test.size() ? &data.test : nullptr, config.supervised, print_epoch);
			save_model(arch, prepare(out_path));
			write_log(log, log_path);
			std::printf("wrote %s\n", out_path.c_str());
		} else if (train_e2e_cmd->parsed()) {
			const RunConfig config = load_config(common);
			for (const auto& b : config.blocks) {
				if (b.type != BlockType::conv) {
					throw ConfigError("train-e2e needs every block to be of type conv");
				}
			}
			const RunData data = load_run_data(config, false);
			const auto specs = config.conv_specs();
			auto arch = init_conv_architecture<float>(specs, data.train.class_count, config.seed, data.train.height);
			const auto log = train_end_to_end(arch, data.train, data.test.size() ? &data.test : nullptr, config.supervised, print_epoch);
			save_model(arch, prepare(out_path));
			write_log(log, log_path);
			std::printf("wrote %s\n", out_path.c_str());
		} else if (eval_cmd->parsed()) {
			ImageDataset data;
			if (!data_paths.empty()) {
				apply_flags(common);
				data = load_dataset_list(data_paths);
			} else if (!common.config_path.empty()) {
				data = load_run_data(load_config(common)).test;
			} else {
				throw ConfigError("eval needs --data or a config with test data");
			}
			const auto arch = load_model(model_path);
			std::optional<ShadowSpec> shadow;
			if (!shadow_text.empty()) {
				shadow = parse_shadow(shadow_text);
			}
			const EvalReport report = evaluate(arch, data, shadow, scale);
			report.write_text(std::cout);
			if (!csv_path.empty()) {
				std::ofstream out(prepare(csv_path));
				report.write_csv(out);
			}
		} else if (transfer_cmd->parsed()) {
			const RunConfig config = load_config(common);
			const auto banks = load_banks(filter_paths);
			const auto specs = nnl_specs_for(config, banks.size());
			const RunData data = load_run_data(config);
			const TransferReport report = transfer(banks, specs, data.train, data.test, config.supervised, runs);
			for (std::size_t r = 0; r < report.runs.size(); ++r) {
				std::printf("run %zu: top-1 error %.2f%%\n", r + 1, report.runs[r].top1_error);
			}
			std::printf("top-1 error %.2f%% +- %.2f%% over %zu runs\n", report.mean_top1(), report.std_top1(), report.runs.size());
			if (!csv_path.empty()) {
				std::ofstream out(prepare(csv_path));
				for (std::size_t r = 0; r < report.runs.size(); ++r) {
					report.runs[r].write_csv(out, r == 0);
				}
			}
		} else if (atlas_cmd->parsed()) {
			apply_flags(common);
			export_filter_atlas(load_filter_bank(bank_path), columns, prepare(out_path));
			std::printf("wrote %s\n", out_path.c_str());
		} else if (inspect_cmd->parsed()) {
			apply_flags(common);
			for (const auto& p : inspect_paths) {
				inspect_file(p);
			}
		} else if (synth_cmd->parsed()) {
			const std::uint64_t seed = apply_flags(common);
			const ImageDataset all = make_shapes_dataset(count + test_count, seed);
			auto save = [](const ImageDataset& ds, const std::filesystem::path& p) {
				prepare(p.string());
				if (p.extension() == ".bin") {
					save_cifar10_binary(ds, p);
				} else {
					save_raw(ds, p);
				}
				std::printf("wrote %s (%zu images)\n", p.string().c_str(), ds.size());
			};
			const std::filesystem::path p(out_path);
			save(head(all, count), p);
			if (test_count > 0) {
				save(head(all, test_count, count), p.parent_path() / (p.stem().string() + ".test" + p.extension().string()));
			}
		}
	} catch (const ConfigError& e) {
		std::fprintf(stderr, "error: %s\n", e.what());
		return 1;
	} catch (const FormatError& e) {
		std::fprintf(stderr, "error: %s\n", e.what());
		return 1;
	} catch (const std::exception& e) {
		std::fprintf(stderr, "internal error: %s\n", e.what());
		return 2;
	}
	return 0;
}
