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

// Learns a small filter bank on synthetic shapes, trains the top layer and
// prints test error with and without a shadow.

#include <nnl/nnl.hpp>

#include <cstdio>

int main()
{
	using namespace nnl;
	const ImageDataset all = make_shapes_dataset(1200, 3);
	const ImageDataset train = head(all, 1000);
	const ImageDataset test = head(all, 200, 1000);

	HebbianConfig hebbian;
	hebbian.learning_rate = 2e-2;
	hebbian.epochs = 5;
	hebbian.normalize_patches = true;
	const FilterBank bank = train_filters(PatchSet(train, 4, 1), 32, hebbian, 1);

	const std::vector<FilterBank> banks{bank};
	const std::vector<NnlBlockSpec> specs{{20, 1, {11, 2}}};
	auto arch = make_nnl_architecture(banks, specs, train.class_count);

	SupervisedConfig sc;
	sc.epochs = 10;
	sc.minibatch_size = 100;
	sc.schedule = {ScheduleKind::linear, 1e-2, sc.epochs};
	train_top_layer(arch, train, nullptr, sc);

	std::printf("test error        %.1f%%\n", evaluate(arch, test).top1_error);
	std::printf("shadowed (25, .3) %.1f%%\n", evaluate(arch, test, ShadowSpec{25, 0.3}).top1_error);
	export_filter_atlas(bank, 8, "quickstart_filters.png");
}
