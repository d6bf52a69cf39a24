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

#include <nnl/atlas.hpp>
#include <nnl/config.hpp>
#include <nnl/dataset.hpp>
#include <nnl/errors.hpp>
#include <nnl/evaluation.hpp>
#include <nnl/hebbian.hpp>
#include <nnl/matrix.hpp>
#include <nnl/model.hpp>
#include <nnl/parallel.hpp>
#include <nnl/patches.hpp>
#include <nnl/random.hpp>
#include <nnl/supervised.hpp>
#include <nnl/synthetic.hpp>
#include <nnl/transfer.hpp>
