// Copyright 2026 The emfplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

namespace emfplan {

/// Single-file model archive:
///   "EMFCKPT1" | u64 header length | JSON header | raw tensor bytes.
/// The header carries `kind`, `config`, free-form `meta` and a tensor table
/// {name, dtype, shape, offset, nbytes}; tensors are little-endian, contiguous.
struct Checkpoint {
  std::string kind;
  nlohmann::json config;
  nlohmann::json meta;
  std::map<std::string, torch::Tensor> tensors;
};

/// Collects parameters and buffers of `module` under their dotted names.
std::map<std::string, torch::Tensor> module_state(const torch::nn::Module& module);
/// Copies matching tensors into `module`; every parameter and buffer must be present.
void load_module_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Header only, without reading tensor data.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace emfplan
