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

#include "emfplan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "emfplan/error.hpp"

namespace emfplan {
namespace {

constexpr char kMagic[8] = {'E', 'M', 'F', 'C', 'K', 'P', 'T', '1'};

std::string dtype_name(torch::Dtype t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw IoError("unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype dtype_from(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  throw IoError("unknown dtype " + s);
}

std::pair<nlohmann::json, std::uint64_t> read_header(std::ifstream& in, const std::filesystem::path& p) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError(p.string() + " is not a checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint header in " + p.string());
  return {nlohmann::json::parse(text), 16 + len};
}

}  // namespace

std::map<std::string, torch::Tensor> module_state(const torch::nn::Module& module) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : module.named_parameters(true)) out[p.key()] = p.value();
  for (const auto& b : module.named_buffers(true)) out[b.key()] = b.value();
  return out;
}

void load_module_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state) {
  torch::NoGradGuard guard;
  auto copy = [&](const std::string& name, torch::Tensor& dst) {
    auto it = state.find(name);
    if (it == state.end()) throw IoError("checkpoint is missing tensor " + name);
    if (it->second.sizes() != dst.sizes())
      throw ShapeMismatch("checkpoint tensor " + name + " has incompatible shape");
    dst.copy_(it->second);
  };
  for (auto& p : module.named_parameters(true)) copy(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) copy(b.key(), b.value());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json table = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().to(torch::kCPU).contiguous();
    const std::uint64_t nbytes = static_cast<std::uint64_t>(c.numel()) * c.element_size();
    table.push_back({{"name", name},
                     {"dtype", dtype_name(c.scalar_type())},
                     {"shape", c.sizes().vec()},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(c);
  }
  const nlohmann::json header = {{"format", "emfplan-checkpoint-v1"},
                                 {"kind", ckpt.kind},
                                 {"config", ckpt.config},
                                 {"meta", ckpt.meta},
                                 {"tensors", table}};
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 8);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(len));
  for (const auto& c : blobs)
    out.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.numel() * c.element_size()));
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_header(in, path).first;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto [header, data_start] = read_header(in, path);
  Checkpoint ck;
  ck.kind = header.at("kind");
  ck.config = header.at("config");
  ck.meta = header.value("meta", nlohmann::json::object());
  for (const auto& e : header.at("tensors")) {
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(e.at("dtype"))));
    const std::uint64_t nbytes = e.at("nbytes");
    if (nbytes != static_cast<std::uint64_t>(t.numel() * t.element_size()))
      throw IoError("tensor size mismatch in checkpoint");
    in.seekg(static_cast<std::streamoff>(data_start + e.at("offset").get<std::uint64_t>()));
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!in) throw IoError("truncated checkpoint data in " + path.string());
    ck.tensors[e.at("name")] = t;
  }
  return ck;
}

}  // namespace emfplan
