// Copyright 2026 The effv2 Authors.
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

#include "effv2/arch/serialize.hpp"

#include <sstream>

#include "effv2/common/error.hpp"
#include "effv2/common/json_util.hpp"

namespace effv2::arch {
namespace {

using nlohmann::json;

json block_json(const BlockSpec& b, bool full) {
  json j = {{"op", to_string(b.op)}, {"out_channels", b.out_channels}};
  if (b.op == OpType::kConv) {
    j["kernel"] = b.kernel;
    j["stride"] = b.stride;
  }
  if (full) {
    j["expansion"] = b.expansion;
    j["kernel"] = b.kernel;
    j["stride"] = b.stride;
    j["num_layers"] = b.num_layers;
    j["se_ratio"] = b.se_ratio;
  }
  return j;
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where,
                std::vector<std::string>& problems, bool required = true) {
  if (!obj.contains(key)) {
    if (required) problems.push_back(where + ": missing '" + key + "'");
    return;
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    problems.push_back(where + ": '" + key + "' has the wrong type");
  }
}

BlockSpec read_block(const json& j, const std::string& where, bool stage, BlockSpec b,
                     std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back(where + ": expected an object");
    return b;
  }
  const std::set<std::string> stage_keys = {"op", "expansion", "kernel", "stride",
                                            "out_channels", "num_layers", "se_ratio"};
  const std::set<std::string> fixed_keys = {"op", "kernel", "stride", "out_channels"};
  collect_unknown_keys(j, stage ? stage_keys : fixed_keys, where, problems);
  std::string op;
  read_field(j, "op", op, where, problems);
  try {
    if (!op.empty()) b.op = op_type_from_string(op);
  } catch (const ValidationError& e) {
    problems.push_back(where + ": " + e.what());
  }
  read_field(j, "out_channels", b.out_channels, where, problems);
  if (stage) {
    read_field(j, "expansion", b.expansion, where, problems);
    read_field(j, "kernel", b.kernel, where, problems);
    read_field(j, "stride", b.stride, where, problems);
    read_field(j, "num_layers", b.num_layers, where, problems);
    read_field(j, "se_ratio", b.se_ratio, where, problems, false);
  } else {
    read_field(j, "kernel", b.kernel, where, problems, false);
    read_field(j, "stride", b.stride, where, problems, false);
  }
  return b;
}

}  // namespace

json to_json(const ArchSpec& arch) {
  json stages = json::array();
  for (const auto& s : arch.stages) stages.push_back(block_json(s, true));
  return json{{"name", arch.name},
              {"num_classes", arch.num_classes},
              {"default_image_size", arch.default_image_size},
              {"stem", block_json(arch.stem, false)},
              {"stages", stages},
              {"head", block_json(arch.head, false)}};
}

ArchSpec arch_from_json(const json& j) {
  std::vector<std::string> problems;
  ArchSpec a;
  if (!j.is_object()) throw ValidationError("architecture must be a JSON object");
  collect_unknown_keys(j, {"name", "num_classes", "default_image_size", "stem", "stages", "head"},
                       "arch", problems);
  read_field(j, "name", a.name, "arch", problems, false);
  read_field(j, "num_classes", a.num_classes, "arch", problems);
  read_field(j, "default_image_size", a.default_image_size, "arch", problems);
  a.stem = {OpType::kConv, 1, 3, 2, 0, 1, 0.0};
  a.head = {OpType::kHead, 1, 1, 1, 0, 1, 0.0};
  if (j.contains("stem")) a.stem = read_block(j["stem"], "stem", false, a.stem, problems);
  else problems.push_back("arch: missing 'stem'");
  if (j.contains("head")) a.head = read_block(j["head"], "head", false, a.head, problems);
  else problems.push_back("arch: missing 'head'");
  if (j.contains("stages") && j["stages"].is_array()) {
    for (std::size_t i = 0; i < j["stages"].size(); ++i) {
      a.stages.push_back(read_block(j["stages"][i], "stages[" + std::to_string(i) + "]", true, BlockSpec{}, problems));
    }
  } else {
    problems.push_back("arch: 'stages' must be an array");
  }
  if (problems.empty()) {
    try {
      validate(a);
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << problems.size() << " problem(s) in architecture:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ValidationError(msg.str());
  }
  return a;
}

std::string dump_arch(const ArchSpec& arch) { return to_json(arch).dump(2) + "\n"; }

ArchSpec parse_arch(const std::string& text, const std::string& source) {
  return arch_from_json(parse_json(text, source));
}

ArchSpec load_arch(const std::filesystem::path& path) {
  return parse_arch(read_text_file(path), path.string());
}

void save_arch(const ArchSpec& arch, const std::filesystem::path& path) {
  write_text_file_atomic(path, dump_arch(arch));
}

ArchSpec resolve_arch(const std::string& preset_or_path) {
  for (const auto& name : preset_names()) {
    if (name == preset_or_path) return preset(name);
  }
  if (std::filesystem::exists(preset_or_path)) return load_arch(preset_or_path);
  return preset(preset_or_path);  // throws with the list of presets
}

}  // namespace effv2::arch
