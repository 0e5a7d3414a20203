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

#pragma once

#include <filesystem>
#include <string>

#include "effv2/arch/spec.hpp"
#include "json.hpp"

namespace effv2::arch {

// ArchSpec <-> JSON. Layout (see docs/arch.schema.json):
//   {"name", "num_classes", "default_image_size",
//    "stem":  {"op": "conv", "kernel", "stride", "out_channels"},
//    "stages": [{"op", "expansion", "kernel", "stride", "out_channels",
//                "num_layers", "se_ratio"}, ...],
//    "head":  {"op": "head", "out_channels"}}
nlohmann::json to_json(const ArchSpec& arch);
// Rejects unknown keys and lists every problem in one ValidationError.
ArchSpec arch_from_json(const nlohmann::json& j);

std::string dump_arch(const ArchSpec& arch);
ArchSpec parse_arch(const std::string& text, const std::string& source = "<arch>");
ArchSpec load_arch(const std::filesystem::path& path);
void save_arch(const ArchSpec& arch, const std::filesystem::path& path);

// A preset name or a path to an arch JSON file.
ArchSpec resolve_arch(const std::string& preset_or_path);

}  // namespace effv2::arch
