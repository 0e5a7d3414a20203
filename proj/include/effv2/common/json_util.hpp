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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace effv2 {

// Parses JSON, reporting syntax errors as ValidationError
// "<source>:<line>:<column>: <message>".
nlohmann::json parse_json(std::string_view text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename so readers never see a partial file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Appends "<where>: unknown key '<k>'" for keys of `object` not in `allowed`.
void collect_unknown_keys(const nlohmann::json& object, const std::set<std::string>& allowed,
                          const std::string& where, std::vector<std::string>& problems);

}  // namespace effv2
