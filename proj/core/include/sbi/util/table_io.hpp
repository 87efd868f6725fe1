// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbi/ndiff/tensor.hpp"

namespace sbi {

// Delimited numeric table with a metadata preamble:
//
//   # key: value
//   ...
//   col_0,col_1,...
//   1.2345678901234567,...
//
// Values are written with 17 significant digits so doubles round-trip
// exactly.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  ndiff::Tensor data;

  std::optional<std::string> find(std::string_view key) const;
  // Throws std::runtime_error when the key is absent.
  const std::string& meta(std::string_view key) const;
  void set(std::string key, std::string value);
};

std::string format_double(double v);

void write_table(std::ostream& out, const Table& table);
Table read_table(std::istream& in);
void save_table(const std::filesystem::path& path, const Table& table);
Table load_table(const std::filesystem::path& path);

}  // namespace sbi
