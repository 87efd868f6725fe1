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

#include "sbi/util/table_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sbi {

std::optional<std::string> Table::find(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& Table::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  throw std::runtime_error("table metadata lacks key '" + std::string(key) + "'");
}

void Table::set(std::string key, std::string value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(std::move(key), std::move(value));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_table(std::ostream& out, const Table& table) {
  if (table.data.cols() != table.columns.size() && table.data.size() != 0) {
    throw std::invalid_argument("table has " + std::to_string(table.columns.size()) +
                                " column names for " +
                                std::to_string(table.data.cols()) + " columns");
  }
  for (const auto& [k, v] : table.metadata) out << "# " << k << ": " << v << '\n';
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out << ',';
    out << table.columns[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < table.data.rows(); ++i) {
    auto row = table.data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

Table read_table(std::istream& in) {
  Table table;
  std::string line;
  bool have_header = false;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      table.metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    if (!have_header) {
      while (std::getline(ls, cell, ',')) table.columns.push_back(cell);
      have_header = true;
      continue;
    }
    std::size_t count = 0;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw std::runtime_error("non-numeric cell '" + cell + "' in row " +
                                 std::to_string(rows + 1));
      }
      values.push_back(v);
      ++count;
    }
    if (count != table.columns.size()) {
      throw std::runtime_error("row " + std::to_string(rows + 1) + " has " +
                               std::to_string(count) + " cells, header has " +
                               std::to_string(table.columns.size()));
    }
    ++rows;
  }
  if (!have_header) throw std::runtime_error("table has no header row");
  table.data = ndiff::Tensor({rows, table.columns.size()}, std::move(values));
  return table;
}

void save_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_table(out, table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Table load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_table(in);
}

}  // namespace sbi
