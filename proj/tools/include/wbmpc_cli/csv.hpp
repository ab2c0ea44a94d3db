// Copyright 2026 The wbmpc Authors
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
#include <vector>

#include "wbmpc/common.hpp"

namespace wbmpc::cli {

/// Missing file, malformed row or absent column.
class CsvError : public Error {
 public:
  using Error::Error;
};

/// Comma-separated table with a header row. Cells are kept as text.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(const std::string& text, const std::string& source = "<string>");

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cells_.size(); }
  bool has_column(const std::string& name) const;
  /// Throws CsvError naming the source when the column is missing.
  std::size_t column_index(const std::string& name) const;
  std::vector<double> numeric(const std::string& name) const;
  const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

}  // namespace wbmpc::cli
