#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "graphrank/comparison_graph.hpp"

namespace graphrank::cli {

/// Rows of item_i,item_j,outcome[,covariate...] read from CSV. The outcome is
/// oriented item_i minus item_j. Labels get dense indices in order of first
/// appearance.
struct GameTable {
  struct Row {
    ItemIndex i = 0;
    ItemIndex j = 0;
    double y = 0.0;
    std::vector<double> extra;  // covariate columns, header order
    std::size_t line = 0;       // 1-based line in the source
  };

  std::vector<std::string> labels;
  std::vector<std::string> covariate_columns;
  std::vector<Row> rows;

  std::size_t item_count() const noexcept { return labels.size(); }
  /// Throws DataError for an unknown label.
  ItemIndex index_of(const std::string& label) const;
  /// Column position among covariate_columns; throws ConfigError.
  std::size_t column_of(const std::string& name) const;
};

/// Throws DataError (with the line number) on malformed input.
GameTable read_game_table(std::istream& in, const std::string& source = "input");
GameTable read_game_table_file(const std::string& path);

/// Splits one CSV line; double quotes may wrap fields and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace graphrank::cli
