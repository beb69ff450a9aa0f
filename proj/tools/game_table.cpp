#include "game_table.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>

#include "graphrank/errors.hpp"

namespace graphrank::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, const std::string& where) {
  const std::string t = trim(field);
  double v = 0.0;
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw DataError(where + ": '" + t + "' is not a number");
  }
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t a = 0; a < line.size(); ++a) {
    const char c = line[a];
    if (quoted) {
      if (c == '"' && a + 1 < line.size() && line[a + 1] == '"') {
        cur += '"';
        ++a;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  out.push_back(cur);
  return out;
}

ItemIndex GameTable::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DataError("unknown item '" + label + "'");
  return static_cast<ItemIndex>(it - labels.begin());
}

std::size_t GameTable::column_of(const std::string& name) const {
  const auto it = std::find(covariate_columns.begin(), covariate_columns.end(), name);
  if (it == covariate_columns.end()) throw ConfigError("covariates", "no column named '" + name + "'");
  return static_cast<std::size_t>(it - covariate_columns.begin());
}

GameTable read_game_table(std::istream& in, const std::string& source) {
  GameTable table;
  std::map<std::string, ItemIndex> index;
  auto intern = [&](const std::string& label) {
    const auto [it, fresh] = index.try_emplace(label, table.labels.size());
    if (fresh) table.labels.push_back(label);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);  // UTF-8 BOM
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!have_header) {
      if (fields.size() < 3) throw DataError(where + ": header needs item_i,item_j,outcome columns");
      for (std::size_t c = 3; c < fields.size(); ++c) table.covariate_columns.push_back(trim(fields[c]));
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width) {
      throw DataError(where + ": expected " + std::to_string(width) + " fields, found " +
                      std::to_string(fields.size()));
    }
    const std::string a = trim(fields[0]);
    const std::string b = trim(fields[1]);
    if (a.empty() || b.empty()) throw DataError(where + ": empty item label");
    if (a == b) throw DataError(where + ": item '" + a + "' compared with itself");
    GameTable::Row row;
    row.line = lineno;
    row.y = parse_number(fields[2], where);
    for (std::size_t c = 3; c < fields.size(); ++c) row.extra.push_back(parse_number(fields[c], where));
    row.i = intern(a);
    row.j = intern(b);
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError(source + ": empty file (a header row is required)");
  if (table.rows.empty()) throw DataError(source + ": no data rows after the header");
  if (table.labels.size() < 2) throw DataError(source + ": fewer than two distinct items");
  return table;
}

GameTable read_game_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_game_table(in, path);
}

}  // namespace graphrank::cli
