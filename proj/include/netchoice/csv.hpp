#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netchoice/common.hpp"

namespace netchoice::csv {

// Splits one CSV record. Fields may be double-quoted; "" inside quotes is a
// literal quote. Records never span lines.
inline void split(std::string_view line, std::vector<std::string_view>& fields, std::string& scratch) {
  fields.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('"') == std::string_view::npos) {
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(start));
        return;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  }
  // Quoted path: unescape into scratch, then slice. Reserve up front so the
  // views stay valid.
  scratch.clear();
  scratch.reserve(line.size());
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t i = 0;
  for (;;) {
    std::size_t begin = scratch.size();
    if (i < line.size() && line[i] == '"') {
      ++i;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            scratch.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        scratch.push_back(line[i++]);
      }
    }
    while (i < line.size() && line[i] != ',') scratch.push_back(line[i++]);
    spans.emplace_back(begin, scratch.size() - begin);
    if (i >= line.size()) break;
    ++i;
  }
  for (auto [b, n] : spans) fields.push_back(std::string_view(scratch).substr(b, n));
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Line reader that skips blank lines and '#' comment lines, tracking the
// 1-based physical line number for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

// Maps header names to column positions; every required column must appear.
class Header {
 public:
  Header(const std::vector<std::string_view>& fields, const std::vector<std::string>& required) {
    for (const auto& name : required) {
      std::size_t pos = fields.size();
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (fields[i] == name) pos = i;
      if (pos == fields.size()) throw ValidationError("missing column '" + name + "' in header");
      positions_.push_back(pos);
    }
    width_ = fields.size();
  }

  std::size_t column(std::size_t required_index) const { return positions_[required_index]; }
  std::size_t width() const { return width_; }

 private:
  std::vector<std::size_t> positions_;
  std::size_t width_ = 0;
};

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

// Reads a whole numeric table with a header row into column-major storage.
struct NumericTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return columns[i];
    throw ValidationError("no column named '" + std::string(name) + "'");
  }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline NumericTable read_numeric_table(std::istream& in) {
  NumericTable table;
  LineReader reader(in);
  std::string line, scratch;
  std::vector<std::string_view> fields;
  if (!reader.next(line)) return table;
  split(line, fields, scratch);
  for (auto f : fields) table.names.emplace_back(f);
  table.columns.resize(table.names.size());
  while (reader.next(line)) {
    split(line, fields, scratch);
    if (fields.size() != table.names.size())
      throw ValidationError("line " + std::to_string(reader.line_number()) + ": expected " +
                            std::to_string(table.names.size()) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto v = parse_double(fields[i]);
      if (!v)
        throw ValidationError("line " + std::to_string(reader.line_number()) + ": field '" + table.names[i] +
                              "' is not numeric");
      table.columns[i].push_back(*v);
    }
  }
  return table;
}

}  // namespace netchoice::csv
