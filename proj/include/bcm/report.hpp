#pragma once

// Plot-ready aggregates of a benchmark CSV: grouped by (scenario, method, T),
// (scenario, method, m) and (scenario, method, k). Every column other than
// the grouping keys, seed and error is aggregated; a non-numeric value in
// such a column is an error rather than being skipped.

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "bcm/benchmark.hpp"
#include "bcm/metrics.hpp"

namespace bcm {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    const auto it = std::ranges::find(header, name);
    if (it == header.end()) throw std::runtime_error("CSV is missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

/// RFC-4180-style parsing (quoted fields, doubled quotes). Every row must have
/// as many fields as the header.
inline CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
      }
      fields.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::runtime_error("malformed CSV: unterminated quoted field");
  if (any || !field.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  if (records.empty()) throw std::runtime_error("malformed CSV: no header");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw std::runtime_error("malformed CSV: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                               " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

namespace detail {

inline bool parse_number(const std::string& s, double& out) {
  if (s == "true") {
    out = 1.0;
    return true;
  }
  if (s == "false") {
    out = 0.0;
    return true;
  }
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Tidy long-format CSV: group_by,scenario,method,level,metric,n,mean,median,ci95_low,ci95_high.
inline std::string report_csv(const CsvTable& table) {
  if (table.rows.empty()) throw std::runtime_error("benchmark CSV has no data rows");
  const std::size_t c_scn = table.column("scenario");
  const std::size_t c_method = table.column("method");
  const std::map<std::string, std::size_t> group_cols{
      {"T", table.column("T")}, {"m", table.column("m")}, {"k", table.column("k")}};
  const std::set<std::string> not_metrics{"scenario", "method", "T", "m", "k", "seed", "error"};

  std::vector<std::size_t> metric_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (!not_metrics.contains(table.header[c])) metric_cols.push_back(c);

  // Parse every metric value up front so bad cells fail loudly.
  std::vector<std::vector<std::optional<double>>> values(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c : metric_cols) {
      const auto& cell = table.rows[r][c];
      double v = 0.0;
      if (cell.empty()) {
        values[r].push_back(std::nullopt);
      } else if (detail::parse_number(cell, v)) {
        values[r].push_back(v);
      } else {
        throw std::runtime_error("malformed CSV: column '" + table.header[c] + "' has non-numeric value '" + cell +
                                 "' on data row " + std::to_string(r + 1));
      }
    }
  }

  std::ostringstream out;
  out << "group_by,scenario,method,level,metric,n,mean,median,ci95_low,ci95_high\n";
  for (const std::string gb : {"T", "m", "k"}) {
    const std::size_t gc = group_cols.at(gb);
    using Key = std::tuple<std::string, std::string, double, std::string>;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      double level = 0.0;
      if (!detail::parse_number(table.rows[r][gc], level))
        throw std::runtime_error("malformed CSV: column '" + gb + "' must be numeric");
      groups[{table.rows[r][c_scn], table.rows[r][c_method], level, table.rows[r][gc]}].push_back(r);
    }
    for (const auto& [key, members] : groups) {
      const auto& [scenario, method, level_num, level] = key;
      for (std::size_t mi = 0; mi < metric_cols.size(); ++mi) {
        std::vector<double> xs;
        for (auto r : members)
          if (values[r][mi]) xs.push_back(*values[r][mi]);
        if (xs.empty()) continue;
        const auto a = summarize(std::span<const double>(xs));
        out << gb << ',' << csv_escape(scenario) << ',' << csv_escape(method) << ',' << level << ','
            << table.header[metric_cols[mi]] << ',' << a.n << ',' << format_double(a.mean) << ','
            << format_double(a.median) << ',' << format_double(a.ci95_low) << ',' << format_double(a.ci95_high) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace bcm
