#pragma once

// Result tables of the command line tool and their JSON / CSV encodings.
//
// JSON: {"spec": {...}, "provenance": {"version", "seed", "timestamp"},
//        "data": {"summary": {...}, "columns": [...], "rows": [[...], ...]}}
// CSV:  one header row; every row repeats the spec and summary scalars
//       in front of the table columns.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kpspin::cli {

using ojson = nlohmann::ordered_json;

struct Report {
  ojson spec = ojson::object();
  ojson summary = ojson::object();
  std::vector<std::string> columns;
  std::vector<std::vector<ojson>> rows;

  void add_row(std::vector<ojson> row) {
    if (row.size() != columns.size()) throw std::logic_error("report row width differs from column count");
    rows.push_back(std::move(row));
  }
};

struct Provenance {
  std::string version;
  std::optional<std::uint64_t> seed;
  bool timestamp = true;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string encode_json(const Report& r, const Provenance& p) {
  ojson prov = ojson::object();
  prov["version"] = p.version;
  prov["seed"] = p.seed ? ojson(*p.seed) : ojson(nullptr);
  prov["timestamp"] = p.timestamp ? ojson(utc_timestamp()) : ojson(nullptr);
  ojson rows = ojson::array();
  for (const auto& row : r.rows) rows.push_back(ojson(row));
  ojson out = ojson::object();
  out["spec"] = r.spec;
  out["provenance"] = prov;
  out["data"] = {{"summary", r.summary}, {"columns", r.columns}, {"rows", rows}};
  return out.dump() + "\n";
}

inline std::string csv_cell(const ojson& v) {
  if (!v.is_string()) return v.dump();
  const std::string s = v.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string encode_csv(const Report& r) {
  std::vector<std::string> head;
  std::vector<std::string> echo;
  for (const auto& [key, value] : r.spec.items()) {
    head.push_back(key);
    echo.push_back(csv_cell(value));
  }
  for (const auto& [key, value] : r.summary.items()) {
    head.push_back(key);
    echo.push_back(csv_cell(value));
  }
  for (const auto& c : r.columns) head.push_back(c);

  auto join = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    return line + "\n";
  };
  std::string out = join(head);
  if (r.rows.empty()) return out + join(echo);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells = echo;
    for (const auto& v : row) cells.push_back(csv_cell(v));
    out += join(cells);
  }
  return out;
}

inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open output file " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace kpspin::cli
