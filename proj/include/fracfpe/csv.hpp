#pragma once

// CSV tables with a '#'-prefixed metadata block. Values print with 17
// significant digits, so a table re-reads bit-exactly.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "fracfpe/errors.hpp"

namespace fracfpe::csv {

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
  const std::string* find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return &v;
    return nullptr;
  }
};

inline std::string format(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write(std::ostream& out, const Table& t) {
  for (const auto& [k, v] : t.meta) {
    std::string flat = v;
    for (char& c : flat)
      if (c == '\n') c = ' ';
    out << "# " << k << "=" << flat << "\n";
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format(row[i]);
    out << "\n";
  }
}

inline std::string to_string(const Table& t) {
  std::ostringstream os;
  write(os, t);
  return os.str();
}

// Writes to a temporary file beside `path`, then renames it into place.
// "-" writes to standard output.
inline void write_file(const std::string& path, const Table& t) {
  if (path == "-") {
    write(std::cout, t);
    std::cout.flush();
    return;
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output: cannot open '" + tmp + "' for writing");
    write(out, t);
    out.flush();
    if (!out) throw ConfigError("output: write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ConfigError("output: cannot rename into '" + path + "'");
  }
}

inline Table parse(std::istream& in) {
  Table t;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header && line[0] == '#') {
      const auto eq = line.find('=');
      const std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
      if (eq == std::string::npos) t.add_meta(line.substr(start), "");
      else t.add_meta(line.substr(start, eq - start), line.substr(eq + 1));
      continue;
    }
    std::istringstream cells(line);
    std::string cell;
    if (!header) {
      while (std::getline(cells, cell, ',')) t.columns.push_back(cell);
      header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw NumericError("csv: line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      row.push_back(x);
    }
    if (row.size() != t.columns.size())
      throw NumericError("csv: line " + std::to_string(lineno) + ": wrong number of fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot read '" + path + "'");
  return parse(in);
}

}  // namespace fracfpe::csv
