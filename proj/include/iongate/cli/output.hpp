#pragma once

// Run artefacts: <out>/<scenario>/<timestamp>/{data.csv, manifest.json, report.txt}.

#include <json.hpp>
#include <string>
#include <vector>

#include "iongate/observables.hpp"

namespace iongate::cli {

// Column table. First CSV line is the header, second the units; values
// are written with 17 significant digits so they round-trip exactly.
struct Table {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<std::vector<double>> columns;
  // Optional leading label column (unit "-").
  std::string label_name;
  std::vector<std::string> labels;

  void add(const std::string& name, const std::string& unit, std::vector<double> values);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::string to_csv() const;
};

// Times first, then every series column.
Table table_from_series(const TimeSeries& s);

std::string format_double(double v);

// Creates a fresh directory; a suffix is appended if the timestamp exists.
std::string make_run_dir(const std::string& out, const std::string& scenario);

void write_file(const std::string& path, const std::string& content);

const char* version();

}  // namespace iongate::cli
