#include "iongate/cli/output.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "iongate/errors.hpp"

#ifndef IONGATE_VERSION
#define IONGATE_VERSION "unknown"
#endif

namespace iongate::cli {

const char* version() { return IONGATE_VERSION; }

void Table::add(const std::string& name, const std::string& unit, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows()) {
    throw std::invalid_argument("Table::add: column '" + name + "' has the wrong length");
  }
  names.push_back(name);
  units.push_back(unit);
  columns.push_back(std::move(values));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  const bool lab = !label_name.empty();
  std::vector<std::string> head = names, unit = units;
  if (lab) {
    head.insert(head.begin(), label_name);
    unit.insert(unit.begin(), "-");
  }
  line(head);
  line(unit);
  for (std::size_t r = 0; r < rows(); ++r) {
    if (lab) out += labels.at(r) + ',';
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

Table table_from_series(const TimeSeries& s) {
  Table t;
  t.add("t", "s", s.times);
  for (std::size_t i = 0; i < s.columns.size(); ++i) {
    t.add(s.columns[i].first, s.units.at(i), s.columns[i].second);
  }
  return t;
}

std::string make_run_dir(const std::string& out, const std::string& scenario) {
  namespace fs = std::filesystem;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const fs::path base = fs::path(out) / scenario;
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw ConfigError("cannot create output directory '" + base.string() + "'");
  for (int k = 0; k < 1000; ++k) {
    const fs::path p = base / (k == 0 ? std::string(stamp) : std::string(stamp) + "-" +
                                                                 std::to_string(k));
    if (fs::create_directory(p, ec)) return p.string();
  }
  throw ConfigError("cannot create a run directory under '" + base.string() + "'");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
}

}  // namespace iongate::cli
