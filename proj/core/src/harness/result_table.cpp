#include "tdreg/harness/result_table.hpp"

#include <cstdio>
#include <sstream>
#include <tuple>

#include "tdreg/errors.hpp"

namespace tdreg::harness {

namespace {

auto key(const ResultRow& r) {
  return std::tie(r.experiment, r.seed, r.lambda, r.n_p, r.metric);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ResultTable::add(ResultRow row) {
  for (const auto& r : rows_)
    if (key(r) == key(row))
      throw ConfigError("duplicate result key (" + row.experiment + ", seed " +
                        std::to_string(row.seed) + ", lambda " + format_double(row.lambda) +
                        ", n_p " + std::to_string(row.n_p) + ", " + row.metric + ")");
  rows_.push_back(std::move(row));
}

void ResultTable::add(const std::string& experiment, std::uint64_t seed, double lambda, int n_p,
                      const std::string& metric, double value) {
  add(ResultRow{experiment, seed, lambda, n_p, metric, value});
}

void ResultTable::merge(const ResultTable& other) {
  for (const auto& r : other.rows_) add(r);
}

std::optional<double> ResultTable::find(std::uint64_t seed, double lambda, int n_p,
                                        const std::string& metric) const {
  for (const auto& r : rows_)
    if (r.seed == seed && r.lambda == lambda && r.n_p == n_p && r.metric == metric) return r.value;
  return std::nullopt;
}

std::vector<double> ResultTable::series(std::uint64_t seed, double lambda, int n_p,
                                        const std::string& name) const {
  std::vector<double> out;
  for (;;) {
    const auto v = find(seed, lambda, n_p, name + "[" + std::to_string(out.size()) + "]");
    if (!v) return out;
    out.push_back(*v);
  }
}

void ResultTable::write_csv(std::ostream& out) const {
  out << "experiment,seed,lambda,n_p,metric,value\n";
  for (const auto& r : rows_)
    out << quote(r.experiment) << ',' << r.seed << ',' << format_double(r.lambda) << ',' << r.n_p
        << ',' << quote(r.metric) << ',' << format_double(r.value) << '\n';
}

ResultTable ResultTable::read_csv(std::istream& in) {
  ResultTable table;
  std::string line;
  if (!std::getline(in, line) || line != "experiment,seed,lambda,n_p,metric,value")
    throw ParseError("result table: missing or wrong header", 1);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw ParseError("result table: expected 6 fields", lineno);
    try {
      table.add(ResultRow{f[0], std::stoull(f[1]), std::stod(f[2]), std::stoi(f[3]), f[4],
                          std::stod(f[5])});
    } catch (const std::logic_error&) {
      throw ParseError("result table: malformed number", lineno);
    }
  }
  return table;
}

}  // namespace tdreg::harness
