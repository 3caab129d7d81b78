#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tdreg::harness {

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int n_p = 0;
  std::string metric;
  double value = 0.0;
};

/// Experiment results keyed by (experiment, seed, lambda, n_p, metric).
/// Per-iteration series use metric names of the form `name[iter]`.
class ResultTable {
 public:
  /// Throws ConfigError on a duplicate key.
  void add(ResultRow row);
  void add(const std::string& experiment, std::uint64_t seed, double lambda, int n_p,
           const std::string& metric, double value);
  void merge(const ResultTable& other);

  const std::vector<ResultRow>& rows() const { return rows_; }
  std::optional<double> find(std::uint64_t seed, double lambda, int n_p,
                             const std::string& metric) const;
  /// Values of `name[0]`, `name[1]`, ... in iteration order.
  std::vector<double> series(std::uint64_t seed, double lambda, int n_p,
                             const std::string& name) const;

  void write_csv(std::ostream& out) const;
  static ResultTable read_csv(std::istream& in);

 private:
  std::vector<ResultRow> rows_;
};

std::string format_double(double v);

}  // namespace tdreg::harness
