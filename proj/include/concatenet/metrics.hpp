// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_METRICS_HPP_
#define CONCATENET_METRICS_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace concatenet::metrics {

/// Results saturate here when the residual is negligible (< 1e-20 of the
/// signal energy), keeping perfect reconstructions finite.
inline constexpr double kCapDb = 100.0;

/// Scale-invariant SDR in dB. est and ref must have equal length; ref must
/// carry energy.
double si_sdr(std::span<const double> est, std::span<const double> ref);

/// Scale-invariant SIR in dB with sequential projection: the target
/// component is est projected on speech, the interference component is the
/// remainder projected on background.
double si_sir(std::span<const double> est, std::span<const double> speech,
              std::span<const double> background);

/// 10 log10(|s|^2 / |v|^2).
double snr_db(std::span<const double> s, std::span<const double> v);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by n)
};
Summary summarize(std::span<const double> values);

/// Per-item metric table with column-wise mean and standard deviation.
class EvalReport {
 public:
  explicit EvalReport(std::vector<std::string> columns);

  void add(std::string id, std::vector<double> values);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
  std::vector<double> column(std::size_t c) const;
  Summary summary(std::size_t c) const;

  /// CSV: header "id,<columns>", one row per item, then "mean" and "std" rows.
  void write_csv(std::ostream& os) const;
  /// Table with one line per row label: "mean (+- std)" for each metric.
  /// Columns named "<label>_<metric>" are grouped by label.
  void write_table(std::ostream& os) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace concatenet::metrics

#endif  // CONCATENET_METRICS_HPP_
