// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace concatenet::metrics {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_equal_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("signal length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

double capped_ratio_db(double signal, double residual) {
  if (!(signal > 0.0)) return -kCapDb;
  if (residual < 1e-20 * signal) return kCapDb;
  return std::clamp(10.0 * std::log10(signal / residual), -kCapDb, kCapDb);
}

}  // namespace

double si_sdr(std::span<const double> est, std::span<const double> ref) {
  require_equal_length(est, ref);
  const double ref_energy = dot(ref, ref);
  if (!(ref_energy > 0.0)) throw std::invalid_argument("si_sdr: reference has zero energy");
  const double alpha = dot(est, ref) / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = alpha * ref[i];
    target += t * t;
    residual += (t - est[i]) * (t - est[i]);
  }
  return capped_ratio_db(target, residual);
}

double si_sir(std::span<const double> est, std::span<const double> speech,
              std::span<const double> background) {
  require_equal_length(est, speech);
  require_equal_length(est, background);
  const double ss = dot(speech, speech);
  const double vv = dot(background, background);
  if (!(ss > 0.0) || !(vv > 0.0)) {
    throw std::invalid_argument("si_sir: references must have nonzero energy");
  }
  const double alpha = dot(est, speech) / ss;
  double rest_dot_v = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) rest_dot_v += (est[i] - alpha * speech[i]) * background[i];
  const double beta = rest_dot_v / vv;
  return capped_ratio_db(alpha * alpha * ss, beta * beta * vv);
}

double snr_db(std::span<const double> s, std::span<const double> v) {
  const double es = dot(s, s), ev = dot(v, v);
  if (!(es > 0.0) || !(ev > 0.0)) throw std::invalid_argument("snr_db: zero-energy signal");
  return 10.0 * std::log10(es / ev);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  return s;
}

EvalReport::EvalReport(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void EvalReport::add(std::string id, std::vector<double> values) {
  if (values.size() != columns_.size()) {
    throw std::invalid_argument("report row has " + std::to_string(values.size()) +
                                " values, expected " + std::to_string(columns_.size()));
  }
  ids_.push_back(std::move(id));
  rows_.push_back(std::move(values));
}

std::vector<double> EvalReport::column(std::size_t c) const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.at(c));
  return out;
}

Summary EvalReport::summary(std::size_t c) const {
  const auto values = column(c);
  return summarize(values);
}

void EvalReport::write_csv(std::ostream& os) const {
  os << std::setprecision(17);
  os << "id";
  for (const auto& c : columns_) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    os << ids_[i];
    for (double v : rows_[i]) os << ',' << v;
    os << '\n';
  }
  os << "mean";
  for (std::size_t c = 0; c < columns_.size(); ++c) os << ',' << summary(c).mean;
  os << "\nstd";
  for (std::size_t c = 0; c < columns_.size(); ++c) os << ',' << summary(c).stddev;
  os << '\n';
}

void EvalReport::write_table(std::ostream& os) const {
  // Group "<label>_<metric>" columns into rows keyed by label.
  std::vector<std::string> labels, metric_names;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& name = columns_[c];
    const auto us = name.find('_');
    const std::string label = us == std::string::npos ? name : name.substr(0, us);
    const std::string metric = us == std::string::npos ? name : name.substr(us + 1);
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    if (std::find(metric_names.begin(), metric_names.end(), metric) == metric_names.end())
      metric_names.push_back(metric);
    where[{label, metric}] = c;
  }
  constexpr int kLabelWidth = 14, kCellWidth = 22;
  os << std::left << std::setw(kLabelWidth) << "";
  for (const auto& m : metric_names) os << std::setw(kCellWidth) << m;
  os << '\n';
  for (const auto& label : labels) {
    os << std::setw(kLabelWidth) << label;
    for (const auto& m : metric_names) {
      auto it = where.find({label, m});
      std::ostringstream cell;
      if (it != where.end()) {
        const auto s = summary(it->second);
        cell << std::fixed << std::setprecision(2) << s.mean << " (+- " << s.stddev << ")";
      } else {
        cell << "-";
      }
      os << std::setw(kCellWidth) << cell.str();
    }
    os << '\n';
  }
  os << "(" << rows_.size() << " items)\n";
}

}  // namespace concatenet::metrics
