// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "grassy/error.hpp"
#include "grassy/scattering.hpp"
#include "grassy/serialize.hpp"

namespace grassy::metrics {

using nlohmann::json;

std::string format_stat(const ErrorStat& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", s.mean, s.std);
  return buf;
}

std::vector<ErrorStat> absolute_error(const Matrix& predicted, const Matrix& targets) {
  if (targets.rows() == 0) throw Error(ErrorKind::EmptyTestSet, "property error over an empty test set");
  if (!predicted.same_shape(targets))
    throw Error(ErrorKind::DimensionMismatch, "predictions " + shape_string(predicted) + " vs targets " + shape_string(targets));
  std::vector<ErrorStat> out(targets.cols());
  const double n = static_cast<double>(targets.rows());
  for (std::size_t c = 0; c < targets.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < targets.rows(); ++r) sum += std::fabs(predicted(r, c) - targets(r, c));
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < targets.rows(); ++r) {
      const double d = std::fabs(predicted(r, c) - targets(r, c)) - mean;
      ss += d * d;
    }
    out[c] = {mean, std::sqrt(ss / n)};
  }
  return out;
}

std::vector<ErrorStat> property_error(const latent::LatentModel& m, const Matrix& raw_features, const Matrix& targets) {
  if (raw_features.rows() == 0) throw Error(ErrorKind::EmptyTestSet, "property error over an empty test set");
  return absolute_error(m.predict_properties(raw_features), targets);
}

Matrix latent_knn_laplacian(const Matrix& z, const SmoothnessConfig& cfg) {
  if (cfg.k == 0) throw Error(ErrorKind::InvalidConfig, "smoothness.k must be >= 1");
  const std::size_t n = z.rows();
  if (n < cfg.k + 1)
    throw Error(ErrorKind::TooFewPoints, "kNN graph with k=" + std::to_string(cfg.k) + " needs at least " +
                                             std::to_string(cfg.k + 1) + " points, got " + std::to_string(n));
  const std::size_t k = cfg.k;
  auto sqdist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      const double d = z(a, c) - z(b, c);
      s += d * d;
    }
    return s;
  };

  std::vector<std::vector<std::size_t>> knn(n);
  std::vector<double> eps(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t a = next.fetch_add(1); a < n; a = next.fetch_add(1)) {
      d.clear();
      for (std::size_t b = 0; b < n; ++b)
        if (b != a) d.emplace_back(sqdist(a, b), b);
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      eps[a] = d[k - 1].first;
      for (std::size_t i = 0; i < k; ++i) knn[a].push_back(d[i].second);
    }
  };
  const unsigned threads = std::min<unsigned>(scattering::default_thread_count(), static_cast<unsigned>(n / 64 + 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  Matrix w(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b : knn[a]) {
      if (w(a, b) != 0.0) continue;
      const double d2 = sqdist(a, b);
      const double e = 0.5 * (eps[a] + eps[b]);
      const double v = d2 == 0.0 ? 1.0 : std::exp(-d2 / e);
      w(a, b) = w(b, a) = v;
    }
  Matrix lap(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    double deg = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      deg += w(a, b);
      if (b != a) lap(a, b) = -w(a, b);
    }
    lap(a, a) = deg;
  }
  return lap;
}

double rayleigh_quotient(const Matrix& laplacian, std::span<const double> p) {
  const std::size_t n = laplacian.rows();
  if (p.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "property vector of length " + std::to_string(p.size()) + " for " +
                                                  std::to_string(n) + " points");
  double den = 0.0;
  for (double v : p) den += v * v;
  if (den == 0.0) throw Error(ErrorKind::ZeroPropertyVector, "smoothness of an all-zero property vector");
  // p^T L p written as the edge sum of w_ab (p_a - p_b)^2, so constant p gives 0 exactly.
  double num = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = p[a] - p[b];
      num += -laplacian(a, b) * d * d;
    }
  return num / den;
}

double smoothness(const Matrix& z, std::span<const double> p, const SmoothnessConfig& cfg) {
  if (p.size() != z.rows())
    throw Error(ErrorKind::DimensionMismatch, "property vector of length " + std::to_string(p.size()) + " for " +
                                                  std::to_string(z.rows()) + " points");
  if (std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }))
    throw Error(ErrorKind::ZeroPropertyVector, "smoothness of an all-zero property vector");
  return rayleigh_quotient(latent_knn_laplacian(z, cfg), p);
}

void export_latent(const latent::LatentModel& m, std::span<const std::string> ids, const Matrix& raw_features,
                   const Matrix& properties, std::span<const std::string> property_names,
                   const std::filesystem::path& path) {
  if (ids.size() != raw_features.rows() || properties.rows() != raw_features.rows() ||
      properties.cols() != property_names.size())
    throw Error(ErrorKind::DimensionMismatch, "export_latent: ids, features and properties disagree");
  std::string out = "id";
  for (std::size_t c = 0; c < m.latent_dim(); ++c) out += ",z" + std::to_string(c);
  for (const std::string& p : property_names) out += "," + p;
  out += "\n";
  if (raw_features.rows() > 0) {
    const Matrix z = m.encode(raw_features);
    char buf[32];
    for (std::size_t r = 0; r < z.rows(); ++r) {
      out += ids[r];
      for (double v : z.row_span(r)) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        out += buf;
      }
      for (double v : properties.row_span(r)) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        out += buf;
      }
      out += "\n";
    }
  }
  try {
    io::atomic_write(path, out);
  } catch (const Error& e) {
    throw Error(ErrorKind::IoError, std::string("export_latent: ") + e.what());
  }
}

json to_json(const MetricsReport& r) {
  json models = json::array();
  for (const ModelMetrics& m : r.models) {
    json props = json::array();
    for (std::size_t k = 0; k < m.properties.size(); ++k)
      props.push_back({{"name", m.properties[k]},
                       {"mae_mean", m.error.at(k).mean},
                       {"mae_std", m.error.at(k).std},
                       {"smoothness", m.smoothness.at(k)}});
    models.push_back({{"name", m.name}, {"test_count", m.test_count}, {"latent_count", m.latent_count}, {"properties", props}});
  }
  json baseline = json::array();
  for (std::size_t k = 0; k < r.baseline_properties.size(); ++k)
    baseline.push_back({{"name", r.baseline_properties[k]},
                        {"mae_mean", r.mean_baseline.at(k).mean},
                        {"mae_std", r.mean_baseline.at(k).std}});
  json validity = json::array();
  for (const ValidityRow& v : r.validity)
    validity.push_back({{"name", v.name},
                        {"samples", v.samples},
                        {"valid", v.valid},
                        {"fraction", v.fraction},
                        {"min_atoms", v.min_atoms}});
  return json{{"format", "grassy-metrics"},
              {"version", 1},
              {"models", models},
              {"mean_baseline", baseline},
              {"validity", validity}};
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  // Column widths count code points so the "±" sign does not skew alignment.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  return s + std::string(width > cps ? width - cps : 0, ' ');
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto cps = [](const std::string& s) {
    std::size_t c = 0;
    for (unsigned char ch : s) c += (ch & 0xC0) != 0x80;
    return c;
  };
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = cps(header[c]);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], cps(r[c]));
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "  " : "") + pad(cells[c], width[c]);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
  };
  line(header);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& r : rows) line(r);
  return out;
}

std::vector<std::string> property_header(const MetricsReport& r) {
  std::vector<std::string> h{"model"};
  const auto& props = !r.models.empty() ? r.models.front().properties : r.baseline_properties;
  h.insert(h.end(), props.begin(), props.end());
  return h;
}

}  // namespace

std::string format_error_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const ModelMetrics& m : r.models) {
    std::vector<std::string> row{m.name};
    for (const ErrorStat& e : m.error) row.push_back(format_stat(e));
    rows.push_back(std::move(row));
  }
  if (!r.mean_baseline.empty()) {
    std::vector<std::string> row{"mean-baseline"};
    for (const ErrorStat& e : r.mean_baseline) row.push_back(format_stat(e));
    rows.push_back(std::move(row));
  }
  return table(property_header(r), rows);
}

std::string format_smoothness_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows;
  char buf[32];
  for (const ModelMetrics& m : r.models) {
    std::vector<std::string> row{m.name};
    for (double s : m.smoothness) {
      std::snprintf(buf, sizeof buf, "%.4f", s);
      row.push_back(buf);
    }
    rows.push_back(std::move(row));
  }
  return table(property_header(r), rows);
}

std::string format_validity_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows;
  char buf[32];
  for (const ValidityRow& v : r.validity) {
    std::snprintf(buf, sizeof buf, "%.4f", v.fraction);
    rows.push_back({v.name, std::to_string(v.samples), std::to_string(v.valid), buf, std::to_string(v.min_atoms)});
  }
  return table({"generator", "samples", "valid", "fraction", "min_atoms"}, rows);
}

}  // namespace grassy::metrics
