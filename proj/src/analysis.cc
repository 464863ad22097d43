/*
 * Copyright 2026 The surveyshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "surveyshap/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace surveyshap {

namespace {

void check_aligned(std::size_t rows, const std::vector<std::uint64_t>& ids,
                   const Dataset& ds) {
  if (rows != ds.size()) {
    throw AnalysisError("attribution rows (" + std::to_string(rows) +
                        ") do not match dataset size (" +
                        std::to_string(ds.size()) + ")");
  }
  if (!ids.empty()) {
    for (std::size_t i = 0; i < rows; ++i) {
      if (ids[i] != ds[i].id) {
        throw AnalysisError("attribution row " + std::to_string(i) +
                            " belongs to sample " + std::to_string(ids[i]) +
                            ", dataset row holds " + std::to_string(ds[i].id));
      }
    }
  }
}

void check_feature(std::size_t feature, std::size_t m) {
  if (feature >= m) {
    throw AnalysisError("feature index " + std::to_string(feature) +
                        " out of range");
  }
}

// Acklam's rational approximation of the standard normal quantile.
double approx_normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (p < low) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - low) return -approx_normal_quantile(1 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double normal_quantile(double p) {
  double x = approx_normal_quantile(p);
  // Two Newton steps on Φ(x) − p.
  for (int i = 0; i < 2; ++i) {
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    x -= (cdf - p) / pdf;
  }
  return x;
}

}  // namespace

ImportanceRanking global_importance(const ShapMatrix& m) {
  if (m.num_samples == 0) throw AnalysisError("empty attribution matrix");
  ImportanceRanking out(m.num_features);
  for (std::size_t j = 0; j < m.num_features; ++j) {
    double sum = 0;
    for (std::size_t i = 0; i < m.num_samples; ++i) sum += std::abs(m.at(i, j));
    out[j] = {j, j < m.feature_names.size() ? m.feature_names[j] : std::to_string(j),
              sum / static_cast<double>(m.num_samples)};
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.mean_abs > b.mean_abs;
                   });
  return out;
}

double normal_critical_value(double confidence) {
  if (!(confidence > 0 && confidence < 1)) {
    throw AnalysisError("confidence must lie in (0, 1)");
  }
  return normal_quantile(0.5 + confidence / 2);
}

CohortCurve cohort_curve(const ShapMatrix& m, const Dataset& ds,
                         std::size_t feature, std::size_t cohort_feature,
                         double confidence) {
  check_aligned(m.num_samples, m.sample_ids, ds);
  check_feature(feature, m.num_features);
  check_feature(cohort_feature, ds.schema().size());
  const double z = normal_critical_value(confidence);

  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double c = ds[i].features[cohort_feature];
    if (c != std::floor(c)) {
      throw AnalysisError("cohort feature '" + ds.schema()[cohort_feature].name +
                          "' is not integer-valued");
    }
    groups[c].push_back(std::abs(m.at(i, feature)));
  }

  CohortCurve curve;
  curve.feature = ds.schema()[feature].name;
  curve.cohort_feature = ds.schema()[cohort_feature].name;
  curve.confidence = confidence;
  for (const auto& [cohort, values] : groups) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double s = values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    const double half = z * s / std::sqrt(n);
    curve.points.push_back({cohort, mean, mean - half, mean + half, values.size()});
  }
  return curve;
}

DependenceExtract dependence_extract(const ShapMatrix& m, const Dataset& ds,
                                     std::size_t feature,
                                     std::size_t color_feature) {
  check_aligned(m.num_samples, m.sample_ids, ds);
  check_feature(feature, ds.schema().size());
  check_feature(color_feature, ds.schema().size());
  DependenceExtract out;
  out.x_feature = ds.schema()[feature].name;
  out.color_feature = ds.schema()[color_feature].name;
  out.rows.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.rows.push_back({ds[i].id, ds[i].features[feature], m.at(i, feature),
                        ds[i].features[color_feature]});
  }
  return out;
}

DependenceExtract interaction_pair_extract(const InteractionTensor& t,
                                           const Dataset& ds,
                                           std::size_t feature_a,
                                           std::size_t feature_b,
                                           PairAxis x_axis) {
  check_aligned(t.num_samples, t.sample_ids, ds);
  check_feature(feature_a, t.num_features);
  check_feature(feature_b, t.num_features);
  if (feature_a == feature_b) {
    throw AnalysisError("interaction extract needs two distinct features");
  }
  const std::size_t x_feature = x_axis == PairAxis::kA ? feature_a : feature_b;
  const std::size_t color = x_axis == PairAxis::kA ? feature_b : feature_a;
  DependenceExtract out;
  out.x_feature = ds.schema()[x_feature].name;
  out.color_feature = ds.schema()[color].name;
  out.rows.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.rows.push_back({ds[i].id, ds[i].features[x_feature],
                        t.at(i, feature_a, feature_b), ds[i].features[color]});
  }
  return out;
}

HeatmapMatrix interaction_heatmap(const InteractionTensor& t) {
  if (t.num_samples == 0) throw AnalysisError("empty interaction tensor");
  const std::size_t m = t.num_features;
  HeatmapMatrix h;
  h.features = t.feature_names;
  h.values.assign(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) {
      double sum = 0;
      for (std::size_t i = 0; i < t.num_samples; ++i) sum += std::abs(t.at(i, j, k));
      const double mean = sum / static_cast<double>(t.num_samples);
      h.values[j * m + k] = mean;
      h.values[k * m + j] = mean;
    }
  }
  return h;
}

std::vector<GroupImportance> group_mean_importance(const ShapMatrix& m,
                                                   const Dataset& ds,
                                                   std::size_t feature,
                                                   std::size_t group_feature) {
  check_aligned(m.num_samples, m.sample_ids, ds);
  check_feature(feature, m.num_features);
  check_feature(group_feature, ds.schema().size());
  const auto& spec = ds.schema()[group_feature];
  if (spec.kind != FeatureKind::kCategorical && spec.kind != FeatureKind::kBinary) {
    throw AnalysisError("group feature '" + spec.name + "' is not categorical");
  }
  const auto codes = static_cast<std::size_t>(spec.max) + 1;
  std::vector<double> sum(codes, 0.0);
  std::vector<std::size_t> count(codes, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto g = static_cast<std::size_t>(ds[i].features[group_feature]);
    sum[g] += std::abs(m.at(i, feature));
    ++count[g];
  }
  std::vector<GroupImportance> out;
  for (std::size_t g = 0; g < codes; ++g) {
    if (count[g] == 0) continue;
    out.push_back({static_cast<int>(g), sum[g] / static_cast<double>(count[g]),
                   count[g]});
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1.
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AnalysisError("spearman inputs differ in length");
  if (x.size() < 2) throw AnalysisError("spearman needs at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0) return {0.0, true};
  return {sxy / std::sqrt(sxx * syy), false};
}

SpearmanMatrix spearman_matrix(const Dataset& ds) {
  if (ds.size() < 2) throw AnalysisError("spearman matrix needs two samples");
  const std::size_t m = ds.schema().size();
  SpearmanMatrix out;
  out.features = ds.schema().names();
  out.values.assign(m * m, 0.0);
  std::vector<std::vector<double>> columns;
  columns.reserve(m);
  for (std::size_t j = 0; j < m; ++j) columns.push_back(ds.column(j));
  std::vector<bool> constant(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& c = columns[j];
    constant[j] = std::all_of(c.begin(), c.end(), [&](double v) { return v == c[0]; });
    if (constant[j]) out.constant_features.push_back(out.features[j]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    out.values[j * m + j] = constant[j] ? 0.0 : 1.0;
    for (std::size_t k = j + 1; k < m; ++k) {
      const double rho = spearman(columns[j], columns[k]).rho;
      out.values[j * m + k] = rho;
      out.values[k * m + j] = rho;
    }
  }
  return out;
}

std::vector<CurveComparison> robustness_compare(
    const std::vector<CohortCurve>& curves) {
  if (curves.size() < 2) throw AnalysisError("robustness comparison needs two curves");
  std::vector<CurveComparison> out;
  for (std::size_t a = 0; a < curves.size(); ++a) {
    for (std::size_t b = a + 1; b < curves.size(); ++b) {
      std::map<double, double> first;
      for (const auto& p : curves[a].points) first[p.cohort] = p.mean_abs;
      std::vector<double> xs, ys;
      for (const auto& p : curves[b].points) {
        if (auto it = first.find(p.cohort); it != first.end()) {
          xs.push_back(it->second);
          ys.push_back(p.mean_abs);
        }
      }
      if (xs.empty()) {
        throw AnalysisError("curves " + std::to_string(a) + " and " +
                            std::to_string(b) + " share no cohort value");
      }
      CurveComparison c;
      c.first = a;
      c.second = b;
      c.shared_points = xs.size();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        c.max_gap = std::max(c.max_gap, std::abs(xs[i] - ys[i]));
      }
      if (xs.size() >= 2) {
        if (xs == ys) {
          c.spearman = 1.0;
        } else {
          c.spearman = spearman(xs, ys).rho;
        }
      } else {
        c.spearman = xs == ys ? 1.0 : 0.0;
      }
      out.push_back(c);
    }
  }
  return out;
}

double mean_similarity(const std::vector<CurveComparison>& table) {
  if (table.empty()) return 0.0;
  double sum = 0;
  for (const auto& c : table) sum += c.spearman;
  return sum / static_cast<double>(table.size());
}

void write_importance_csv(const ImportanceRanking& r, std::ostream& out) {
  out << "rank,feature,mean_abs_shap\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << i + 1 << ',' << r[i].name << ',' << format_double(r[i].mean_abs) << '\n';
  }
}

void write_cohort_csv(const CohortCurve& c, std::ostream& out) {
  out << c.cohort_feature << ",mean_abs_shap,ci_low,ci_high,n\n";
  for (const auto& p : c.points) {
    out << format_double(p.cohort) << ',' << format_double(p.mean_abs) << ','
        << format_double(p.ci_low) << ',' << format_double(p.ci_high) << ','
        << p.n << '\n';
  }
}

void write_dependence_csv(const DependenceExtract& d, std::ostream& out) {
  out << "sample_id," << d.x_feature << ",attribution," << d.color_feature
      << "_color\n";
  for (const auto& r : d.rows) {
    out << r.sample_id << ',' << format_double(r.x) << ','
        << format_double(r.attribution) << ',' << format_double(r.color) << '\n';
  }
}

void write_heatmap_csv(const HeatmapMatrix& h, std::ostream& out) {
  out << "feature";
  for (const auto& f : h.features) out << ',' << f;
  out << '\n';
  for (std::size_t j = 0; j < h.features.size(); ++j) {
    out << h.features[j];
    for (std::size_t k = 0; k < h.features.size(); ++k) {
      out << ',' << format_double(h.at(j, k));
    }
    out << '\n';
  }
}

void write_group_csv(const std::vector<GroupImportance>& g,
                     const std::string& group_name, std::ostream& out) {
  out << group_name << ",mean_abs_shap,n\n";
  for (const auto& row : g) {
    out << row.group << ',' << format_double(row.mean_abs) << ',' << row.n << '\n';
  }
}

void write_spearman_csv(const SpearmanMatrix& s, std::ostream& out) {
  out << "feature";
  for (const auto& f : s.features) out << ',' << f;
  out << '\n';
  for (std::size_t j = 0; j < s.features.size(); ++j) {
    out << s.features[j];
    for (std::size_t k = 0; k < s.features.size(); ++k) {
      out << ',' << format_double(s.at(j, k));
    }
    out << '\n';
  }
}

void write_comparison_csv(const std::vector<CurveComparison>& c,
                          std::ostream& out) {
  out << "curve_a,curve_b,spearman,max_gap,shared_points\n";
  for (const auto& row : c) {
    out << row.first << ',' << row.second << ',' << format_double(row.spearman)
        << ',' << format_double(row.max_gap) << ',' << row.shared_points << '\n';
  }
}

void write_summary_csv(const std::vector<FeatureSummary>& s, std::ostream& out) {
  out << "feature,kind,mean,std_dev,code_counts\n";
  for (const auto& f : s) {
    out << f.name << ',' << feature_kind_name(f.kind) << ',';
    if (f.mean) out << format_double(*f.mean);
    out << ',';
    if (f.std_dev) out << format_double(*f.std_dev);
    out << ',';
    for (std::size_t c = 0; c < f.code_counts.size(); ++c) {
      if (c) out << ' ';
      out << f.code_counts[c];
    }
    out << '\n';
  }
}

}  // namespace surveyshap
