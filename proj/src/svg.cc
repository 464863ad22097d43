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

#include "surveyshap/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace surveyshap {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Blue (t = 0) to red (t = 1) through light grey.
std::string ramp(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(std::lround(30 + u * (220 - 30)));
    g = static_cast<int>(std::lround(100 + u * (220 - 100)));
    b = static_cast<int>(std::lround(230 + u * (220 - 230)));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(220 + u * (230 - 220)));
    g = static_cast<int>(std::lround(220 + u * (40 - 220)));
    b = static_cast<int>(std::lround(220 + u * (60 - 220)));
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  void widen() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double t(double v) const { return (v - lo) / (hi - lo); }
};

Range range_of(const std::vector<double>& v) {
  Range r;
  if (v.empty()) return r;
  r.lo = *std::min_element(v.begin(), v.end());
  r.hi = *std::max_element(v.begin(), v.end());
  r.widen();
  return r;
}

class Canvas {
 public:
  Canvas(const std::string& title, double width = kWidth, double height = kHeight)
      : width_(width), height_(height) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width)
         << "\" height=\"" << fixed(height) << "\" viewBox=\"0 0 " << fixed(width)
         << ' ' << fixed(height) << "\" font-family=\"sans-serif\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << fixed(width / 2) << "\" y=\"22\" font-size=\"15\" "
         << "text-anchor=\"middle\">" << escape(title) << "</text>\n";
  }

  double px(const Range& r, double v) const {
    return kLeft + r.t(v) * (width_ - kLeft - kRight);
  }
  double py(const Range& r, double v) const {
    return height_ - kBottom - r.t(v) * (height_ - kTop - kBottom);
  }

  void axes(const Range& x, const Range& y, const std::string& xlabel,
            const std::string& ylabel) {
    const double x0 = kLeft, x1 = width_ - kRight;
    const double y0 = height_ - kBottom, y1 = kTop;
    out_ << "<g stroke=\"#444\" stroke-width=\"1\">"
         << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\""
         << fixed(x1) << "\" y2=\"" << fixed(y0) << "\"/>"
         << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\""
         << fixed(x0) << "\" y2=\"" << fixed(y1) << "\"/></g>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x.lo + (x.hi - x.lo) * i / 4;
      const double yv = y.lo + (y.hi - y.lo) * i / 4;
      out_ << "<text x=\"" << fixed(px(x, xv)) << "\" y=\"" << fixed(y0 + 16)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << tick(xv) << "</text>"
           << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(py(y, yv) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    }
    out_ << "<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(height_ - 12)
         << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(xlabel)
         << "</text>\n"
         << "<text x=\"16\" y=\"" << fixed((y0 + y1) / 2)
         << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
         << fixed((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n";
  }

  std::ostringstream& body() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  double width_;
  double height_;
  std::ostringstream out_;
};

}  // namespace

std::string svg_scatter(const DependenceExtract& d, const std::string& title,
                        std::size_t max_points) {
  const std::size_t stride =
      max_points == 0 ? 1 : std::max<std::size_t>(1, (d.rows.size() + max_points - 1) / max_points);
  std::vector<double> xs, ys, cs;
  for (std::size_t i = 0; i < d.rows.size(); i += stride) {
    xs.push_back(d.rows[i].x);
    ys.push_back(d.rows[i].attribution);
    cs.push_back(d.rows[i].color);
  }
  Range x = range_of(xs), y = range_of(ys), c = range_of(cs);
  Canvas canvas(title);
  canvas.axes(x, y, d.x_feature, "attribution (colour: " + d.color_feature + ")");
  auto& out = canvas.body();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << "<circle cx=\"" << fixed(canvas.px(x, xs[i])) << "\" cy=\""
        << fixed(canvas.py(y, ys[i])) << "\" r=\"2\" fill=\"" << ramp(c.t(cs[i]))
        << "\" fill-opacity=\"0.7\"/>\n";
  }
  return canvas.finish();
}

std::string svg_cohort(const CohortCurve& curve, const std::string& title) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    xs.push_back(p.cohort);
    ys.push_back(p.ci_low);
    ys.push_back(p.ci_high);
  }
  Range x = range_of(xs), y = range_of(ys);
  Canvas canvas(title);
  canvas.axes(x, y, curve.cohort_feature, "mean |attribution| of " + curve.feature);
  auto& out = canvas.body();
  if (!curve.points.empty()) {
    out << "<polygon fill=\"#4a7bd0\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (const auto& p : curve.points) {
      out << fixed(canvas.px(x, p.cohort)) << ',' << fixed(canvas.py(y, p.ci_high)) << ' ';
    }
    for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
      out << fixed(canvas.px(x, it->cohort)) << ',' << fixed(canvas.py(y, it->ci_low)) << ' ';
    }
    out << "\"/>\n<polyline fill=\"none\" stroke=\"#1f3f8f\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve.points) {
      out << fixed(canvas.px(x, p.cohort)) << ',' << fixed(canvas.py(y, p.mean_abs)) << ' ';
    }
    out << "\"/>\n";
  }
  return canvas.finish();
}

std::string svg_bar(const std::vector<std::string>& labels,
                    const std::vector<double>& values, const std::string& title) {
  const std::size_t n = std::min(labels.size(), values.size());
  const double row = 18;
  const double label_width = 160;
  const double height = kTop + row * static_cast<double>(n) + 20;
  Canvas canvas(title, kWidth, std::max(height, 120.0));
  auto& out = canvas.body();
  double top = 0;
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, std::abs(values[i]));
  if (!(top > 0)) top = 1;
  const double span = kWidth - label_width - kRight - 60;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = kTop + row * static_cast<double>(i);
    const double w = std::abs(values[i]) / top * span;
    out << "<text x=\"" << fixed(label_width - 6) << "\" y=\"" << fixed(y + 12)
        << "\" font-size=\"11\" text-anchor=\"end\">" << escape(labels[i]) << "</text>"
        << "<rect x=\"" << fixed(label_width) << "\" y=\"" << fixed(y + 2)
        << "\" width=\"" << fixed(w) << "\" height=\"" << fixed(row - 4)
        << "\" fill=\"#d04a4a\"/>"
        << "<text x=\"" << fixed(label_width + w + 4) << "\" y=\"" << fixed(y + 12)
        << "\" font-size=\"10\">" << format_double(std::round(values[i] * 1e4) / 1e4)
        << "</text>\n";
  }
  return canvas.finish();
}

std::string svg_heatmap(const HeatmapMatrix& h, const std::string& title) {
  const std::size_t m = h.features.size();
  const double cell = 22;
  const double label_width = 150;
  const double size = label_width + cell * static_cast<double>(m) + kRight;
  Canvas canvas(title, std::max(size, 200.0), std::max(size, 200.0) + kTop - 20);
  auto& out = canvas.body();
  double top = 0;
  for (const double v : h.values) top = std::max(top, v);
  if (!(top > 0)) top = 1;
  for (std::size_t j = 0; j < m; ++j) {
    const double y = kTop + cell * static_cast<double>(j);
    out << "<text x=\"" << fixed(label_width - 6) << "\" y=\"" << fixed(y + 15)
        << "\" font-size=\"10\" text-anchor=\"end\">" << escape(h.features[j])
        << "</text>\n";
    for (std::size_t k = 0; k < m; ++k) {
      const double x = label_width + cell * static_cast<double>(k);
      out << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\""
          << fixed(cell) << "\" height=\"" << fixed(cell) << "\" fill=\""
          << ramp(h.at(j, k) / top) << "\"><title>" << escape(h.features[j]) << " x "
          << escape(h.features[k]) << ": " << format_double(h.at(j, k))
          << "</title></rect>\n";
    }
  }
  return canvas.finish();
}

}  // namespace surveyshap
