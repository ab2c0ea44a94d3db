// Copyright 2026 The wbmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wbmpc_cli/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace wbmpc::cli {

namespace {

constexpr double kWidth = 900.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kPanelHeight = 150.0;
constexpr double kPanelGap = 40.0;

const std::array<const char*, 4> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad(double fraction = 0.05) {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = fraction * (hi - lo);
    lo -= m;
    hi += m;
  }
};

class Svg {
 public:
  explicit Svg(double height) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
        << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor = "start") {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\">"
        << s << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    os_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* stroke, double width = 1.0) {
    os_ << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1)
        << "\" y2=\"" << num(y1) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
        << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke,
                bool dashed = false) {
    os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\"";
    if (dashed) {
      os_ << " stroke-dasharray=\"5,3\"";
    }
    os_ << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    }
    os_ << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    os_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\""
        << fill << "\"/>\n";
  }
  std::string str() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  std::ostringstream os_;
};

struct Panel {
  double top;
  double height;
  Range x;
  Range y;

  double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }

  void frame(Svg& svg, const std::string& title, const std::string& ylabel) const {
    svg.line(kLeft, top, kLeft, top + height, "black");
    svg.line(kLeft, top + height, kWidth - kRight, top + height, "black");
    svg.text(kLeft, top - 8, title);
    svg.text(kLeft - 8, top + 10, label(y.hi), "end");
    svg.text(kLeft - 8, top + height, label(y.lo), "end");
    svg.text(kLeft - 8, top + 0.5 * height, ylabel, "end");
    svg.text(kLeft, top + height + 15, label(x.lo), "middle");
    svg.text(kWidth - kRight, top + height + 15, label(x.hi) + " s", "middle");
    if (y.lo < 0.0 && y.hi > 0.0) {
      svg.line(kLeft, py(0.0), kWidth - kRight, py(0.0), "#bbbbbb", 0.5);
    }
  }
};

std::vector<std::pair<double, double>> trace(const Panel& p, const std::vector<double>& t,
                                             const std::vector<double>& v) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    pts.emplace_back(p.px(t[i]), p.py(v[i]));
  }
  return pts;
}

struct MetricPoint {
  std::string window;
  double t_start;
  double t_end;
  double value;
};

std::vector<MetricPoint> metric_rows(const CsvTable& metrics, const std::string& name) {
  const std::size_t c_metric = metrics.column_index("metric");
  const std::size_t c_window = metrics.column_index("window");
  const std::vector<double> t0 = metrics.numeric("t_start");
  const std::vector<double> t1 = metrics.numeric("t_end");
  const std::vector<double> v = metrics.numeric("value");
  std::vector<MetricPoint> out;
  for (std::size_t r = 0; r < metrics.rows(); ++r) {
    if (metrics.cell(r, c_metric) == name) {
      out.push_back({metrics.cell(r, c_window), t0[r], t1[r], v[r]});
    }
  }
  return out;
}

}  // namespace

std::string contact_diagram_svg(const CsvTable& contacts) {
  const std::vector<double> t = contacts.numeric("t");
  std::array<std::vector<double>, kNumLegs> flags;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    flags[leg] = contacts.numeric(std::string(kLegNames[leg]));
  }
  const double row_h = 28.0;
  const double height = kTop + kNumLegs * row_h + 40.0;
  Svg svg(height);
  Panel p{kTop, kNumLegs * row_h, {}, {}};
  for (double v : t) {
    p.x.add(v);
  }
  if (!t.empty()) {
    // Each sample holds until the next one.
    p.x.add(t.back() + (t.size() > 1 ? t[t.size() - 1] - t[t.size() - 2] : 0.0));
  }
  if (!std::isfinite(p.x.lo)) {
    p.x.lo = 0.0;
    p.x.hi = 1.0;
  }
  svg.text(kLeft, kTop - 10, "contact schedule (bars: stance)");
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double y = kTop + leg * row_h;
    svg.text(kLeft - 8, y + 0.65 * row_h, std::string(kLegNames[leg]), "end");
    svg.rect(kLeft, y + 4, kWidth - kLeft - kRight, row_h - 8, "#f0f0f0");
    std::size_t i = 0;
    while (i < t.size()) {
      if (flags[leg][i] < 0.5) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < t.size() && flags[leg][j] >= 0.5) {
        ++j;
      }
      const double t_end = j < t.size() ? t[j] : p.x.hi;
      svg.rect(p.px(t[i]), y + 4, p.px(t_end) - p.px(t[i]), row_h - 8, kColors[leg]);
      i = j;
    }
  }
  const double axis_y = kTop + kNumLegs * row_h;
  svg.line(kLeft, axis_y, kWidth - kRight, axis_y, "black");
  svg.text(kLeft, axis_y + 15, label(p.x.lo), "middle");
  svg.text(kWidth - kRight, axis_y + 15, label(p.x.hi) + " s", "middle");
  return svg.str();
}

std::string velocity_svg(const CsvTable& states, const CsvTable& contacts) {
  const std::vector<double> t = states.numeric("t");
  const std::vector<double> t_ref = contacts.numeric("t");
  struct Channel {
    const char* title;
    const char* measured;
    const char* reference;
    const char* unit;
  };
  const std::array<Channel, 3> channels = {{
      {"forward velocity (body x)", "vx", "vx_ref", "m/s"},
      {"lateral velocity (body y)", "vy", "vy_ref", "m/s"},
      {"yaw rate (body z)", "wz", "yaw_rate_ref", "rad/s"},
  }};
  const double height = kTop + 3 * (kPanelHeight + kPanelGap);
  Svg svg(height);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::vector<double> m = states.numeric(channels[c].measured);
    const std::vector<double> r = contacts.numeric(channels[c].reference);
    Panel p{kTop + c * (kPanelHeight + kPanelGap), kPanelHeight, {}, {}};
    for (double v : t) {
      p.x.add(v);
    }
    for (double v : m) {
      p.y.add(v);
    }
    for (double v : r) {
      p.y.add(v);
    }
    p.x.pad(0.0);
    p.y.pad();
    p.frame(svg, channels[c].title, channels[c].unit);
    svg.polyline(trace(p, t_ref, r), "#555555", true);
    svg.polyline(trace(p, t, m), kColors[0]);
  }
  return svg.str();
}

std::string prediction_error_svg(const CsvTable& metrics) {
  const std::vector<MetricPoint> pts = metric_rows(metrics, "prediction_error");
  if (pts.empty()) {
    return {};
  }
  Svg svg(kTop + kPanelHeight + kPanelGap);
  Panel p{kTop, kPanelHeight, {}, {}};
  p.y.add(0.0);
  for (const MetricPoint& s : pts) {
    p.x.add(s.t_end);
    p.y.add(s.value);
  }
  p.x.pad(0.0);
  p.y.pad();
  p.frame(svg, "terminal COM prediction error", "m");
  for (const MetricPoint& s : pts) {
    svg.circle(p.px(s.t_end), p.py(s.value), 1.5, kColors[1]);
  }
  return svg.str();
}

std::string cot_svg(const CsvTable& metrics) {
  const std::vector<MetricPoint> pts = metric_rows(metrics, "cot");
  if (pts.empty()) {
    return {};
  }
  Svg svg(kTop + kPanelHeight + kPanelGap);
  Panel p{kTop, kPanelHeight, {}, {}};
  p.y.add(0.0);
  for (const MetricPoint& s : pts) {
    p.x.add(s.t_start);
    p.x.add(s.t_end);
    p.y.add(s.value);
  }
  p.x.pad(0.0);
  p.y.pad();
  p.frame(svg, "mechanical cost of transport per window", "COT");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const MetricPoint& s = pts[i];
    const char* color = kColors[i % kColors.size()];
    svg.line(p.px(s.t_start), p.py(s.value), p.px(s.t_end), p.py(s.value), color, 3.0);
    svg.text(0.5 * (p.px(s.t_start) + p.px(s.t_end)), p.py(s.value) - 6,
             s.window + " " + label(s.value), "middle");
  }
  return svg.str();
}

PlotReport write_plots(const std::filesystem::path& dir) {
  const CsvTable states = CsvTable::read(dir / "states.csv");
  const CsvTable contacts = CsvTable::read(dir / "contacts.csv");
  const CsvTable metrics = CsvTable::read(dir / "metrics.csv");

  PlotReport report;
  auto emit = [&](const char* name, const std::string& svg, const char* what) {
    if (svg.empty()) {
      report.warnings.push_back(std::string("no ") + what + " in metrics.csv; " + name +
                                " not written");
      return;
    }
    const std::filesystem::path path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) {
      throw CsvError("cannot write " + path.string());
    }
    os << svg;
    report.written.push_back(path);
  };
  emit("contacts.svg", contact_diagram_svg(contacts), "contacts");
  emit("velocity.svg", velocity_svg(states, contacts), "velocities");
  emit("prediction_error.svg", prediction_error_svg(metrics), "prediction error samples");
  emit("cot.svg", cot_svg(metrics), "COT windows");
  return report;
}

}  // namespace wbmpc::cli
