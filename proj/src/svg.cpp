#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "churn/report.hpp"

namespace churn {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape_xml(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return format_fixed(v, 2); }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

// Chosen so tick labels land on 1, 2 or 5 times a power of ten.
double tick_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

std::string tick_label(double v, double step) {
  int decimals = 0;
  if (step < 1.0) decimals = static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  if (std::fabs(v) < step * 1e-9) v = 0.0;
  return format_fixed(v, decimals);
}

}  // namespace

Series survival_series(const SurvivalCurve& curve, std::string name) {
  Series s;
  s.name = std::move(name);
  s.x.push_back(0.0);
  s.y.push_back(1.0);
  for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
    if (curve.event_times[i] == 0.0) {
      s.y.back() = curve.survival[i];
      continue;
    }
    s.x.push_back(curve.event_times[i]);
    s.y.push_back(curve.survival[i]);
  }
  s.x_end = curve.max_follow_up;
  return s;
}

std::string render_svg(const ChartSpec& spec) {
  if (spec.width <= 2 * spec.margin || spec.height <= 2 * spec.margin) {
    throw std::invalid_argument("chart too small for its margins");
  }
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series x/y length mismatch");
  }
  const bool bar = spec.kind == ChartKind::bar;
  Range xr, yr;
  for (const auto& s : spec.series) {
    for (const double v : s.x) xr.add(v);
    for (const double v : s.y) yr.add(v);
    if (s.x_end) xr.add(*s.x_end);
  }
  if (bar) {
    yr.add(0.0);
    xr.lo = -0.5;
    xr.hi = static_cast<double>(std::max<std::size_t>(spec.categories.size(), 1)) - 0.5;
  }
  if (spec.kind == ChartKind::step || spec.kind == ChartKind::line) {
    yr.add(0.0);
    xr.add(0.0);
  }
  xr.finish();
  yr.finish();
  const double ystep = tick_step(yr.hi - yr.lo);
  yr.hi = std::ceil(yr.hi / ystep - 1e-9) * ystep;

  const double left = spec.margin, right = spec.width - spec.margin / 2.0;
  const double top = spec.margin / 2.0 + 10.0, bottom = spec.height - spec.margin;
  auto px = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * (right - left); };
  auto py = [&](double v) { return bottom - (v - yr.lo) / (yr.hi - yr.lo) * (bottom - top); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
    << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    o << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(spec.title) << "</text>\n";
  }

  // Axes and ticks.
  o << "<g class=\"axes\" stroke=\"black\">\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(right)
    << "\" y2=\"" << num(bottom) << "\"/>\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
    << "\" y2=\"" << num(bottom) << "\"/>\n";
  o << "</g>\n<g class=\"ticks\">\n";
  for (double v = std::ceil(yr.lo / ystep - 1e-9) * ystep; v <= yr.hi + ystep * 1e-9; v += ystep) {
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(v) + 4)
      << "\" text-anchor=\"end\">" << tick_label(v, ystep) << "</text>\n";
  }
  if (bar) {
    for (std::size_t i = 0; i < spec.categories.size(); ++i) {
      const double x = px(static_cast<double>(i));
      o << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 14) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
        << num(x) << ' ' << num(bottom + 14) << ")\">" << escape_xml(spec.categories[i]) << "</text>\n";
    }
  } else {
    const double xstep = tick_step(xr.hi - xr.lo);
    for (double v = std::ceil(xr.lo / xstep - 1e-9) * xstep; v <= xr.hi + xstep * 1e-9; v += xstep) {
      o << "<text x=\"" << num(px(v)) << "\" y=\"" << num(bottom + 16)
        << "\" text-anchor=\"middle\">" << tick_label(v, xstep) << "</text>\n";
    }
  }
  o << "</g>\n";
  o << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << spec.height - 8
    << "\" text-anchor=\"middle\">" << escape_xml(spec.x_label) << "</text>\n";
  o << "<text x=\"14\" y=\"" << num((top + bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num((top + bottom) / 2) << ")\">" << escape_xml(spec.y_label) << "</text>\n";

  const std::size_t ns = spec.series.size();
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& s = spec.series[k];
    const auto c = colour(k);
    o << "<g class=\"series\" data-name=\"" << escape_xml(s.name) << "\">\n";
    switch (spec.kind) {
      case ChartKind::bar: {
        const double slot = (right - left) / (xr.hi - xr.lo);
        const double w = slot * 0.8 / static_cast<double>(ns);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          const double x0 = px(s.x[i]) - slot * 0.4 + w * static_cast<double>(k);
          const double y0 = py(std::max(0.0, s.y[i]));
          o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(w)
            << "\" height=\"" << num(py(0.0) - y0) << "\" fill=\"" << c << "\"/>\n";
        }
        break;
      }
      case ChartKind::step: {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          const double x_next = i + 1 < s.x.size() ? s.x[i + 1] : s.x_end.value_or(s.x[i]);
          if (x_next > s.x[i]) {
            o << "<line class=\"step-h\" x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(s.y[i]))
              << "\" x2=\"" << num(px(x_next)) << "\" y2=\"" << num(py(s.y[i])) << "\" stroke=\"" << c
              << "\" stroke-width=\"1.5\"/>\n";
          }
          if (i + 1 < s.x.size() && s.y[i + 1] != s.y[i]) {
            o << "<line class=\"step-v\" x1=\"" << num(px(x_next)) << "\" y1=\"" << num(py(s.y[i]))
              << "\" x2=\"" << num(px(x_next)) << "\" y2=\"" << num(py(s.y[i + 1])) << "\" stroke=\"" << c
              << "\" stroke-width=\"1.5\"/>\n";
          }
        }
        break;
      }
      case ChartKind::line: {
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          o << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        }
        o << "\"/>\n";
        break;
      }
      case ChartKind::scatter: {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          const auto fill = s.groups.size() == s.x.size() ? colour(static_cast<std::size_t>(s.groups[i])) : c;
          o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
            << "\" r=\"2\" fill=\"" << fill << "\" fill-opacity=\"0.6\"/>\n";
        }
        break;
      }
    }
    o << "</g>\n";
  }

  if (ns > 1 || (ns == 1 && !spec.series[0].name.empty())) {
    o << "<g class=\"legend\">\n";
    for (std::size_t k = 0; k < ns; ++k) {
      const double y = top + 14.0 * static_cast<double>(k);
      o << "<rect x=\"" << num(right - 130) << "\" y=\"" << num(y) << "\" width=\"10\" height=\"10\" fill=\""
        << colour(k) << "\"/>\n";
      o << "<text x=\"" << num(right - 115) << "\" y=\"" << num(y + 9) << "\">"
        << escape_xml(spec.series[k].name) << "</text>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_svg(const ChartSpec& spec, const std::filesystem::path& path) {
  const auto text = render_svg(spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace churn
