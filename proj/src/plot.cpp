// SPDX-License-Identifier: Apache-2.0
#include "leafseg/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "leafseg/error.hpp"
#include "text_io.hpp"

namespace leafseg {
namespace {

constexpr double kPanelW = 360.0;
constexpr double kPanelH = 260.0;
constexpr double kMarginL = 50.0;
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 40.0;
constexpr double kGap = 40.0;
constexpr double kLegendW = 150.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
  // Fixed two decimals: coordinates only need to be stable, not exact.
  const double r = std::round(v * 100.0) / 100.0;
  std::string s;
  detail::append_double(s, r == 0.0 ? 0.0 : r);
  return s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

}  // namespace

std::string render_sweep_svg(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw InputError("plot: empty sweep table");
  for (const auto& r : rows) {
    if (!std::isfinite(r.magnitude) || !std::isfinite(r.map)) throw InputError("plot: non-finite value in table");
    if (r.method.empty() || r.noise_kind.empty()) throw InputError("plot: empty method or noise kind");
  }
  const auto summary = summarize(rows);
  std::set<std::string> kinds, methods;
  double max_mag = 0.0;
  for (const auto& s : summary) {
    kinds.insert(s.noise_kind);
    methods.insert(s.method);
    max_mag = std::max(max_mag, s.magnitude);
  }
  if (max_mag <= 0.0) max_mag = 1.0;
  std::map<std::string, std::string> color;
  std::size_t ci = 0;
  for (const auto& m : methods) color[m] = kPalette[ci++ % std::size(kPalette)];

  const double width = kinds.size() * (kMarginL + kPanelW + kGap) + kLegendW;
  const double height = kMarginT + kPanelH + kMarginB;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::size_t panel = 0;
  for (const auto& kind : kinds) {
    const double x0 = panel * (kMarginL + kPanelW + kGap) + kMarginL;
    const double y0 = kMarginT;
    auto px = [&](double m) { return x0 + m / max_mag * kPanelW; };
    auto py = [&](double v) { return y0 + (1.0 - v) * kPanelH; };
    svg += "<g>\n<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"" + num(y0 - 12) + "\" text-anchor=\"middle\">" +
           escape(kind) + "</text>\n";
    svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(kPanelW) + "\" height=\"" + num(kPanelH) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = t / 4.0;
      svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(x0 + kPanelW) + "\" y2=\"" +
             num(py(v)) + "\" stroke=\"#ddd\"/>\n";
      svg += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
    }
    std::set<double> mags;
    for (const auto& s : summary) {
      if (s.noise_kind == kind) mags.insert(s.magnitude);
    }
    for (double m : mags) {
      svg += "<text x=\"" + num(px(m)) + "\" y=\"" + num(y0 + kPanelH + 16) + "\" text-anchor=\"middle\">" + num(m) +
             "</text>\n";
    }
    svg += "<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"" + num(y0 + kPanelH + 32) +
           "\" text-anchor=\"middle\">noise magnitude</text>\n";
    for (const auto& method : methods) {
      std::string pts;
      std::string dots;
      for (const auto& s : summary) {
        if (s.noise_kind != kind || s.method != method) continue;
        if (!pts.empty()) pts += ' ';
        pts += num(px(s.magnitude)) + ',' + num(py(s.map_mean));
        dots += "<circle cx=\"" + num(px(s.magnitude)) + "\" cy=\"" + num(py(s.map_mean)) + "\" r=\"3\" fill=\"" +
                color[method] + "\"/>\n";
      }
      if (pts.empty()) continue;
      svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color[method] + "\" stroke-width=\"2\"/>\n";
      svg += dots;
    }
    svg += "</g>\n";
    ++panel;
  }
  svg += "<text transform=\"rotate(-90)\" x=\"" + num(-(kMarginT + kPanelH / 2)) +
         "\" y=\"14\" text-anchor=\"middle\">mAP</text>\n";

  const double lx = kinds.size() * (kMarginL + kPanelW + kGap);
  double ly = kMarginT + 10;
  for (const auto& method : methods) {
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color[method] + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(method) + "</text>\n";
    ly += 18;
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const std::vector<SweepRow>& rows, const std::string& path) {
  const std::string svg = render_sweep_svg(rows);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << svg;
  if (!f) throw RuntimeError(path + ": write failed");
}

}  // namespace leafseg
