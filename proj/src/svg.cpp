#include "roiadapt/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "roiadapt/error.hpp"

namespace roiadapt::svg {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 160;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string px(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

AxisRange widen(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

void header(std::ostringstream& os, const std::string& title, const std::string& comment) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  if (!comment.empty()) os << "<!-- " << escape(comment) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << escape(title) << "</text>\n";
}

void y_axis(std::ostringstream& os, const AxisRange& r, const std::string& label) {
  const double plot_h = kHeight - kTop - kBottom;
  for (int i = 0; i <= 5; ++i) {
    const double v = r.min + (r.max - r.min) * i / 5.0;
    const double y = kTop + plot_h * (1.0 - i / 5.0);
    os << "<line x1=\"" << kLeft << "\" y1=\"" << px(y) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << px(y)
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << px(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(label) << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
}

}  // namespace

AxisRange y_range(const std::vector<Series>& series) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series)
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) throw DomainError("no finite data to chart");
  return widen(lo, hi);
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::string& comment) {
  bool any = false;
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("series '" + s.name + "' has mismatched x/y lengths");
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
      any = true;
    }
  }
  if (!any) throw DomainError("line chart has no data");
  const AxisRange xr = widen(x_lo, x_hi);
  const AxisRange yr = y_range(series);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - xr.min) / (xr.max - xr.min) * plot_w; };
  auto sy = [&](double v) { return kTop + (1.0 - (v - yr.min) / (yr.max - yr.min)) * plot_h; };

  std::ostringstream os;
  header(os, title, comment);
  y_axis(os, yr, y_label);
  for (int i = 0; i <= 5; ++i) {
    const double v = xr.min + (xr.max - xr.min) * i / 5.0;
    os << "<text x=\"" << px(sx(v)) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << (i ? " " : "") << px(sx(s.x[i])) << ',' << px(sy(s.y[i]));
    }
    os << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 30
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 36 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars,
                      const std::string& comment) {
  if (bars.empty()) throw DomainError("bar chart has no data");
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  const AxisRange yr = widen(lo, hi);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sy = [&](double v) { return kTop + (1.0 - (v - yr.min) / (yr.max - yr.min)) * plot_h; };
  const double slot = plot_w / static_cast<double>(bars.size());

  std::ostringstream os;
  header(os, title, comment);
  y_axis(os, yr, y_label);
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double x = kLeft + slot * (static_cast<double>(k) + 0.2);
    const double top = sy(std::max(0.0, bars[k].value));
    const double bottom = sy(std::min(0.0, bars[k].value));
    os << "<rect x=\"" << px(x) << "\" y=\"" << px(top) << "\" width=\"" << px(slot * 0.6) << "\" height=\""
       << px(bottom - top) << "\" fill=\"" << kPalette[k % kPalette.size()] << "\"/>\n";
    os << "<text x=\"" << px(x + slot * 0.3) << "\" y=\"" << px(top - 4)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(bars[k].value)
       << "</text>\n";
    os << "<text x=\"" << px(x + slot * 0.3) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(bars[k].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace roiadapt::svg
