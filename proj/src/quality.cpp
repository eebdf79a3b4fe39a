#include "roiadapt/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "roiadapt/error.hpp"

namespace roiadapt::quality {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
constexpr double kC3 = kC2 / 2;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[i] = std::exp(-(d * d) / (2 * kSigma * kSigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Separable valid-mode filter: out is (width-10) x (height-10).
std::vector<double> filter_valid(const std::vector<double>& in, int width, int height) {
  static const auto taps = gaussian_taps();
  const int ow = width - kWindow + 1;
  const int oh = height - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      const double* p = &in[static_cast<std::size_t>(y) * width + x];
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * p[k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

SsimResult ssim(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g, int width, int height) {
  const auto n = static_cast<std::size_t>(width) * height;
  if (width <= 0 || height <= 0 || f.size() != n || g.size() != n)
    throw DomainError("ssim: planes must share positive dimensions");
  if (width < kWindow || height < kWindow) throw DomainError("ssim: plane smaller than the 11x11 window");

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = f[i];
    y[i] = g[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid(x, width, height);
  const auto mu_y = filter_valid(y, width, height);
  const auto e_xx = filter_valid(xx, width, height);
  const auto e_yy = filter_valid(yy, width, height);
  const auto e_xy = filter_valid(xy, width, height);

  SsimResult r;
  const std::size_t windows = mu_x.size();
  for (std::size_t i = 0; i < windows; ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double vx = std::max(0.0, e_xx[i] - mx * mx);
    const double vy = std::max(0.0, e_yy[i] - my * my);
    const double cov = e_xy[i] - mx * my;
    const double cov_c = std::clamp(cov, -std::sqrt(vx * vy), std::sqrt(vx * vy));
    const double sx = std::sqrt(vx);
    const double sy = std::sqrt(vy);
    const double l = (2 * mx * my + kC1) / (mx * mx + my * my + kC1);
    const double c = (2 * sx * sy + kC2) / (vx + vy + kC2);
    const double s = std::clamp((cov + kC3) / (sx * sy + kC3), -1.0, 1.0);
    r.luminance += l;
    r.contrast += c;
    r.structure += s;
    r.mean_ssim += ((2 * mx * my + kC1) * (2 * cov_c + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
  }
  const auto count = static_cast<double>(windows);
  r.luminance /= count;
  r.contrast /= count;
  r.structure /= count;
  r.mean_ssim /= count;
  return r;
}

SsimResult ssim(const codec::Frame& f, const codec::Frame& g) {
  if (f.width != g.width || f.height != g.height) throw DomainError("ssim: frame dimensions differ");
  return ssim(f.luma, g.luma, f.width, f.height);
}

}  // namespace roiadapt::quality
