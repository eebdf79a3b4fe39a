#include "roiadapt/quality.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "roiadapt/error.hpp"

namespace roiadapt::quality {
namespace {

constexpr int kW = 32;
constexpr int kH = 24;

std::vector<std::uint8_t> Pattern() {
  std::vector<std::uint8_t> f(kW * kH);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) f[y * kW + x] = static_cast<std::uint8_t>((x * 7 + y * 13 + (x * y) % 17) % 256);
  return f;
}

TEST(SsimTest, IdenticalPlanesScoreOne) {
  const auto f = Pattern();
  const auto r = ssim(f, f, kW, kH);
  EXPECT_DOUBLE_EQ(r.mean_ssim, 1.0);
  EXPECT_DOUBLE_EQ(r.luminance, 1.0);
}

TEST(SsimTest, MatchesReferenceImplementation) {
  // skimage.metrics.structural_similarity(gaussian_weights=True, sigma=1.5,
  // use_sample_covariance=False, data_range=255)
  const auto f = Pattern();
  std::vector<std::uint8_t> g(f.size()), inv(f.size());
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) {
      const int i = y * kW + x;
      g[i] = static_cast<std::uint8_t>(std::clamp(f[i] + (x * 3 + y * 5) % 11 - 5, 0, 255));
      inv[i] = static_cast<std::uint8_t>(255 - f[i]);
    }
  EXPECT_NEAR(ssim(f, g, kW, kH).mean_ssim, 0.9950020616580294, 1e-9);
  EXPECT_NEAR(ssim(f, inv, kW, kH).mean_ssim, -0.6636258201540318, 1e-9);
}

TEST(SsimTest, SymmetricAndBounded) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> a(kW * kH), b(kW * kH);
    for (auto& v : a) v = static_cast<std::uint8_t>(rng() % 256);
    for (std::size_t i = 0; i < b.size(); ++i)
      b[i] = static_cast<std::uint8_t>(std::clamp<int>(a[i] + static_cast<int>(rng() % 81) - 40, 0, 255));
    const double ab = ssim(a, b, kW, kH).mean_ssim;
    EXPECT_NEAR(ab, ssim(b, a, kW, kH).mean_ssim, 1e-12);
    EXPECT_LE(ab, 1.0);
    EXPECT_GE(ab, -1.0);
  }
}

TEST(SsimTest, MoreNoiseScoresLower) {
  const auto f = Pattern();
  std::mt19937 rng(9);
  double prev = 1.0;
  for (int amp : {2, 8, 32, 96}) {
    std::vector<std::uint8_t> g(f.size());
    std::mt19937 local(9);
    for (std::size_t i = 0; i < f.size(); ++i)
      g[i] = static_cast<std::uint8_t>(
          std::clamp<int>(f[i] + static_cast<int>(local() % (2 * amp + 1)) - amp, 0, 255));
    const double s = ssim(f, g, kW, kH).mean_ssim;
    EXPECT_LT(s, prev) << "amplitude " << amp;
    prev = s;
  }
}

TEST(SsimTest, RejectsBadShapes) {
  const auto f = Pattern();
  std::vector<std::uint8_t> small(10 * 10);
  EXPECT_THROW(ssim(small, small, 10, 10), DomainError);
  EXPECT_THROW(ssim(f, small, kW, kH), DomainError);
}

TEST(SsimTest, FrameOverloadUsesLuma) {
  const auto f = codec::make_frame(kW, kH, Pattern(), {0, 0, 8, 8});
  EXPECT_DOUBLE_EQ(ssim(f, f).mean_ssim, 1.0);
  const auto g = codec::make_frame(16, 16, std::vector<std::uint8_t>(256, 9), {0, 0, 8, 8});
  EXPECT_THROW(ssim(f, g), DomainError);
}

}  // namespace
}  // namespace roiadapt::quality
