#include "roiadapt/sizemodel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "roiadapt/error.hpp"

namespace roiadapt::sizemodel {
namespace {

double TrueSize(double d, double q) {
  return 5000 + 0.8 * d + 40 * q - 0.3 * q * q + 1e-6 * d * d + 0.002 * d * q + 0.001 * q * q * q;
}

std::vector<SizeSample> GridSamples() {
  std::vector<SizeSample> out;
  for (int w = 8; w <= 320; w += 24)
    for (int h = 8; h <= 240; h += 40)
      for (int q = 1; q <= 100; q += 11) out.push_back({w, h, q, std::llround(TrueSize(double(w) * h, q))});
  return out;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         (std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" + name);
}

TEST(SizeModelTest, PaperCoefficientsAtOrigin) {
  EXPECT_EQ(eval_size(PolynomialModel::reference_coefficients(), 0, 0), 62560.0);
}

TEST(SizeModelTest, PaperCoefficientsAtInteriorPoint) {
  // exact rational evaluation of the published coefficients
  EXPECT_NEAR(eval_size(PolynomialModel::reference_coefficients(), 240000, 50), 51071.912, 1e-6);
  EXPECT_NEAR(eval_size(PolynomialModel::reference_coefficients(), 76800, 100), 59795.510998016, 1e-6);
}

TEST(SizeModelTest, MonomialOrder) {
  const auto m = monomials(2, 3);
  const std::array<double, 10> expected = {1, 2, 3, 4, 6, 9, 8, 12, 18, 27};
  EXPECT_EQ(m, expected);
}

TEST(SizeModelTest, DomainChecks) {
  const auto m = PolynomialModel::reference_coefficients();
  EXPECT_THROW(estimate_size(m, -1, 50), DomainError);
  EXPECT_THROW(estimate_size(m, 100, 101), DomainError);
}

TEST(SizeModelTest, FloorClampIsFlagged) {
  PolynomialModel m;
  m.coeffs[0] = -50;
  const auto e = estimate_size(m, 10, 10);
  EXPECT_TRUE(e.clamped);
  EXPECT_EQ(e.bytes, m.floor_bytes);
}

TEST(FitTest, RecoversKnownSurface) {
  const auto samples = GridSamples();
  const auto m = fit_polynomial(samples);
  EXPECT_GT(m.r_squared, 0.999999);
  EXPECT_EQ(m.sample_count, static_cast<int>(samples.size()));
  for (const auto& s : samples) {
    const double d = double(s.roi_w) * s.roi_h;
    EXPECT_NEAR(eval_size(m, d, s.qf), TrueSize(d, s.qf), 1.0);
  }
}

TEST(FitTest, TooFewSamples) {
  auto samples = GridSamples();
  samples.resize(9);
  EXPECT_THROW(fit_polynomial(samples), FitError);
}

TEST(FitTest, ConstantQfIsRankDeficient) {
  std::vector<SizeSample> samples;
  for (int w = 8; w <= 320; w += 8) samples.push_back({w, 40, 50, 1000 + w * 40});
  try {
    fit_polynomial(samples);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_FALSE(e.deficient_terms.empty());
  }
}

TEST(DelayTest, Definition) {
  EXPECT_DOUBLE_EQ(delay_seconds(125000, 1.0), 1.0);
  EXPECT_NEAR(delay_seconds(200000, 9.5001), 0.16842, 1e-5);
  EXPECT_THROW(delay_seconds(1, 0.0), DomainError);
  const auto m = PolynomialModel::reference_coefficients();
  EXPECT_DOUBLE_EQ(predict_delay(m, 0, 0, 2.0), 62560.0 * 8 / 2e6);
}

TEST(ModelIoTest, JsonRoundTrip) {
  auto m = PolynomialModel::reference_coefficients();
  m.sample_count = 12;
  const auto path = TempPath("model.json").string();
  save_model(path, m, {{"note", "test"}});
  const auto back = load_model(path);
  EXPECT_EQ(back.coeffs, m.coeffs);
  EXPECT_EQ(back.r_squared, m.r_squared);
  EXPECT_EQ(back.sample_count, 12);
  auto j = to_json(m);
  j["x_semantics"] = "x=roi_width,y=qf";
  EXPECT_THROW(model_from_json(j), ParseError);
}

TEST(ModelIoTest, SamplesRoundTrip) {
  const auto samples = GridSamples();
  const auto path = TempPath("samples.csv").string();
  save_samples(path, samples, "test");
  const auto back = load_samples(path);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(back[i].roi_w, samples[i].roi_w);
    EXPECT_EQ(back[i].measured_bytes, samples[i].measured_bytes);
  }
}

}  // namespace
}  // namespace roiadapt::sizemodel
