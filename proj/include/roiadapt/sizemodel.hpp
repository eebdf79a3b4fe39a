#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiadapt/error.hpp"

namespace roiadapt::sizemodel {

// Monomial order of the coefficient array.
inline constexpr std::array<const char*, 10> kTermNames = {"p00", "p10", "p01", "p20", "p11",
                                                           "p02", "p30", "p21", "p12", "p03"};
inline constexpr const char* kAreaQfSemantics = "x=roi_area_px2,y=qf";

// Cubic frame-size surface S(d, q) over ROI area d (pixels^2) and background
// quality factor q. Immutable once fitted.
struct PolynomialModel {
  std::array<double, 10> coeffs{};
  double r_squared = 0.0;
  std::string x_semantics = kAreaQfSemantics;
  int sample_count = 0;
  double floor_bytes = 1.0;

  // Coefficients published alongside the original regression; not fitted to
  // this project's corpus.
  static PolynomialModel reference_coefficients();
};

struct SizeSample {
  int roi_w = 0;
  int roi_h = 0;
  int qf = 0;
  long long measured_bytes = 0;
};

struct SizeEstimate {
  double bytes = 0.0;
  bool clamped = false;  // polynomial fell below the floor
};

std::array<double, 10> monomials(double d, double q);

// Throws DomainError for d < 0 or q outside [1,100]; q = 0 is accepted only
// for inspecting the intercept.
SizeEstimate estimate_size(const PolynomialModel& m, double d, double q);
inline double eval_size(const PolynomialModel& m, double d, double q) { return estimate_size(m, d, q).bytes; }

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<std::string> deficient)
      : std::runtime_error(what), deficient_terms(std::move(deficient)) {}
  std::vector<std::string> deficient_terms;
};

// Ordinary least squares over the ten monomials with column scaling and a
// column-pivoted QR solve.
PolynomialModel fit_polynomial(std::span<const SizeSample> samples);

// Seconds to push `bytes` through a link of `throughput_mbps` megabits/s.
double delay_seconds(double bytes, double throughput_mbps);
double predict_delay(const PolynomialModel& m, double d, double q, double throughput_mbps);

nlohmann::json to_json(const PolynomialModel& m);
PolynomialModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const PolynomialModel& m, const nlohmann::json& provenance = {});
PolynomialModel load_model(const std::string& path);

// CSV `roi_w,roi_h,qf,bytes`.
void save_samples(const std::string& path, std::span<const SizeSample> samples, const std::string& comment = {});
std::vector<SizeSample> load_samples(const std::string& path);

}  // namespace roiadapt::sizemodel
