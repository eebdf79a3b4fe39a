#include "roiadapt/sizemodel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>

#include "roiadapt/textio.hpp"

namespace roiadapt::sizemodel {

PolynomialModel PolynomialModel::reference_coefficients() {
  PolynomialModel m;
  m.coeffs = {6.256e4, -0.2356, 432.4, 1.412e-6, 0.001398, -8.561, -2.637e-12, -8.87e-9, 6.147e-6, 0.04034};
  m.r_squared = 0.822;
  m.sample_count = 0;
  return m;
}

std::array<double, 10> monomials(double d, double q) {
  return {1.0, d, q, d * d, d * q, q * q, d * d * d, d * d * q, d * q * q, q * q * q};
}

SizeEstimate estimate_size(const PolynomialModel& m, double d, double q) {
  if (!(d >= 0.0)) throw DomainError("ROI area must be non-negative");
  if (!(q >= 0.0 && q <= 100.0)) throw DomainError("quality factor must lie in [1,100]");
  const auto terms = monomials(d, q);
  double s = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) s += m.coeffs[i] * terms[i];
  if (s < m.floor_bytes) return {m.floor_bytes, true};
  return {s, false};
}

PolynomialModel fit_polynomial(std::span<const SizeSample> samples) {
  constexpr int kTerms = 10;
  if (samples.size() < kTerms) throw FitError("need at least 10 samples, got " + std::to_string(samples.size()), {});
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(n, kTerms);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.measured_bytes <= 0) throw FitError("sample " + std::to_string(i) + " has non-positive size", {});
    const auto t = monomials(static_cast<double>(s.roi_w) * s.roi_h, s.qf);
    for (int k = 0; k < kTerms; ++k) a(i, k) = t[k];
    b(i) = static_cast<double>(s.measured_bytes);
  }
  Eigen::VectorXd scale(kTerms);
  for (int k = 0; k < kTerms; ++k) {
    scale(k) = a.col(k).cwiseAbs().maxCoeff();
    if (scale(k) == 0.0) scale(k) = 1.0;
    a.col(k) /= scale(k);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < kTerms) {
    std::vector<std::string> deficient;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < kTerms; ++k) deficient.emplace_back(kTermNames[perm(k)]);
    std::string names;
    for (const auto& d : deficient) names += (names.empty() ? "" : ",") + d;
    throw FitError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + "); deficient: " + names,
                   std::move(deficient));
  }
  const Eigen::VectorXd x = qr.solve(b);

  PolynomialModel m;
  for (int k = 0; k < kTerms; ++k) m.coeffs[k] = x(k) / scale(k);
  const Eigen::VectorXd resid = b - a * x;
  const double mean = b.mean();
  double ss_tot = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ss_tot += (b(i) - mean) * (b(i) - mean);
  const double ss_res = resid.squaredNorm();
  m.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  m.sample_count = static_cast<int>(n);
  return m;
}

double delay_seconds(double bytes, double throughput_mbps) {
  if (!(throughput_mbps > 0.0)) throw DomainError("throughput must be positive");
  return bytes * 8.0 / (throughput_mbps * 1e6);
}

double predict_delay(const PolynomialModel& m, double d, double q, double throughput_mbps) {
  if (!(throughput_mbps > 0.0)) throw DomainError("throughput must be positive");
  return delay_seconds(eval_size(m, d, q), throughput_mbps);
}

nlohmann::json to_json(const PolynomialModel& m) {
  nlohmann::json j;
  nlohmann::json c = nlohmann::json::object();
  for (std::size_t i = 0; i < m.coeffs.size(); ++i) c[kTermNames[i]] = m.coeffs[i];
  j["coefficients"] = c;
  j["r_squared"] = m.r_squared;
  j["x_semantics"] = m.x_semantics;
  j["sample_count"] = m.sample_count;
  j["floor_bytes"] = m.floor_bytes;
  return j;
}

PolynomialModel model_from_json(const nlohmann::json& j) {
  try {
    PolynomialModel m;
    const auto& c = j.at("coefficients");
    for (std::size_t i = 0; i < m.coeffs.size(); ++i) m.coeffs[i] = c.at(kTermNames[i]).get<double>();
    m.r_squared = j.at("r_squared").get<double>();
    m.x_semantics = j.at("x_semantics").get<std::string>();
    m.sample_count = j.value("sample_count", 0);
    m.floor_bytes = j.value("floor_bytes", 1.0);
    if (m.x_semantics != kAreaQfSemantics) throw ParseError("unsupported model x_semantics: " + m.x_semantics);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model document: ") + e.what());
  }
}

void save_model(const std::string& path, const PolynomialModel& m, const nlohmann::json& provenance) {
  auto j = to_json(m);
  if (!provenance.is_null()) j["provenance"] = provenance;
  textio::write_file(path, j.dump(2) + "\n");
}

PolynomialModel load_model(const std::string& path) {
  try {
    return model_from_json(nlohmann::json::parse(textio::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_samples(const std::string& path, std::span<const SizeSample> samples, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) os << "# " << comment << "\n";
  os << "roi_w,roi_h,qf,bytes\n";
  for (const auto& s : samples) os << s.roi_w << ',' << s.roi_h << ',' << s.qf << ',' << s.measured_bytes << '\n';
  textio::write_file(path, os.str());
}

std::vector<SizeSample> load_samples(const std::string& path) {
  const auto rows = textio::read_csv(path, {"roi_w", "roi_h", "qf", "bytes"});
  std::vector<SizeSample> out;
  for (const auto& row : rows) {
    SizeSample s{textio::to_int(row, 0), textio::to_int(row, 1), textio::to_int(row, 2), textio::to_int64(row, 3)};
    if (s.measured_bytes <= 0) throw ParseError(path + ":" + std::to_string(row.line) + ": bytes must be positive");
    out.push_back(s);
  }
  return out;
}

}  // namespace roiadapt::sizemodel
