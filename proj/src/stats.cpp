#include "bsl/stats.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "bsl/errors.hpp"

namespace bsl {

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

Moments moments(const Eigen::Ref<const Eigen::ArrayXd>& x) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw InvalidArgument("moments need at least two samples");
  Moments m;
  m.mean = pairwise_sum(x.data(), static_cast<std::size_t>(x.size())) / n;
  const Eigen::ArrayXd d = x - m.mean;
  const double m2 = d.square().mean();
  const double m3 = d.cube().mean();
  const double m4 = d.square().square().mean();
  m.variance = m2 * n / (n - 1.0);
  m.standard_error = std::sqrt(m.variance / n);
  m.skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  m.excess_kurtosis = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  return m;
}

LineFit fit_line(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& y) {
  const Eigen::Index n = x.size();
  if (n < 2 || y.size() != n) throw InvalidArgument("line fit needs at least two matching points");
  Eigen::MatrixXd a(n, 2);
  a.col(0).setOnes();
  a.col(1) = x.matrix();
  const Eigen::Vector2d beta = a.colPivHouseholderQr().solve(y.matrix());
  LineFit f;
  f.intercept = beta[0];
  f.slope = beta[1];
  const Eigen::VectorXd resid = y.matrix() - a * beta;
  const double ss_res = resid.squaredNorm();
  const double ss_tot = (y - y.mean()).square().sum();
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) {
    const double sxx = (x - x.mean()).square().sum();
    f.slope_stderr = sxx > 0 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
  }
  return f;
}

LineFit fit_loglog(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& y) {
  if ((x <= 0).any() || (y <= 0).any()) throw InvalidArgument("log-log fit needs positive data");
  return fit_line(x.log(), y.log());
}

}  // namespace bsl
