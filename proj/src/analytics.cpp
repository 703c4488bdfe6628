#include "acp/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace acp::analytics {
namespace {

constexpr double kMinGap = 1e-9;

void check_stable(double lambda, double mu, const char* what) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError(std::string(what) + ": lambda must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError(std::string(what) + ": service rate must be positive");
  if (!(mu - lambda >= kMinGap))
    throw DomainError(std::string(what) + ": unstable, need lambda < service rate (lambda=" +
                      std::to_string(lambda) + ", mu=" + std::to_string(mu) + ")");
}

void check_tandem(const TandemParams& p, const char* what) {
  check_stable(p.lambda, p.mu1, what);
  check_stable(p.lambda, p.mu2, what);
}

}  // namespace

double aoi_mm1(double lambda, double mu) {
  check_stable(lambda, mu, "aoi_mm1");
  return 1.0 / lambda + 1.0 / mu + lambda * lambda / (mu * mu * (mu - lambda));
}

double mm1_system_time(double lambda, double mu) {
  check_stable(lambda, mu, "mm1_system_time");
  return 1.0 / (mu - lambda);
}

TandemMoments tandem_moments(const TandemParams& p) {
  check_tandem(p, "tandem_moments");
  const double l = p.lambda, m1 = p.mu1, m2 = p.mu2;
  TandemMoments e;
  e.half_ex2 = 1.0 / (l * l);
  e.e_s1x = 1.0 / (l * m1);
  e.e_s2x = 1.0 / (l * m2);
  e.e_w1x = l / (m1 * m1 * (m1 - l));
  e.e_w2x = l / (m2 * m2 * (m2 - l)) + l / (m1 * m2 * (m1 + m2 - l));
  return e;
}

double aoi_tandem(const TandemParams& p) {
  const TandemMoments e = tandem_moments(p);
  return p.lambda * (e.half_ex2 + e.e_xt());
}

double aoi_tandem_variant(const TandemParams& p, TandemVariant v) {
  check_tandem(p, "aoi_tandem_variant");
  const double l = p.lambda, m1 = p.mu1, m2 = p.mu2;
  const double base = 1.0 / l + 1.0 / m1 + 1.0 / m2 + l * l / (m1 * m1 * (m1 - l));
  switch (v) {
    case TandemVariant::cubic_cross:
      return base + l * l / (m2 * m2 * (m2 - l)) + l * l * l / (m1 * m2 * (m1 + m2 - l));
    case TandemVariant::linear_wait2:
      return base + l / (m2 * m2 * (m2 - l)) + l * l / (m1 * m2 * (m1 + m2 - l));
  }
  throw std::invalid_argument("aoi_tandem_variant: unknown variant");
}

double tandem_system_time(const TandemParams& p) {
  check_tandem(p, "tandem_system_time");
  return 1.0 / (p.mu1 - p.lambda) + 1.0 / (p.mu2 - p.lambda);
}

Optimum optimal_lambda(const std::function<double(double)>& age, double lo, double hi,
                       double rel_tol) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("optimal_lambda: need 0 < lo < hi");
  if (!(rel_tol > 0.0)) throw DomainError("optimal_lambda: tolerance must be positive");
  (void)age(lo);
  (void)age(hi);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = age(c), fd = age(d);
  while ((b - a) > rel_tol * 0.5 * (a + b)) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = age(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = age(d);
    }
  }
  const double x = 0.5 * (a + b);
  return Optimum{x, age(x)};
}

Optimum optimal_lambda_mm1(double mu) {
  if (!(mu > 0.0)) throw DomainError("optimal_lambda_mm1: mu must be positive");
  return optimal_lambda([mu](double l) { return aoi_mm1(l, mu); }, 1e-6 * mu, mu * (1.0 - 1e-6));
}

Optimum optimal_lambda_tandem(double mu1, double mu2) {
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw DomainError("optimal_lambda_tandem: rates must be positive");
  const double cap = std::min(mu1, mu2);
  return optimal_lambda([mu1, mu2](double l) { return aoi_tandem({l, mu1, mu2}); }, 1e-6 * cap,
                        cap * (1.0 - 1e-6));
}

std::vector<AgePoint> age_curve(const std::function<double(double)>& age,
                                std::span<const double> grid) {
  std::vector<AgePoint> out;
  out.reserve(grid.size());
  for (double l : grid) out.push_back(AgePoint{l, age(l)});
  return out;
}

void write_age_curve_csv(std::ostream& out, std::span<const AgePoint> curve) {
  out << "lambda,age\n";
  const auto old = out.precision(12);
  for (const auto& p : curve) out << p.lambda << ',' << p.age << '\n';
  out.precision(old);
}

}  // namespace acp::analytics
