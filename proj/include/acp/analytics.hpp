#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace acp::analytics {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Average age of a FCFS M/M/1 queue:
//   1/lambda + 1/mu + lambda^2 / (mu^2 (mu - lambda)).
double aoi_mm1(double lambda, double mu);

// Mean M/M/1 system time 1/(mu - lambda).
double mm1_system_time(double lambda, double mu);

struct TandemParams {
  double lambda = 0.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
};

// Moments of two exponential FCFS queues in tandem fed by Poisson updates.
// X is the interarrival time, W(k) and S(k) the wait and service at queue k.
struct TandemMoments {
  double half_ex2 = 0.0;  // E[X^2]/2
  double e_s1x = 0.0;     // E[S(1) X]
  double e_s2x = 0.0;     // E[S(2) X]
  double e_w1x = 0.0;     // E[W(1) X]
  double e_w2x = 0.0;     // E[W(2) X]

  double e_xt() const { return e_w1x + e_w2x + e_s1x + e_s2x; }
};

TandemMoments tandem_moments(const TandemParams& p);

// Average age lambda (E[X^2]/2 + E[XT]) assembled from tandem_moments():
//   1/l + 1/m1 + 1/m2 + l^2/(m1^2 (m1-l)) + l^2/(m2^2 (m2-l))
//     + l^2/(m1 m2 (m1+m2-l))
// Symmetric in (mu1, mu2), homogeneous of degree -1 in (l, m1, m2), and
// tends to aoi_mm1(lambda, mu1) as mu2 -> inf.
double aoi_tandem(const TandemParams& p);

// Two other closed forms that circulate for this network. Each differs from
// aoi_tandem in one term and is off from simulation by a few percent; they
// exist so the comparison can be reproduced.
enum class TandemVariant {
  cubic_cross,   // last term l^3/(m1 m2 (m1+m2-l))
  linear_wait2,  // fifth term l/(m2^2 (m2-l)); not symmetric
};
double aoi_tandem_variant(const TandemParams& p, TandemVariant v);

// Mean end-to-end system time 1/(mu1-lambda) + 1/(mu2-lambda).
double tandem_system_time(const TandemParams& p);

struct Optimum {
  double lambda = 0.0;
  double age = 0.0;
};

// Golden-section minimization of a unimodal age curve on (lo, hi) to the
// given relative tolerance in lambda. Both bounds are evaluated first, so a
// bound outside the stability region raises DomainError.
Optimum optimal_lambda(const std::function<double(double)>& age, double lo, double hi,
                       double rel_tol = 1e-6);

Optimum optimal_lambda_mm1(double mu);
Optimum optimal_lambda_tandem(double mu1, double mu2);

struct AgePoint {
  double lambda = 0.0;
  double age = 0.0;
};

std::vector<AgePoint> age_curve(const std::function<double(double)>& age,
                                std::span<const double> grid);

// "lambda,age" CSV, one row per point.
void write_age_curve_csv(std::ostream& out, std::span<const AgePoint> curve);

}  // namespace acp::analytics
