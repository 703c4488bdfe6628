#pragma once

#include <string>

namespace acp {

enum class Action { inc, dec, mdec };

std::string to_string(Action a);

// Target change in average backlog for the next epoch.
struct TargetChange {
  Action kind = Action::dec;
  int gamma_used = 0;  // only meaningful for MDEC
  double b_star = 0.0;

  std::string label() const;  // "INC", "DEC", "MDEC(3)"
};

struct ControllerConfig {
  int eta = 10;         // updates per control epoch
  int gamma_cap = 16;
};

// The ACP+ decision engine. decide() classifies an epoch by the signs of
// the change in average backlog and average age; zero counts as negative.
//
//   b>0, d>0 : DEC the first time, MDEC(gamma) with growing gamma after that
//   b>0, d<0 : INC, reset
//   b<0, d>0 : INC, reset
//   b<0, d<0 : MDEC(gamma) if the previous epochs were in the first
//              quadrant (flag set, gamma > 0), else DEC and reset
class Controller {
 public:
  explicit Controller(ControllerConfig cfg = {});

  TargetChange decide(double b_diff, double delta_diff, double backlog);

  int flag() const { return flag_; }
  int gamma() const { return gamma_; }
  const ControllerConfig& config() const { return cfg_; }

  // Test hook for exhaustive table checks.
  void set_state(int flag, int gamma);

 private:
  ControllerConfig cfg_;
  int flag_ = 0;
  int gamma_ = 0;
};

// b* for MDEC(gamma) applied to the given backlog.
double mdec_target(int gamma, double backlog);

// lambda = 1/Z + b*/RTT, clamped to [0.75, 1.25] x lambda_prev.
double update_lambda(double b_star, double z_ewma, double rtt_ewma, double lambda_prev);

inline constexpr double kMinLambdaRatio = 0.75;
inline constexpr double kMaxLambdaRatio = 1.25;

// T_k = eta / lambda_k.
double epoch_length(double lambda, int eta = 10);

}  // namespace acp
