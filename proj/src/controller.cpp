#include "acp/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acp {

std::string to_string(Action a) {
  switch (a) {
    case Action::inc: return "INC";
    case Action::dec: return "DEC";
    case Action::mdec: return "MDEC";
  }
  return "?";
}

std::string TargetChange::label() const {
  if (kind == Action::mdec) return "MDEC(" + std::to_string(gamma_used) + ")";
  return to_string(kind);
}

Controller::Controller(ControllerConfig cfg) : cfg_(cfg) {
  if (cfg_.eta < 1) throw std::invalid_argument("controller: eta must be >= 1");
  if (cfg_.gamma_cap < 1) throw std::invalid_argument("controller: gamma cap must be >= 1");
}

void Controller::set_state(int flag, int gamma) {
  if ((flag != 0 && flag != 1) || gamma < 0 || gamma > cfg_.gamma_cap)
    throw std::invalid_argument("controller: invalid state");
  flag_ = flag;
  gamma_ = gamma;
}

double mdec_target(int gamma, double backlog) {
  return -(1.0 - std::ldexp(1.0, -gamma)) * backlog;
}

TargetChange Controller::decide(double b_diff, double delta_diff, double backlog) {
  if (backlog < 0.0) throw std::invalid_argument("controller: negative backlog");
  const bool b_up = b_diff > 0.0;
  const bool d_up = delta_diff > 0.0;

  TargetChange out;
  if (b_up && d_up) {
    if (flag_ == 1) {
      gamma_ = std::min(gamma_ + 1, cfg_.gamma_cap);
      out = {Action::mdec, gamma_, mdec_target(gamma_, backlog)};
    } else {
      out = {Action::dec, 0, -1.0};
    }
    flag_ = 1;
  } else if (b_up != d_up) {
    out = {Action::inc, 0, 1.0};
    flag_ = 0;
    gamma_ = 0;
  } else if (flag_ == 1 && gamma_ > 0) {
    out = {Action::mdec, gamma_, mdec_target(gamma_, backlog)};
  } else {
    out = {Action::dec, 0, -1.0};
    flag_ = 0;
    gamma_ = 0;
  }
  return out;
}

double update_lambda(double b_star, double z_ewma, double rtt_ewma, double lambda_prev) {
  if (!(z_ewma > 0.0) || !(rtt_ewma > 0.0) || !(lambda_prev > 0.0))
    throw std::invalid_argument("update_lambda: Z, RTT and previous lambda must be positive");
  const double raw = 1.0 / z_ewma + b_star / rtt_ewma;
  if (raw < kMinLambdaRatio * lambda_prev) return kMinLambdaRatio * lambda_prev;
  if (raw > kMaxLambdaRatio * lambda_prev) return kMaxLambdaRatio * lambda_prev;
  return raw;
}

double epoch_length(double lambda, int eta) {
  if (!(lambda > 0.0)) throw std::invalid_argument("epoch_length: lambda must be positive");
  return static_cast<double>(eta) / lambda;
}

}  // namespace acp
