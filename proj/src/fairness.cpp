#include <cmath>

#include "acp/simkit.hpp"

namespace acp::sim {

double jain_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("jain_index: no values");
  double sum = 0.0, sum_sq = 0.0;
  for (double x : values) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("jain_index: values must be finite and >= 0");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("jain_index: all values are zero");
  return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

}  // namespace acp::sim
