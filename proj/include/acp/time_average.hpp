#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace acp {

// Windowed integral of a piecewise-linear sample path. Segments are added
// in time order as (t0, t1, value at t0, slope); only the part overlapping
// [window_start, window_end] counts. The window can be split into equal
// batches for batch-means confidence intervals.
class TimeAverage {
 public:
  TimeAverage() = default;
  TimeAverage(double window_start, double window_end, int batches = 1)
      : start_(window_start), end_(window_end), batches_(std::max(batches, 1)),
        batch_area_(static_cast<std::size_t>(batches_), 0.0),
        batch_covered_(static_cast<std::size_t>(batches_), 0.0) {
    if (!(window_end > window_start)) throw std::invalid_argument("TimeAverage: empty window");
  }

  void add(double t0, double t1, double v0, double slope) {
    const double lo = std::max(t0, start_);
    const double hi = std::min(t1, end_);
    if (!(hi > lo)) return;
    if (batches_ == 1) {
      accumulate(0, lo, hi, t0, v0, slope);
      return;
    }
    const double width = (end_ - start_) / batches_;
    int b = std::min(batches_ - 1, static_cast<int>((lo - start_) / width));
    double a = lo;
    while (a < hi) {
      const double batch_end = b == batches_ - 1 ? end_ : start_ + (b + 1) * width;
      const double stop = std::min(hi, batch_end);
      if (stop > a) accumulate(b, a, stop, t0, v0, slope);
      a = stop;
      ++b;
      if (b >= batches_) break;
    }
  }

  double area() const {
    double s = 0.0;
    for (double x : batch_area_) s += x;
    return s;
  }
  double covered() const {
    double s = 0.0;
    for (double x : batch_covered_) s += x;
    return s;
  }
  double mean() const {
    const double c = covered();
    return c > 0.0 ? area() / c : 0.0;
  }

  // Half-width of a 95% batch-means interval; 0 with fewer than 2 batches.
  double ci_halfwidth() const {
    std::vector<double> means;
    for (int b = 0; b < batches_; ++b)
      if (batch_covered_[b] > 0.0) means.push_back(batch_area_[b] / batch_covered_[b]);
    const auto n = means.size();
    if (n < 2) return 0.0;
    double m = 0.0;
    for (double x : means) m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : means) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return student_t975(static_cast<int>(n) - 1) * sd / std::sqrt(static_cast<double>(n));
  }

  double window_start() const { return start_; }
  double window_end() const { return end_; }

 private:
  void accumulate(int b, double a, double c, double t0, double v0, double slope) {
    const double mid = 0.5 * (a + c);
    batch_area_[static_cast<std::size_t>(b)] += (c - a) * (v0 + slope * (mid - t0));
    batch_covered_[static_cast<std::size_t>(b)] += c - a;
  }

  static double student_t975(int dof) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                   2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                   2.131,  2.120, 2.110, 2.101, 2.093, 2.086};
    if (dof >= 1 && dof <= 20) return table[dof - 1];
    return 1.96;
  }

  double start_ = 0.0;
  double end_ = 1.0;
  int batches_ = 1;
  std::vector<double> batch_area_ = std::vector<double>(1, 0.0);
  std::vector<double> batch_covered_ = std::vector<double>(1, 0.0);
};

}  // namespace acp
