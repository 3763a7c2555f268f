#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace nlevo {

// Worker count: NLEVO_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Work for each
// index must be independent; the caller reduces results in index order, which
// keeps every reduction bit-identical regardless of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (abs_(sum_) >= abs_(value)) {
      carry_ += (sum_ - t) + value;
    } else {
      carry_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  static double abs_(double v) noexcept { return v < 0 ? -v : v; }
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;

}  // namespace nlevo
