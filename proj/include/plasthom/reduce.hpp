#ifndef PLASTHOM_REDUCE_HPP
#define PLASTHOM_REDUCE_HPP

#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

namespace plasthom {

// Neumaier-compensated accumulator. Fixed accumulation order makes sums
// reproducible; the compensation keeps disjoint-mask sums additive to a
// couple of ulp, independent of term count.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& terms) {
  KahanSum s;
  for (double t : terms) s.add(t);
  return s.value();
}

// Runs fn(i) for i in [0, count). Work items write to pre-assigned slots, so
// results do not depend on the worker count. jobs <= 1 runs inline.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace plasthom

#endif
