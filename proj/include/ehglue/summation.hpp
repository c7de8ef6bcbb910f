#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ehglue {

/// Neumaier's improved Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
    abs_ += std::abs(x);
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return s_ + c_; }
  /// Sum of absolute values of all added terms (roundoff scale).
  double abs_sum() const { return abs_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
  double abs_ = 0.0;
};

template <class Range>
double compensated_sum(const Range& r) {
  CompensatedSum s;
  for (double x : r) s.add(x);
  return s.value();
}

/// Process-wide worker count used by parallel_map (>= 1).
inline std::atomic<int>& worker_threads() {
  static std::atomic<int> n{1};
  return n;
}
inline void set_worker_threads(int n) { worker_threads() = std::max(1, n); }

/// out[i] = f(i) for i in [0, n). Work is split into contiguous blocks; each
/// result lands in its own slot, so callers that reduce `out` in index order
/// get results independent of the thread count.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f, int threads = 0) {
  std::vector<T> out(n);
  if (threads <= 0) threads = worker_threads();
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
      try {
        for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace ehglue
