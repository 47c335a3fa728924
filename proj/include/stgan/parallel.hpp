#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace stgan {

// Process-wide worker cap (the CLI --jobs flag). Affects both parallel_for
// and Eigen's internal GEMM threading. Results are bitwise reproducible for
// a fixed jobs value, which is why jobs is echoed into config.lock.
inline int& job_limit() {
  static int jobs = int(std::max(1u, std::thread::hardware_concurrency()));
  return jobs;
}

inline void set_jobs(int jobs) {
  job_limit() = std::max(1, jobs);
  Eigen::setNbThreads(job_limit());
}

// Static block partition over [0, n). Safe for disjoint per-index writes;
// deterministic because no cross-thread reduction happens here.
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
  int jobs = std::min<int>(job_limit(), int(n));
  if (jobs <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mu;
  size_t chunk = (n + size_t(jobs) - 1) / size_t(jobs);
  for (int t = 0; t < jobs; ++t) {
    size_t lo = size_t(t) * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&, lo, hi] {
      try {
        for (size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace stgan
