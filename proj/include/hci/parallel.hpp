#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hci {

// Execution mode for the block kernels. Serial is the reference
// implementation: it walks the exact same fixed block decomposition and
// merge order as the OpenMP path, so the two must agree bit-for-bit.
// Tests and the benchmark rely on that equivalence.
enum class Exec { serial, parallel };

namespace par {

// Fixed block size. Work is decomposed into blocks by element index, never
// by thread id, so partial results and the final merge order are a pure
// function of n. That is what makes every reduction reproducible across
// thread counts (and equal to the serial reference) down to the last bit.
inline constexpr std::size_t kBlock = 4096;

inline std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Runs fn(block_begin, block_end) over the fixed block grid. fn must only
// write to locations owned by its block. The first exception thrown by any
// block is rethrown after the loop drains (exceptions must not escape an
// OpenMP region).
template <class Fn>
void for_blocks(std::size_t n, Exec exec, Fn&& fn) {
  const std::size_t nb = block_count(n);
  if (exec == Exec::parallel && nb > 1) {
    std::exception_ptr eptr = nullptr;
    std::atomic<bool> failed{false};
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long long b = 0; b < static_cast<long long>(nb); ++b) {
      if (failed.load(std::memory_order_relaxed)) continue;
      const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
      try {
        fn(lo, lo + kBlock < n ? lo + kBlock : n);
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) {
          eptr = std::current_exception();
        }
      }
    }
    if (eptr) std::rethrow_exception(eptr);
  } else {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * kBlock;
      fn(lo, lo + kBlock < n ? lo + kBlock : n);
    }
  }
}

// Per-index variant of for_blocks for coarse-grained tasks (one unit of work
// per index, e.g. one tree or one bootstrap replicate). Results must be
// keyed by index so scheduling order cannot matter.
template <class Fn>
void for_indices(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::parallel && n > 1) {
    std::exception_ptr eptr = nullptr;
    std::atomic<bool> failed{false};
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) {
          eptr = std::current_exception();
        }
      }
    }
    if (eptr) std::rethrow_exception(eptr);
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

// Two-level deterministic reduction: per-block partial states computed
// independently (in parallel or serially), then merged in ascending block
// order. merge(acc, partial) must be associative in intent but is only ever
// applied in one fixed order, so floating-point results are stable.
template <class State, class BlockFn, class Merge>
State reduce_blocks(std::size_t n, Exec exec, State init, BlockFn&& block_fn, Merge&& merge) {
  const std::size_t nb = block_count(n);
  if (nb == 0) return init;
  std::vector<State> partials(nb, init);
  for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
    partials[lo / kBlock] = block_fn(lo, hi);
  });
  State acc = init;
  for (std::size_t b = 0; b < nb; ++b) merge(acc, partials[b]);
  return acc;
}

namespace detail {
inline double pairwise(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}
}  // namespace detail

// Sum of f(i) for i in [0, n): sequential within each block, pairwise over
// the per-block partials. The summation tree depends only on n.
template <class Fn>
double transform_sum(std::size_t n, Exec exec, Fn&& f) {
  const std::size_t nb = block_count(n);
  if (nb == 0) return 0.0;
  std::vector<double> partials(nb, 0.0);
  for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partials[lo / kBlock] = s;
  });
  return detail::pairwise(partials.data(), nb);
}

inline double sum(const double* v, std::size_t n, Exec exec) {
  return transform_sum(n, exec, [v](std::size_t i) { return v[i]; });
}

inline double sum(const std::vector<double>& v, Exec exec = Exec::parallel) {
  return sum(v.data(), v.size(), exec);
}

}  // namespace par
}  // namespace hci
