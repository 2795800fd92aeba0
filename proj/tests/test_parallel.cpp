#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "hci/parallel.hpp"

using hci::Exec;
namespace par = hci::par;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("block arithmetic") {
  CHECK(par::block_count(0) == 0);
  CHECK(par::block_count(1) == 1);
  CHECK(par::block_count(par::kBlock) == 1);
  CHECK(par::block_count(par::kBlock + 1) == 2);
}

TEST_CASE("for_blocks visits every index exactly once") {
  const std::size_t n = 3 * par::kBlock + 17;
  for (const Exec exec : {Exec::serial, Exec::parallel}) {
    std::vector<int> hits(n, 0);
    par::for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    });
    std::size_t total = 0;
    for (const int h : hits) {
      REQUIRE(h == 1);
      ++total;
    }
    CHECK(total == n);
  }
}

TEST_CASE("for_indices covers the range") {
  std::vector<int> hits(1000, 0);
  par::for_indices(hits.size(), Exec::parallel, [&](std::size_t i) { ++hits[i]; });
  for (const int h : hits) CHECK(h == 1);
}

TEST_CASE("transform_sum is bit-identical across execution modes") {
  const std::size_t n = 1000000;
  const auto f = [](std::size_t i) {
    const double x = static_cast<double>(i % 9973) * 1e-4;
    return std::sin(x) * std::exp(-x);
  };
  const double serial = par::transform_sum(n, Exec::serial, f);
  const double parallel = par::transform_sum(n, Exec::parallel, f);
  CHECK(same_bits(serial, parallel));

  long double reference = 0.0L;
  for (std::size_t i = 0; i < n; ++i) reference += f(i);
  CHECK(serial == doctest::Approx(static_cast<double>(reference)).epsilon(1e-12));
}

TEST_CASE("results do not depend on the thread count") {
  const int original = par::max_threads();
  const std::size_t n = 500000;
  const auto f = [](std::size_t i) { return 1.0 / (1.0 + static_cast<double>(i)); };
  par::set_threads(1);
  const double one = par::transform_sum(n, Exec::parallel, f);
  par::set_threads(4);
  const double four = par::transform_sum(n, Exec::parallel, f);
  par::set_threads(original);
  CHECK(same_bits(one, four));
}

TEST_CASE("reduce_blocks merges partials in block order") {
  const std::size_t n = 2 * par::kBlock + 100;
  const auto run = [n](Exec exec) {
    return par::reduce_blocks(
        n, exec, std::vector<std::size_t>{},
        [](std::size_t lo, std::size_t hi) {
          return std::vector<std::size_t>{lo, hi};
        },
        [](std::vector<std::size_t>& acc, const std::vector<std::size_t>& part) {
          acc.insert(acc.end(), part.begin(), part.end());
        });
  };
  const auto serial = run(Exec::serial);
  const auto parallel = run(Exec::parallel);
  CHECK(serial == parallel);  // ascending block order either way
  REQUIRE(serial.size() >= 2);
  CHECK(serial.front() == 0);
  CHECK(serial.back() == n);
}

TEST_CASE("exceptions from worker blocks propagate") {
  for (const Exec exec : {Exec::serial, Exec::parallel}) {
    CHECK_THROWS_WITH_AS(
        par::for_blocks(100000, exec,
                        [](std::size_t lo, std::size_t) {
                          if (lo >= 2 * par::kBlock) throw std::runtime_error("boom");
                        }),
        "boom", std::runtime_error);
    CHECK_THROWS_AS(par::for_indices(5000, exec,
                                     [](std::size_t i) {
                                       if (i == 4999) throw std::domain_error("late");
                                     }),
                    std::domain_error);
  }
}

}  // TEST_SUITE
