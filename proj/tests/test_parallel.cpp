#include <catch_amalgamated.hpp>

#include <atomic>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rdslab/error.hpp"
#include "rdslab/parallel.hpp"
#include "rdslab/rng.hpp"

using namespace rdslab;

TEST_CASE("parallel loop fills the same slots as the serial loop", "[parallel]") {
  const std::size_t n = 5000;
  auto work = [](std::size_t i) {
    std::mt19937_64 rng(derive_seed(42, "item", i));
    double s = 0;
    for (int k = 0; k < 100; ++k) s += std::uniform_real_distribution<double>(0, 1)(rng);
    return s;
  };
  std::vector<double> serial(n), parallel(n);
  for_each_index(Execution::Serial, n, 0, [&](std::size_t i) { serial[i] = work(i); });
  for (int workers : {0, 1, 2, 4, 7}) {
    std::fill(parallel.begin(), parallel.end(), 0.0);
    for_each_index(Execution::Parallel, n, workers, [&](std::size_t i) { parallel[i] = work(i); });
    CHECK(parallel == serial);
  }
}

TEST_CASE("every index runs exactly once", "[parallel]") {
  std::vector<std::atomic<int>> hits(1000);
  for_each_index(1000, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) CHECK(h.load() == 1);
  for_each_index(0, 4, [&](std::size_t) { FAIL("no items expected"); });
}

TEST_CASE("exceptions escape the parallel loop", "[parallel]") {
  std::atomic<int> ran{0};
  try {
    for_each_index(100, 3, [&](std::size_t i) {
      ran.fetch_add(1);
      if (i == 37) throw Error("stalled", "item 37");
    });
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == "stalled");
  }
  // Remaining items still run; the loop does not abandon them.
  CHECK(ran.load() == 100);
  CHECK_THROWS_AS(for_each_index(Execution::Serial, 3, 1, [](std::size_t) { throw std::runtime_error("x"); }),
                  std::runtime_error);
}

TEST_CASE("worker resolution", "[parallel]") {
  CHECK(resolve_workers(3) >= 1);
  CHECK(resolve_workers(0) >= 1);
#ifdef _OPENMP
  CHECK(resolve_workers(3) == 3);
#endif
}
