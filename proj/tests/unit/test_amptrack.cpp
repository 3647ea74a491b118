#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nestedaa/amptrack.hpp"
#include "nestedaa/errors.hpp"
#include "nestedaa/ksolve.hpp"
#include "oracles.hpp"

using namespace nestedaa;
using doctest::Approx;

namespace {

KnapsackInstance make(std::vector<std::int64_t> w, std::vector<std::int64_t> p, std::int64_t c) {
  KnapsackInstance inst;
  inst.weights = std::move(w);
  inst.profits = std::move(p);
  inst.capacity = c;
  return inst;
}

MarkedSet all_feasible(const KnapsackInstance &inst, std::size_t k) {
  return enumerate_partial_marked(inst, std::numeric_limits<std::int32_t>::min(), k);
}

} // namespace

TEST_CASE("step factor cases") {
  const auto inst = make({2, 5}, {1, 1}, 4);
  const auto b0 = BiasConfig::make(inst, 0.0, Bitstring{0});
  CHECK(qtg_step_factor(inst, b0, 0, 0, false) == Approx(1.0 / std::sqrt(2.0)));
  CHECK(qtg_step_factor(inst, b0, 0, 0, true) == Approx(1.0 / std::sqrt(2.0)));
  CHECK(qtg_step_factor(inst, b0, 0, 1, false) == 1.0);
  CHECK(qtg_step_factor(inst, b0, 0, 1, true) == 0.0);
  CHECK(qtg_step_factor(inst, b0, 3, 0, true) == 0.0);

  const auto b3 = BiasConfig::make(inst, 3.0, Bitstring{1});
  CHECK(qtg_step_factor(inst, b3, 0, 0, true) == Approx(std::sqrt(4.0 / 5.0)));
  CHECK(qtg_step_factor(inst, b3, 0, 0, false) == Approx(std::sqrt(1.0 / 5.0)));
}

TEST_CASE("bias config validation") {
  const auto inst = make({2, 5}, {1, 1}, 4);
  CHECK_THROWS_AS(BiasConfig::make(inst, -1.0, Bitstring{0}), ParameterError);
  CHECK_THROWS_AS(BiasConfig::make(inst, 1.0, Bitstring{0b10}), ParameterError);
  CHECK_THROWS_AS(BiasConfig::make(inst, 1.0, Bitstring{0b100}), ParameterError);
}

TEST_CASE("unbiased tree gives uniform amplitudes when everything fits") {
  const auto inst = make({1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, 5);
  const auto bias = BiasConfig::make(inst, 0.0, Bitstring{0});
  for (std::uint64_t x = 0; x < 32; ++x) {
    CHECK(partial_amplitude(inst, bias, Bitstring{x}, 5) == Approx(std::pow(2.0, -2.5)).epsilon(1e-14));
    CHECK(partial_amplitude(inst, bias, Bitstring{x}, 3) == Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
  }
}

TEST_CASE("reference prefix amplitude") {
  const auto inst = make({1, 1, 1, 1}, {1, 1, 1, 1}, 4);
  for (double b : {0.0, 1.0, 4.0, 17.5}) {
    const auto bias = BiasConfig::make(inst, b, Bitstring{0b0110});
    for (std::size_t k = 0; k <= 4; ++k) {
      CHECK(partial_amplitude(inst, bias, Bitstring{0b0110}, k) ==
            Approx(std::pow((b + 1.0) / (b + 2.0), k / 2.0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("partial amplitude matches the branch-probability oracle") {
  std::mt19937_64 gen(41);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + t % 8;
    const auto inst = oracle::random_instance(gen, n, 12, 0.4);
    const auto ref = greedy_solution(inst).bits;
    const double b = static_cast<double>(t % 5);
    const auto bias = BiasConfig::make(inst, b, ref);
    for (std::uint64_t x = 0; x < (1ULL << n); ++x) {
      for (std::size_t k = 0; k <= n; ++k) {
        const double want = oracle::amplitude(inst, b, ref.mask, x, k);
        CHECK(partial_amplitude(inst, bias, Bitstring{x}, k) == Approx(want).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("zero amplitude exactly on infeasible prefixes") {
  std::mt19937_64 gen(43);
  for (int t = 0; t < 20; ++t) {
    const auto inst = oracle::random_instance(gen, 7, 10, 0.3);
    const auto bias = BiasConfig::make(inst, 2.0, Bitstring{0});
    for (std::uint64_t x = 0; x < 128; ++x) {
      for (std::size_t k = 1; k <= 7; ++k) {
        const bool infeasible = oracle::weight(inst, x, k) > inst.capacity;
        CHECK((partial_amplitude(inst, bias, Bitstring{x}, k) == 0.0) == infeasible);
      }
    }
  }
}

TEST_CASE("squared amplitudes over feasible prefixes sum to one") {
  std::mt19937_64 gen(47);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 4 + t % 9;
    const auto inst = oracle::random_instance(gen, n, 20, 0.35);
    const auto ref = greedy_solution(inst).bits;
    for (double b : {0.0, 1.0, static_cast<double>(n)}) {
      const auto bias = BiasConfig::make(inst, b, ref);
      for (std::size_t k : {std::size_t{1}, n / 2, n}) {
        double sum = 0.0;
        for (std::uint64_t x = 0; x < (1ULL << k); ++x) {
          const double a = partial_amplitude(inst, bias, Bitstring{x}, k);
          sum += a * a;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("ensemble angles") {
  const auto inst = make({3, 4, 2, 5}, {2, 2, 2, 2}, 6);
  const auto bias = BiasConfig::make(inst, 1.0, Bitstring{0b0101});
  MarkedSet empty;
  empty.depth = 2;
  CHECK(build_partial_ensemble(inst, bias, empty).theta == 0.0);
  const auto full = build_partial_ensemble(inst, bias, all_feasible(inst, 3));
  CHECK(full.theta == Approx(std::numbers::pi / 2).epsilon(1e-7));
  CHECK(full.weight() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ensemble theta matches direct summation") {
  const auto inst = reorder_items(generate_instance({10, 50, CorrelationType::Uncorrelated, 3, 2}),
                                  ItemOrdering::DensityDescending);
  const auto g = greedy_solution(inst);
  for (double b : {0.0, 10.0}) {
    const auto bias = BiasConfig::make(inst, b, g.bits);
    const auto ens = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, g.value, 5));
    double sum = 0.0;
    for (std::uint64_t x : oracle::partial_marked(inst, g.value, 5)) {
      const double a = oracle::amplitude(inst, b, g.bits.mask, x, 5);
      sum += a * a;
    }
    CHECK(std::abs(ens.theta - std::asin(std::sqrt(sum))) <= 1e-12);
    CHECK(std::abs(std::pow(std::sin(ens.theta), 2) - ens.weight()) <= 1e-12);
  }
}

TEST_CASE("rotation factors") {
  CHECK(rotation_factor(std::numbers::pi / 2, 0) == Approx(1.0));
  CHECK(rotation_factor(std::numbers::pi / 6, 1) == Approx(2.0));
  CHECK(rotation_factor(0.0, 3) == 0.0);
  MarkedEnsemble ens;
  ens.depth = 1;
  ens.states = {{Bitstring{0}, 0.5}};
  ens.theta = std::numbers::pi / 6;
  CHECK(success_probability(ens, 1) == Approx(1.0));
  CHECK(success_probability(ens, 0) == Approx(0.25));
  const auto rot = apply_rotation(ens, 1);
  CHECK(rot.states[0].amplitude == Approx(1.0));
  CHECK(rot.weight() == Approx(1.0));
  CHECK(rot.theta == ens.theta);
}

TEST_CASE("success probability at the extremes") {
  MarkedEnsemble zero;
  MarkedEnsemble full;
  full.theta = std::numbers::pi / 2;
  for (std::uint64_t r = 0; r < 6; ++r) {
    CHECK(success_probability(zero, r) == 0.0);
    CHECK(success_probability(full, r) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation keeps relative amplitudes") {
  std::mt19937_64 gen(53);
  const auto inst = oracle::random_instance(gen, 10, 30, 0.4);
  const auto g = greedy_solution(inst);
  const auto bias = BiasConfig::make(inst, 2.0, g.bits);
  const auto ens = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, g.value, 6));
  REQUIRE(ens.states.size() >= 2);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto rot = apply_rotation(ens, r);
    const double f = rot.states[0].amplitude / ens.states[0].amplitude;
    for (std::size_t j = 0; j < ens.states.size(); ++j) {
      CHECK(rot.states[j].amplitude == Approx(f * ens.states[j].amplitude).epsilon(1e-12));
    }
    CHECK(rot.weight() == Approx(success_probability(ens, r)).epsilon(1e-12));
  }
}

TEST_CASE("extension matches full tracking") {
  const auto inst = reorder_items(generate_instance({8, 40, CorrelationType::Uncorrelated, 2, 1}),
                                  ItemOrdering::DensityDescending);
  const auto g = greedy_solution(inst);
  const std::int64_t y = g.value - 5;
  const auto global = enumerate_global_marked(inst, y);
  REQUIRE_FALSE(global.empty());
  for (double b : {0.0, 8.0}) {
    const auto bias = BiasConfig::make(inst, b, g.bits);
    const auto inner = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, y, 4));
    for (std::uint64_t r : {0, 1, 2}) {
      const double f = std::sin((2.0 * r + 1) * inner.theta) / std::sin(inner.theta);
      const auto ext = extend_ensemble(inst, bias, apply_rotation(inner, r), global);
      REQUIRE(ext.states.size() == global.size());
      for (const auto &s : ext.states) {
        const double want = f * oracle::amplitude(inst, b, g.bits.mask, s.bits.mask, 8);
        CHECK(std::abs(s.amplitude - want) <= 1e-12);
      }
    }
  }
}

TEST_CASE("identity extension at full depth") {
  std::mt19937_64 gen(59);
  const auto inst = oracle::random_instance(gen, 6, 10, 0.5);
  const auto bias = BiasConfig::make(inst, 1.0, Bitstring{0});
  const auto global = enumerate_global_marked(inst, 3);
  auto inner = build_partial_ensemble(inst, bias, global);
  const auto ext = extend_ensemble(inst, bias, inner, global);
  REQUIRE(ext.states.size() == inner.states.size());
  for (std::size_t j = 0; j < ext.states.size(); ++j) {
    CHECK(ext.states[j].amplitude == inner.states[j].amplitude);
  }
  CHECK(ext.theta == Approx(inner.theta).epsilon(1e-14));
}

TEST_CASE("suffix that cannot fit leaves the amplitude unchanged") {
  // Item 0 fills the knapsack; items 1 and 2 never fit after it.
  const auto inst = make({4, 3, 2}, {10, 1, 1}, 4);
  const auto bias = BiasConfig::make(inst, 1.0, Bitstring{1});
  const auto global = enumerate_global_marked(inst, 9);
  REQUIRE(global.size() == 1);
  const auto inner = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, 9, 1));
  const auto ext = extend_ensemble(inst, bias, inner, global);
  CHECK(ext.states[0].amplitude == inner.states[0].amplitude);
}
