#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nestedaa/errors.hpp"
#include "nestedaa/gas.hpp"
#include "nestedaa/nested.hpp"
#include "nestedaa/qcheck.hpp"
#include "oracles.hpp"

using namespace nestedaa;
using namespace nestedaa::qcheck;
using doctest::Approx;

namespace {

KnapsackInstance make(std::vector<std::int64_t> w, std::vector<std::int64_t> p, std::int64_t c) {
  KnapsackInstance inst;
  inst.weights = std::move(w);
  inst.profits = std::move(p);
  inst.capacity = c;
  return inst;
}

// Profit-only layout with a uniform superposition over the profit register
// on the |-> flag.
StateVector uniform_profit(std::size_t width) {
  RegisterLayout l;
  l.capacity_qubits = 1;
  l.profit_qubits = width;
  StateVector sv(l, 0);
  auto &a = sv.amplitudes();
  std::fill(a.begin(), a.end(), StateVector::Amplitude{});
  const double h = 1.0 / std::sqrt(static_cast<double>(2ULL << width));
  for (std::uint64_t p = 0; p < (1ULL << width); ++p) {
    a[l.compose(0, 0, p, false)] = h;
    a[l.compose(0, 0, p, true)] = -h;
  }
  return sv;
}

std::vector<std::uint64_t> phased(const StateVector &sv) {
  std::vector<std::uint64_t> out;
  const auto &l = sv.layout();
  for (std::uint64_t p = 0; p < (1ULL << l.profit_qubits); ++p) {
    if (sv.amplitudes()[l.compose(0, 0, p, false)].real() < 0) {
      out.push_back(p);
    }
  }
  return out;
}

} // namespace

TEST_CASE("layout widths and packing") {
  const auto inst = make({3, 2}, {5, 6}, 4);
  const auto l = RegisterLayout::for_instance(inst);
  CHECK(l.item_qubits == 2);
  CHECK(l.capacity_qubits == 3);
  CHECK(l.profit_qubits == 4);
  CHECK(l.total() == 10);
  const auto idx = l.compose(0b10, 5, 11, true);
  CHECK(l.items_of(idx) == 0b10);
  CHECK(l.capacity_of(idx) == 5);
  CHECK(l.profit_of(idx) == 11);
  CHECK(l.flag_of(idx));
  CHECK_THROWS_AS(l.compose(0, 8, 0, false), LayoutError);
  CHECK_THROWS_AS(RegisterLayout::for_instance(inst, 9), LayoutError);
}

TEST_CASE("single fitting item with an unbiased gate") {
  const auto inst = make({2}, {3}, 5);
  const auto bias = BiasConfig::make(inst, 0.0, Bitstring{0});
  StateVector sv(RegisterLayout::for_instance(inst), inst.capacity);
  apply_qtg(sv, inst, bias, 0, 1);
  const auto &l = sv.layout();
  CHECK(sv.amplitudes()[l.compose(0, 5, 0, false)].real() == Approx(0.5));
  CHECK(sv.amplitudes()[l.compose(0, 5, 0, true)].real() == Approx(-0.5));
  CHECK(sv.amplitudes()[l.compose(1, 3, 3, false)].real() == Approx(0.5));
  CHECK(sv.amplitudes()[l.compose(1, 3, 3, true)].real() == Approx(-0.5));
  CHECK(sv.norm() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single item that does not fit leaves the state alone") {
  const auto inst = make({6}, {3}, 5);
  const auto bias = BiasConfig::make(inst, 2.0, Bitstring{0});
  StateVector sv(RegisterLayout::for_instance(inst), inst.capacity);
  const auto before = sv.amplitudes();
  apply_qtg(sv, inst, bias, 0, 1);
  CHECK(sv.amplitudes() == before);
  CHECK(std::abs(sv.amplitudes()[sv.reference_index(false)]) == Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("qtg probabilities match tracked amplitudes") {
  std::mt19937_64 gen(61);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(gen, 3, 6, 0.5);
    const auto ref = greedy_solution(inst).bits;
    const double b = static_cast<double>(t % 4);
    const auto bias = BiasConfig::make(inst, b, ref);
    StateVector sv(RegisterLayout::for_instance(inst), inst.capacity);
    apply_qtg(sv, inst, bias, 0, 3);
    CHECK(sv.norm() == Approx(1.0).epsilon(1e-12));
    const auto &l = sv.layout();
    std::vector<double> prob(8, 0.0);
    for (std::uint64_t idx = 0; idx < sv.size(); ++idx) {
      const double p = std::norm(sv.amplitudes()[idx]);
      if (p == 0.0) {
        continue;
      }
      const std::uint64_t x = l.items_of(idx);
      // Register consistency after the full QTG.
      CHECK(static_cast<std::int64_t>(l.capacity_of(idx)) == inst.capacity - oracle::weight(inst, x, 3));
      CHECK(static_cast<std::int64_t>(l.profit_of(idx)) == oracle::profit(inst, x, 3));
      prob[x] += p;
    }
    for (std::uint64_t x = 0; x < 8; ++x) {
      const double a = partial_amplitude(inst, bias, Bitstring{x}, 3);
      CHECK(std::abs(prob[x] - a * a) <= 1e-12);
    }
  }
}

TEST_CASE("qtg inverse undoes qtg") {
  std::mt19937_64 gen(67);
  const auto inst = oracle::random_instance(gen, 4, 5, 0.5);
  const auto bias = BiasConfig::make(inst, 1.5, Bitstring{0});
  StateVector sv(RegisterLayout::for_instance(inst), inst.capacity);
  const auto before = sv.amplitudes();
  apply_qtg(sv, inst, bias, 0, 4);
  apply_qtg_inverse(sv, inst, bias, 0, 4);
  for (std::size_t j = 0; j < before.size(); ++j) {
    CHECK(std::abs(sv.amplitudes()[j] - before[j]) <= 1e-12);
  }
}

TEST_CASE("threshold oracle on a 3-bit register") {
  auto sv = uniform_profit(3);
  CHECK(apply_threshold_oracle(sv, 5) == 1);
  CHECK(phased(sv) == std::vector<std::uint64_t>{6, 7});
  CHECK(threshold_control_patterns(3, 5).size() == 1);

  auto none = uniform_profit(3);
  apply_threshold_oracle(none, 7);
  CHECK(phased(none).empty());

  auto zero = uniform_profit(3);
  apply_threshold_oracle(zero, 0);
  CHECK(phased(zero) == std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7});

  auto neg = uniform_profit(3);
  CHECK(apply_threshold_oracle(neg, -3) == 1);
  CHECK(phased(neg).size() == 8);
}

TEST_CASE("threshold oracle is exact for every width and threshold") {
  CHECK(oracle_mismatches(6) == 0);
  for (std::size_t w = 1; w <= 6; ++w) {
    for (std::int64_t t = 0; t < (1LL << w); ++t) {
      auto sv = uniform_profit(w);
      const std::size_t patterns = apply_threshold_oracle(sv, t);
      CHECK(patterns == w - static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(t))));
      std::vector<std::uint64_t> want;
      for (std::uint64_t p = static_cast<std::uint64_t>(t) + 1; p < (1ULL << w); ++p) {
        want.push_back(p);
      }
      CHECK(phased(sv) == want);
      CHECK(sv.norm() == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("diffuser reflects about the reference state") {
  const auto inst = make({1, 2}, {1, 1}, 3);
  const auto l = RegisterLayout::for_instance(inst);
  StateVector sv(l, inst.capacity);
  const auto start = sv.amplitudes();
  apply_diffuser(sv);
  for (std::size_t j = 0; j < start.size(); ++j) {
    CHECK(std::abs(sv.amplitudes()[j] + start[j]) <= 1e-12);
  }

  StateVector other(l, inst.capacity);
  auto &a = other.amplitudes();
  std::fill(a.begin(), a.end(), StateVector::Amplitude{});
  a[l.compose(1, 3, 0, false)] = 1.0;
  const auto orth = a;
  apply_diffuser(other);
  CHECK(other.amplitudes() == orth);

  const auto bias = BiasConfig::make(inst, 1.0, Bitstring{0});
  StateVector mixed(l, inst.capacity);
  apply_qtg(mixed, inst, bias, 0, 2);
  const auto before = mixed.amplitudes();
  apply_diffuser(mixed);
  CHECK(mixed.norm() == Approx(1.0).epsilon(1e-12));
  apply_diffuser(mixed);
  for (std::size_t j = 0; j < before.size(); ++j) {
    CHECK(std::abs(mixed.amplitudes()[j] - before[j]) <= 1e-12);
  }
}

TEST_CASE("nested operator with no rotations is the plain qtg state") {
  std::mt19937_64 gen(71);
  const auto inst = oracle::random_instance(gen, 4, 6, 0.5);
  const auto bias = BiasConfig::make(inst, 1.0, greedy_solution(inst).bits);
  StateVector plain(RegisterLayout::for_instance(inst), inst.capacity);
  apply_qtg(plain, inst, bias, 0, 4);
  const auto op = run_nested_operator(inst, bias, 2, 1, 0, 0);
  for (std::size_t j = 0; j < plain.size(); ++j) {
    CHECK(std::abs(op.amplitudes()[j] - plain.amplitudes()[j]) <= 1e-12);
  }
}

TEST_CASE("full-depth inner rotation matches the tracked angle") {
  std::mt19937_64 gen(73);
  for (int t = 0; t < 5; ++t) {
    const auto inst = oracle::random_instance(gen, 4, 6, 0.6);
    const auto g = greedy_solution(inst);
    const auto bias = BiasConfig::make(inst, 1.0, g.bits);
    const std::int64_t y = g.value / 2;
    const auto ens = build_partial_ensemble(inst, bias, enumerate_global_marked(inst, y));
    for (std::uint64_t r_in = 0; r_in <= 2; ++r_in) {
      const auto sv = run_nested_operator(inst, bias, 4, y, r_in, 0);
      CHECK(std::abs(marked_probability(sv, inst, y) - success_probability(ens, r_in)) <= 1e-9);
    }
  }
}

TEST_CASE("n = 4, k = 2 nested operator matches the tracker") {
  const auto inst = make({2, 3, 1, 4}, {3, 4, 2, 5}, 6);
  const auto g = greedy_solution(inst);
  for (double b : {0.0, 1.0, 3.0}) {
    const auto bias = BiasConfig::make(inst, b, g.bits);
    const std::int64_t y = g.value - 3;
    const auto global = enumerate_global_marked(inst, y);
    const auto part = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, y, 2));
    const auto ens = nested_ensemble(inst, bias, part, 1, global);
    const auto sv = run_nested_operator(inst, bias, 2, y, 1, 1);
    const auto dist = marked_distribution(sv, inst, y);
    const double f = rotation_factor(ens.theta, 1);
    for (const auto &s : ens.states) {
      const auto it = dist.find(s.bits);
      const double got = it == dist.end() ? 0.0 : it->second;
      CHECK(std::abs(got - std::pow(s.amplitude * f, 2)) <= 1e-9);
    }
    CHECK(tracking_error(inst, bias, 2, y, 1, 3) <= 1e-9);
    CHECK(sv.norm() == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("marked probability edge values") {
  const auto inst = make({2, 3, 1}, {3, 4, 2}, 4);
  const auto bias = BiasConfig::make(inst, 0.0, Bitstring{0});
  StateVector sv(RegisterLayout::for_instance(inst), inst.capacity);
  apply_qtg(sv, inst, bias, 0, 3);
  CHECK(marked_probability(sv, inst, -1) == Approx(1.0).epsilon(1e-12));
  CHECK(marked_probability(sv, inst, oracle::optimum(inst)) == 0.0);

  // Direct loop over the basis as the reference.
  const auto &l = sv.layout();
  double want = 0.0;
  for (std::uint64_t idx = 0; idx < sv.size(); ++idx) {
    const std::uint64_t x = l.items_of(idx);
    if (oracle::weight(inst, x, 3) <= 4 && oracle::profit(inst, x, 3) > 4 &&
        static_cast<std::int64_t>(l.profit_of(idx)) == oracle::profit(inst, x, 3) &&
        static_cast<std::int64_t>(l.capacity_of(idx)) == 4 - oracle::weight(inst, x, 3)) {
      want += std::norm(sv.amplitudes()[idx]);
    }
  }
  CHECK(marked_probability(sv, inst, 4) == Approx(want).epsilon(1e-12));
}

TEST_CASE("unitarity through a long operator") {
  const auto inst = make({1, 2, 2, 3}, {2, 2, 3, 4}, 5);
  const auto bias = BiasConfig::make(inst, 2.0, greedy_solution(inst).bits);
  for (const auto &sv : run_nested_operator_sweep(inst, bias, 2, 4, 3, 3)) {
    CHECK(std::abs(sv.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("equivalence sweep on a few instances") {
  const auto rep = check_equivalence(6, 4, {0.0, 1.0, 3.0}, 2, 5);
  CHECK(rep.instances == 6);
  CHECK(rep.cases > 0);
  CHECK(rep.max_error <= 1e-9);
}
