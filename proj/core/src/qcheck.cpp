#include "nestedaa/qcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "nestedaa/errors.hpp"
#include "nestedaa/ksolve.hpp"
#include "nestedaa/nested.hpp"
#include "nestedaa/rng.hpp"

namespace nestedaa::qcheck {

namespace {

std::uint64_t low_mask(std::size_t bits) { return bits >= 64 ? ~0ULL : (1ULL << bits) - 1; }

std::size_t width_for(std::uint64_t max_value) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::bit_width(max_value)));
}

} // namespace

RegisterLayout RegisterLayout::for_instance(const KnapsackInstance &inst, std::size_t qubit_cap) {
  validate(inst);
  RegisterLayout l;
  l.item_qubits = inst.n();
  l.capacity_qubits = width_for(static_cast<std::uint64_t>(inst.capacity));
  l.profit_qubits = width_for(static_cast<std::uint64_t>(inst.total_profit()));
  l.flag_qubits = 1;
  if (l.total() > qubit_cap) {
    throw LayoutError("layout needs " + std::to_string(l.total()) + " qubits, cap is " +
                      std::to_string(qubit_cap));
  }
  return l;
}

std::uint64_t RegisterLayout::items_of(std::uint64_t idx) const {
  return idx & low_mask(item_qubits);
}

std::uint64_t RegisterLayout::capacity_of(std::uint64_t idx) const {
  return (idx >> capacity_offset()) & low_mask(capacity_qubits);
}

std::uint64_t RegisterLayout::profit_of(std::uint64_t idx) const {
  return (idx >> profit_offset()) & low_mask(profit_qubits);
}

bool RegisterLayout::flag_of(std::uint64_t idx) const { return (idx >> flag_offset()) & 1ULL; }

std::uint64_t RegisterLayout::compose(std::uint64_t items, std::uint64_t capacity,
                                      std::uint64_t profit, bool flag) const {
  if ((items & ~low_mask(item_qubits)) != 0 || (capacity & ~low_mask(capacity_qubits)) != 0 ||
      (profit & ~low_mask(profit_qubits)) != 0) {
    throw LayoutError("register value does not fit its register");
  }
  return items | (capacity << capacity_offset()) | (profit << profit_offset()) |
         (static_cast<std::uint64_t>(flag) << flag_offset());
}

StateVector::StateVector(const RegisterLayout &layout, std::int64_t capacity)
    : layout_(layout), capacity_(capacity), amps_(std::size_t{1} << layout.total()) {
  if (capacity < 0) {
    throw LayoutError("negative capacity preload");
  }
  const double h = 1.0 / std::sqrt(2.0);
  amps_[reference_index(false)] = h;
  amps_[reference_index(true)] = -h;
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto &a : amps_) {
    s += std::norm(a);
  }
  return std::sqrt(s);
}

std::uint64_t StateVector::reference_index(bool flag) const {
  return layout_.compose(0, static_cast<std::uint64_t>(capacity_), 0, flag);
}

namespace {

// Controlled biased Hadamard [[a, b], [b, -a]] on item qubit m; the matrix
// is its own inverse.
void controlled_biased_hadamard(StateVector &state, const KnapsackInstance &inst,
                                const BiasConfig &bias, std::size_t m) {
  const auto &layout = state.layout();
  const double p_stay = bias.reference.test(m) ? 1.0 / (bias.bias_b + 2.0)
                                               : (bias.bias_b + 1.0) / (bias.bias_b + 2.0);
  const double a = std::sqrt(p_stay);
  const double b = std::sqrt(1.0 - p_stay);
  const std::uint64_t bit = 1ULL << m;
  const auto w = static_cast<std::uint64_t>(inst.weights[m]);
  auto &amps = state.amplitudes();
  for (std::uint64_t i0 = 0; i0 < amps.size(); ++i0) {
    if ((i0 & bit) != 0 || layout.capacity_of(i0) < w) {
      continue;
    }
    const std::uint64_t i1 = i0 | bit;
    const auto v0 = amps[i0];
    const auto v1 = amps[i1];
    amps[i0] = a * v0 + b * v1;
    amps[i1] = b * v0 - a * v1;
  }
}

// Register += delta (mod 2^width) on the register at `offset`, controlled on
// item qubit m. A permutation of basis states.
void controlled_add(StateVector &state, std::size_t m, std::size_t offset, std::size_t width,
                    std::int64_t delta) {
  const std::uint64_t mask = low_mask(width);
  const std::uint64_t modulus_delta = static_cast<std::uint64_t>(delta) & mask;
  const std::uint64_t bit = 1ULL << m;
  auto &amps = state.amplitudes();
  std::vector<StateVector::Amplitude> out(amps.size());
  for (std::uint64_t idx = 0; idx < amps.size(); ++idx) {
    if (amps[idx] == StateVector::Amplitude{}) {
      continue;
    }
    std::uint64_t dest = idx;
    if ((idx & bit) != 0) {
      const std::uint64_t reg = (idx >> offset) & mask;
      const std::uint64_t next = (reg + modulus_delta) & mask;
      dest = (idx & ~(mask << offset)) | (next << offset);
    }
    out[dest] = amps[idx];
  }
  amps.swap(out);
}

void check_range(const KnapsackInstance &inst, std::size_t begin, std::size_t end) {
  if (begin > end || end > inst.n()) {
    throw ParameterError("QTG item range out of bounds");
  }
}

} // namespace

void apply_qtg(StateVector &state, const KnapsackInstance &inst, const BiasConfig &bias,
               std::size_t begin, std::size_t end) {
  check_range(inst, begin, end);
  const auto &l = state.layout();
  for (std::size_t m = begin; m < end; ++m) {
    controlled_biased_hadamard(state, inst, bias, m);
    controlled_add(state, m, l.capacity_offset(), l.capacity_qubits, -inst.weights[m]);
    controlled_add(state, m, l.profit_offset(), l.profit_qubits, inst.profits[m]);
  }
}

void apply_qtg_inverse(StateVector &state, const KnapsackInstance &inst, const BiasConfig &bias,
                       std::size_t begin, std::size_t end) {
  check_range(inst, begin, end);
  const auto &l = state.layout();
  for (std::size_t m = end; m-- > begin;) {
    controlled_add(state, m, l.profit_offset(), l.profit_qubits, -inst.profits[m]);
    controlled_add(state, m, l.capacity_offset(), l.capacity_qubits, inst.weights[m]);
    controlled_biased_hadamard(state, inst, bias, m);
  }
}

std::vector<ControlPattern> threshold_control_patterns(std::size_t width, std::int64_t threshold) {
  if (threshold < 0) {
    return {ControlPattern{0, 0}};
  }
  const auto t = static_cast<std::uint64_t>(threshold);
  if (width < 64 && t > low_mask(width)) {
    return {};
  }
  std::vector<ControlPattern> patterns;
  for (std::size_t j = width; j-- > 0;) {
    if ((t >> j) & 1ULL) {
      continue;
    }
    const std::uint64_t above_and_j = low_mask(width) & ~low_mask(j);
    patterns.push_back(ControlPattern{above_and_j, (t & above_and_j) | (1ULL << j)});
  }
  return patterns;
}

std::size_t apply_threshold_oracle(StateVector &state, std::int64_t threshold) {
  const auto &l = state.layout();
  const auto patterns = threshold_control_patterns(l.profit_qubits, threshold);
  const std::uint64_t flag_bit = 1ULL << l.flag_offset();
  auto &amps = state.amplitudes();
  for (const auto &pat : patterns) {
    for (std::uint64_t idx = 0; idx < amps.size(); ++idx) {
      if ((idx & flag_bit) != 0 || (l.profit_of(idx) & pat.mask) != pat.value) {
        continue;
      }
      std::swap(amps[idx], amps[idx | flag_bit]);
    }
  }
  return patterns.size();
}

void apply_diffuser(StateVector &state) {
  auto &amps = state.amplitudes();
  amps[state.reference_index(false)] *= -1.0;
  amps[state.reference_index(true)] *= -1.0;
}

namespace {

void negate(StateVector &state) {
  for (auto &a : state.amplitudes()) {
    a = -a;
  }
}

class NestedCircuit {
public:
  NestedCircuit(const KnapsackInstance &inst, const BiasConfig &bias, std::size_t k,
                std::int64_t y, std::uint64_t r_in)
      : inst_(inst), bias_(bias), k_(k), y_(y), r_in_(r_in) {
    if (k < 1 || k > inst.n()) {
      throw ParameterError("depth k must lie in [1, n]");
    }
    std::int64_t tail = 0;
    for (std::size_t i = k; i < inst.n(); ++i) {
      tail += inst.profits[i];
    }
    inner_threshold_ = y - tail;
  }

  // X = (-A D A^dag O_IIF)^r_in A
  void x(StateVector &s) const {
    apply_qtg(s, inst_, bias_, 0, k_);
    for (std::uint64_t it = 0; it < r_in_; ++it) {
      apply_threshold_oracle(s, inner_threshold_);
      apply_qtg_inverse(s, inst_, bias_, 0, k_);
      apply_diffuser(s);
      apply_qtg(s, inst_, bias_, 0, k_);
      negate(s);
    }
  }

  // X^dag = A^dag (-O A D A^dag)^r_in
  void x_dagger(StateVector &s) const {
    for (std::uint64_t it = 0; it < r_in_; ++it) {
      apply_qtg_inverse(s, inst_, bias_, 0, k_);
      apply_diffuser(s);
      apply_qtg(s, inst_, bias_, 0, k_);
      apply_threshold_oracle(s, inner_threshold_);
      negate(s);
    }
    apply_qtg_inverse(s, inst_, bias_, 0, k_);
  }

  void prepare(StateVector &s) const {
    x(s);
    apply_qtg(s, inst_, bias_, k_, inst_.n());
  }

  void unprepare(StateVector &s) const {
    apply_qtg_inverse(s, inst_, bias_, k_, inst_.n());
    x_dagger(s);
  }

  void outer_iteration(StateVector &s) const {
    apply_threshold_oracle(s, y_);
    unprepare(s);
    apply_diffuser(s);
    prepare(s);
    negate(s);
  }

private:
  const KnapsackInstance &inst_;
  const BiasConfig &bias_;
  std::size_t k_;
  std::int64_t y_;
  std::uint64_t r_in_;
  std::int64_t inner_threshold_ = 0;
};

} // namespace

std::vector<StateVector> run_nested_operator_sweep(const KnapsackInstance &inst,
                                                   const BiasConfig &bias, std::size_t k,
                                                   std::int64_t y, std::uint64_t r_in,
                                                   std::uint64_t r_out_max, std::size_t qubit_cap) {
  const RegisterLayout layout = RegisterLayout::for_instance(inst, qubit_cap);
  const NestedCircuit circuit(inst, bias, k, y, r_in);
  StateVector state(layout, inst.capacity);
  circuit.prepare(state);
  std::vector<StateVector> out;
  out.reserve(r_out_max + 1);
  out.push_back(state);
  for (std::uint64_t r = 0; r < r_out_max; ++r) {
    circuit.outer_iteration(state);
    out.push_back(state);
  }
  return out;
}

StateVector run_nested_operator(const KnapsackInstance &inst, const BiasConfig &bias,
                                std::size_t k, std::int64_t y, std::uint64_t r_in,
                                std::uint64_t r_out, std::size_t qubit_cap) {
  const RegisterLayout layout = RegisterLayout::for_instance(inst, qubit_cap);
  const NestedCircuit circuit(inst, bias, k, y, r_in);
  StateVector state(layout, inst.capacity);
  circuit.prepare(state);
  for (std::uint64_t r = 0; r < r_out; ++r) {
    circuit.outer_iteration(state);
  }
  return state;
}

namespace {

// For each item assignment: the (capacity, profit) register pair it must
// carry to count as marked, or nothing.
template <typename Fn>
void for_each_marked_basis(const StateVector &state, const KnapsackInstance &inst, std::int64_t y,
                           Fn &&fn) {
  const auto &l = state.layout();
  const std::uint64_t n_states = 1ULL << l.item_qubits;
  std::vector<std::int64_t> expected_cap(n_states, -1);
  std::vector<std::int64_t> expected_profit(n_states, -1);
  for (std::uint64_t x = 0; x < n_states; ++x) {
    const Bitstring bits{x};
    const std::int64_t w = inst.weight_of(bits);
    const std::int64_t p = inst.profit_of(bits);
    if (w <= inst.capacity && p > y) {
      expected_cap[x] = inst.capacity - w;
      expected_profit[x] = p;
    }
  }
  const auto &amps = state.amplitudes();
  for (std::uint64_t idx = 0; idx < amps.size(); ++idx) {
    const std::uint64_t x = l.items_of(idx);
    if (expected_cap[x] < 0) {
      continue;
    }
    if (l.capacity_of(idx) == static_cast<std::uint64_t>(expected_cap[x]) &&
        l.profit_of(idx) == static_cast<std::uint64_t>(expected_profit[x])) {
      fn(Bitstring{x}, std::norm(amps[idx]));
    }
  }
}

} // namespace

double marked_probability(const StateVector &state, const KnapsackInstance &inst, std::int64_t y) {
  double total = 0.0;
  for_each_marked_basis(state, inst, y, [&](Bitstring, double p) { total += p; });
  return total;
}

std::unordered_map<Bitstring, double> marked_distribution(const StateVector &state,
                                                          const KnapsackInstance &inst,
                                                          std::int64_t y) {
  std::unordered_map<Bitstring, double> out;
  for_each_marked_basis(state, inst, y, [&](Bitstring x, double p) { out[x] += p; });
  return out;
}

double tracking_error(const KnapsackInstance &inst, const BiasConfig &bias, std::size_t k,
                      std::int64_t y, std::uint64_t r_in, std::uint64_t r_out_max,
                      std::size_t qubit_cap) {
  const auto states = run_nested_operator_sweep(inst, bias, k, y, r_in, r_out_max, qubit_cap);
  const MarkedEnsemble partial = build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, y, k));
  const MarkedEnsemble full =
      nested_ensemble(inst, bias, partial, r_in, enumerate_global_marked(inst, y));
  double worst = 0.0;
  for (std::uint64_t r = 0; r <= r_out_max; ++r) {
    const double tracked = full.empty() ? 0.0 : success_probability(full, r);
    worst = std::max(worst, std::abs(tracked - marked_probability(states[r], inst, y)));
  }
  return worst;
}

std::size_t oracle_mismatches(std::size_t max_width) {
  std::size_t bad = 0;
  for (std::size_t w = 1; w <= max_width; ++w) {
    RegisterLayout layout;
    layout.item_qubits = 0;
    layout.capacity_qubits = 1;
    layout.profit_qubits = w;
    const std::int64_t top = std::int64_t{1} << w;
    for (std::int64_t t = -1; t <= top; ++t) {
      StateVector state(layout, 0);
      auto &amps = state.amplitudes();
      std::fill(amps.begin(), amps.end(), StateVector::Amplitude{});
      for (std::int64_t p = 0; p < top; ++p) {
        const auto v = static_cast<std::uint64_t>(p);
        amps[layout.compose(0, 0, v, false)] = 1.0;
        amps[layout.compose(0, 0, v, true)] = -1.0;
      }
      apply_threshold_oracle(state, t);
      for (std::int64_t p = 0; p < top; ++p) {
        const auto v = static_cast<std::uint64_t>(p);
        const double expect = p > t ? -1.0 : 1.0;
        if (amps[layout.compose(0, 0, v, false)] != StateVector::Amplitude(expect) ||
            amps[layout.compose(0, 0, v, true)] != StateVector::Amplitude(-expect)) {
          ++bad;
        }
      }
    }
  }
  return bad;
}

EquivalenceReport check_equivalence(std::size_t instances, std::size_t max_n,
                                    const std::vector<double> &biases,
                                    std::uint64_t max_rotations, std::uint64_t seed) {
  if (max_n < 2) {
    throw ParameterError("equivalence check needs max_n >= 2");
  }
  EquivalenceReport rep;
  CounterRng rng(fold_key({0x51C4, seed}));
  while (rep.instances < instances) {
    GeneratorParams gp;
    gp.n = static_cast<std::size_t>(rng.uniform_int(2, max_n));
    gp.corr_type = static_cast<CorrelationType>(rng.uniform_int(0, 2));
    gp.range_r = gp.corr_type == CorrelationType::WeaklyCorrelated
                     ? static_cast<std::int64_t>(rng.uniform_int(10, 12))
                     : static_cast<std::int64_t>(rng.uniform_int(3, 10));
    gp.tightness_s = static_cast<std::int64_t>(rng.uniform_int(1, 4));
    gp.index_i = static_cast<std::int64_t>(rng.uniform_int(1, static_cast<std::uint64_t>(gp.tightness_s)));
    const KnapsackInstance inst = generate_instance(gp);
    const Solution best = optimal_solution(inst);
    const Solution greedy = greedy_solution(inst);
    const auto y = static_cast<std::int64_t>(
        rng.uniform_int(0, static_cast<std::uint64_t>(std::max<std::int64_t>(best.value - 1, 0))));
    ++rep.instances;
    for (double b : biases) {
      const BiasConfig bias = BiasConfig::make(inst, b, greedy.bits);
      for (std::size_t k = 1; k < inst.n(); ++k) {
        for (std::uint64_t r_in = 0; r_in <= max_rotations; ++r_in) {
          ++rep.cases;
          rep.max_error =
              std::max(rep.max_error, tracking_error(inst, bias, k, y, r_in, max_rotations));
        }
      }
    }
  }
  return rep;
}

} // namespace nestedaa::qcheck
