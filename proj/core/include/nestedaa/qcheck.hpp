#ifndef NESTEDAA_QCHECK_HPP
#define NESTEDAA_QCHECK_HPP

// Dense statevector simulation of the QTG circuit, the threshold oracle and
// the amplitude-amplification operators. Small registers only; used as the
// ground truth for the amplitude tracker.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "nestedaa/amptrack.hpp"
#include "nestedaa/instances.hpp"

namespace nestedaa::qcheck {

inline constexpr std::size_t kDefaultQubitCap = 26;

/// Basis index layout, least significant first: item qubits, capacity
/// register, profit register, flag qubit.
struct RegisterLayout {
  std::size_t item_qubits = 0;
  std::size_t capacity_qubits = 0;
  std::size_t profit_qubits = 0;
  std::size_t flag_qubits = 1;

  static RegisterLayout for_instance(const KnapsackInstance &inst,
                                     std::size_t qubit_cap = kDefaultQubitCap);

  std::size_t total() const { return item_qubits + capacity_qubits + profit_qubits + flag_qubits; }
  std::size_t capacity_offset() const { return item_qubits; }
  std::size_t profit_offset() const { return item_qubits + capacity_qubits; }
  std::size_t flag_offset() const { return item_qubits + capacity_qubits + profit_qubits; }

  std::uint64_t items_of(std::uint64_t idx) const;
  std::uint64_t capacity_of(std::uint64_t idx) const;
  std::uint64_t profit_of(std::uint64_t idx) const;
  bool flag_of(std::uint64_t idx) const;
  std::uint64_t compose(std::uint64_t items, std::uint64_t capacity, std::uint64_t profit,
                        bool flag) const;
};

class StateVector {
public:
  using Amplitude = std::complex<double>;

  /// |0...0>_items |capacity>_C |0>_P |->_flag.
  StateVector(const RegisterLayout &layout, std::int64_t capacity);

  const RegisterLayout &layout() const { return layout_; }
  std::int64_t capacity() const { return capacity_; }
  std::vector<Amplitude> &amplitudes() { return amps_; }
  const std::vector<Amplitude> &amplitudes() const { return amps_; }
  std::size_t size() const { return amps_.size(); }
  double norm() const;

  /// Index of the pre-preparation basis state with the given flag value.
  std::uint64_t reference_index(bool flag) const;

private:
  RegisterLayout layout_;
  std::int64_t capacity_;
  std::vector<Amplitude> amps_;
};

/// QTG steps for items [begin, end): controlled biased Hadamard on x_m
/// (control: w_m <= C), then C -= w_m and P += p_m controlled on x_m.
void apply_qtg(StateVector &state, const KnapsackInstance &inst, const BiasConfig &bias,
               std::size_t begin, std::size_t end);

/// Exact inverse of apply_qtg over the same range.
void apply_qtg_inverse(StateVector &state, const KnapsackInstance &inst, const BiasConfig &bias,
                       std::size_t begin, std::size_t end);

/// One multi-controlled X onto the flag: fires iff (P & mask) == value.
struct ControlPattern {
  std::uint64_t mask = 0;
  std::uint64_t value = 0;
};

/// MSB-to-LSB comparator patterns for "P > T" on a width-bit register: one
/// pattern per zero bit j of T, controlling on P_i = T_i for i > j and
/// P_j = 1. A negative T yields a single unconditional pattern.
std::vector<ControlPattern> threshold_control_patterns(std::size_t width, std::int64_t threshold);

/// Phase -1 on every basis state whose profit register exceeds T, realized
/// as controlled-X gates onto the |-> flag. Returns the number of patterns.
std::size_t apply_threshold_oracle(StateVector &state, std::int64_t threshold);

/// I - 2|s><s| (x) I_flag, |s> the pre-preparation state of the data registers.
void apply_diffuser(StateVector &state);

/// Full statevector after
/// (-BX D (BX)^dag O_global(y))^r_out B X(r_in, y, k),
/// X(r_in, y, k) = (-A D A^dag O_IIF(y))^r_in A, A = QTG on items [0, k),
/// B = QTG on items [k, n).
StateVector run_nested_operator(const KnapsackInstance &inst, const BiasConfig &bias,
                                std::size_t k, std::int64_t y, std::uint64_t r_in,
                                std::uint64_t r_out, std::size_t qubit_cap = kDefaultQubitCap);

/// Same circuit, returning the state after every r_out in [0, r_out_max].
std::vector<StateVector> run_nested_operator_sweep(const KnapsackInstance &inst,
                                                   const BiasConfig &bias, std::size_t k,
                                                   std::int64_t y, std::uint64_t r_in,
                                                   std::uint64_t r_out_max,
                                                   std::size_t qubit_cap = kDefaultQubitCap);

/// Probability mass on basis states whose item bits are in S_global(y) and
/// whose arithmetic registers are consistent with them.
double marked_probability(const StateVector &state, const KnapsackInstance &inst, std::int64_t y);

/// Per-bitstring version of marked_probability.
std::unordered_map<Bitstring, double> marked_distribution(const StateVector &state,
                                                          const KnapsackInstance &inst,
                                                          std::int64_t y);

/// max over r_out in [0, r_out_max] of |P_marked(tracker) - P_marked(statevector)|
/// for the nested operator at depth k.
double tracking_error(const KnapsackInstance &inst, const BiasConfig &bias, std::size_t k,
                      std::int64_t y, std::uint64_t r_in, std::uint64_t r_out_max,
                      std::size_t qubit_cap = kDefaultQubitCap);

/// Applies the threshold oracle to a uniform profit register of every
/// width in [1, max_width] for every T in [-1, 2^width] and counts the
/// (width, T, p) cases where the phase disagrees with p > T.
std::size_t oracle_mismatches(std::size_t max_width);

struct EquivalenceReport {
  std::size_t instances = 0;
  std::size_t cases = 0; // (instance, b, k, r_in) combinations, each over all r_out
  double max_error = 0.0;
};

/// Random instances with 2 <= n <= max_n and small weights; every
/// b in `biases`, k in [1, n-1], r_in and r_out in [0, max_rotations].
EquivalenceReport check_equivalence(std::size_t instances, std::size_t max_n,
                                    const std::vector<double> &biases,
                                    std::uint64_t max_rotations, std::uint64_t seed);

} // namespace nestedaa::qcheck

#endif // NESTEDAA_QCHECK_HPP
