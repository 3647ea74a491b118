#ifndef NESTEDAA_NESTED_HPP
#define NESTEDAA_NESTED_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "nestedaa/amptrack.hpp"
#include "nestedaa/gas.hpp"
#include "nestedaa/instances.hpp"
#include "nestedaa/rng.hpp"

namespace nestedaa {

/// Outcome of the Inner Iteration Finder.
struct IifResult {
  std::uint64_t r_in = 0;
  double cost = 0.0;              // C_IIF in QTG-step units
  std::size_t attempts = 0;       // while-loop iterations
  std::size_t measurements = 0;   // emulated shots, each charged k(2 r_in + 1)
  bool degenerate = false;        // no useful inner amplification
  bool guard_hit = false;         // stopped by the iteration guard
  double theta_k = 0.0;           // tracked angle of S_partial
  double success_probability = 0.0; // sin^2((2 r_in + 1) theta_k)
};

struct DepthPolicy {
  enum class Mode { Fixed, RvtrTarget };
  Mode mode = Mode::RvtrTarget;
  std::size_t k = 0;
  double target = 0.6;

  static DepthPolicy fixed(std::size_t k) { return {Mode::Fixed, k, 0.6}; }
  static DepthPolicy rvtr_target(double target = 0.6) { return {Mode::RvtrTarget, 0, target}; }

  /// "fixed:K" or "rvtr:TARGET".
  static DepthPolicy parse(const std::string &text);
  std::string to_string() const;
};

struct CpBounds {
  double p_lower = 0.0;
  double p_upper = 1.0;
  double confidence = 0.9;
};

inline constexpr std::size_t kDefaultValidationShots = 5;
inline constexpr std::size_t kIifIterationGuard = 64;

/// Remaining profit beyond depth k over the incumbent value:
/// sum_{i>=k} p_i / y for 0 <= k <= n.
double rvtr(const KnapsackInstance &inst, std::size_t k, std::int64_t y);

/// Fixed mode returns k; RvtrTarget returns argmin_k |rvtr(k, y) - target|
/// over k in [1, n-1], smallest k on ties.
std::size_t choose_depth(const KnapsackInstance &inst, std::int64_t y, const DepthPolicy &policy);

/// Exact binomial (Clopper-Pearson) interval for s successes in t trials.
CpBounds clopper_pearson(std::size_t successes, std::size_t trials, double confidence);

/// IIF on an already tracked partial ensemble (depth k).
IifResult iif_on_ensemble(const MarkedEnsemble &partial, double lambda, std::size_t shots,
                          CounterRng &rng);

/// Builds S_partial(y, k), runs the IIF and charges C_IIF to ledger.inner.
IifResult iif(const KnapsackInstance &inst, const BiasConfig &bias, std::size_t k,
              const Incumbent &incumbent, double lambda, std::size_t shots, CounterRng &rng,
              CostLedger &ledger, std::size_t marked_cap = kDefaultMarkedCap);

/// Preparation ensemble over S_global(y) for B X(r_in, y, k): partial
/// QTG, r_in inner rotations, then the QTG on items k..n-1.
MarkedEnsemble nested_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                               const MarkedEnsemble &partial, std::uint64_t r_in,
                               const MarkedSet &global_marked);

/// Per-step cost (2r+1)(n + 2 r_in k).
double nested_step_cost(std::size_t n, std::size_t k, std::uint64_t r_in, std::uint64_t r);

struct NestedOptions {
  RunOptions run;
  DepthPolicy policy;
  std::size_t shots = kDefaultValidationShots; // L
};

struct NestedResult : GasResult {
  std::vector<IifResult> iif_calls;
  std::vector<std::size_t> depths; // depth used for each IIF call
};

NestedResult nested_gas(const KnapsackInstance &inst, const BiasConfig &bias,
                        const NestedOptions &options, CounterRng &rng);

/// log2(C_base / C_nested).
double relative_cost(double c_base, double c_nested);

/// C * n^t.
double budget(double c_const, std::size_t n, double t_exp);

} // namespace nestedaa

#endif // NESTEDAA_NESTED_HPP
