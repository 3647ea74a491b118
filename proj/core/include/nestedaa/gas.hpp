#ifndef NESTEDAA_GAS_HPP
#define NESTEDAA_GAS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "nestedaa/amptrack.hpp"
#include "nestedaa/instances.hpp"
#include "nestedaa/ksolve.hpp"
#include "nestedaa/rng.hpp"

namespace nestedaa {

struct Incumbent {
  Solution solution;
  std::int64_t value = 0;

  static Incumbent from(const Solution &s) { return Incumbent{s, s.value}; }
};

/// One ledger line. Inner entries carry a whole IIF call; outer entries a
/// single QSearch step.
struct LedgerEntry {
  enum class Kind { Inner, Outer };
  Kind kind = Kind::Outer;
  std::uint64_t r = 0;    // outer rotation count (0 for inner entries)
  std::uint64_t r_in = 0; // inner rotation count in effect
  std::size_t k = 0;      // depth in effect (0 for baseline)
  double cost = 0.0;
};

/// Accumulated cost in QTG-step units.
struct CostLedger {
  double total = 0.0;
  double inner = 0.0;
  double outer = 0.0;
  std::vector<LedgerEntry> steps;

  void add_inner(std::size_t k, std::uint64_t r_in, double cost);
  void add_outer(std::size_t k, std::uint64_t r, std::uint64_t r_in, double cost);
};

inline constexpr double kDefaultLambda = 8.0 / 7.0;

/// Rotation-count bound of QSearch (called k in the BBHT schedule).
struct QSearchState {
  double m = 1.0;
  double lambda = kDefaultLambda;
};

/// Uniform over {0, ..., ceil(sqrt(m)) - 1}.
std::uint64_t sample_rotation_count(double m, CounterRng &rng);

/// Draws marked states with probability proportional to amplitude^2.
class MarkedSampler {
public:
  MarkedSampler() = default;
  explicit MarkedSampler(const MarkedEnsemble &ens);

  double theta() const { return theta_; }
  bool empty() const { return cumulative_.empty(); }

  /// With probability sin^2((2r+1) theta) a marked state, else nullopt.
  std::optional<Bitstring> measure(std::uint64_t r, CounterRng &rng) const;

private:
  std::vector<Bitstring> bits_;
  std::vector<double> cumulative_;
  double theta_ = 0.0;
};

std::optional<Solution> emulate_measurement(const KnapsackInstance &inst, const MarkedEnsemble &ens,
                                            std::uint64_t r, CounterRng &rng);

/// Baseline QTG ensemble over S_global(y).
MarkedEnsemble baseline_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                                 std::int64_t y, std::size_t marked_cap = kDefaultMarkedCap);

struct QSearchDraw {
  std::uint64_t r = 0;
  std::optional<Bitstring> found;
};

/// Samples r, measures, and applies the m update (reset to 1 on success,
/// multiply by lambda otherwise). Cost accounting is left to the caller.
QSearchDraw qsearch_draw(const MarkedSampler &sampler, QSearchState &qs, CounterRng &rng);

struct QSearchResult {
  Incumbent incumbent;
  QSearchState state;
  std::uint64_t r = 0;
};

/// One baseline QSearch step: ensemble over S_global(y), measurement, and
/// ledger.outer += n(2r+1).
QSearchResult qsearch_step(const KnapsackInstance &inst, const BiasConfig &bias,
                           const Incumbent &incumbent, QSearchState qs, CounterRng &rng,
                           CostLedger &ledger);

enum class StartMode { Greedy, UniformRandom };

struct RunOptions {
  double budget = 0.0;
  double lambda = kDefaultLambda;
  StartMode start = StartMode::Greedy;
  std::optional<Solution> start_solution; // overrides `start`
  std::size_t stop_after_improvements = 0; // 0: run until the budget is spent
  std::size_t max_steps = 10'000'000;
  std::size_t marked_cap = kDefaultMarkedCap;
  MarkedSetCache *cache = nullptr; // must belong to the same instance
};

/// S_partial(y, k) through options.cache when set, else enumerated into
/// `scratch`.
const MarkedSet &marked_set(const KnapsackInstance &inst, std::int64_t y, std::size_t k,
                            const RunOptions &options, MarkedSet &scratch);

struct TrajectoryPoint {
  double cost = 0.0;
  std::int64_t value = 0;
};

struct GasResult {
  Incumbent incumbent;
  CostLedger ledger;
  std::vector<TrajectoryPoint> trajectory; // start point, then one per step
  std::size_t steps = 0;
  std::size_t improvements = 0;
  bool hit_step_limit = false;
};

/// Uniform sample over all feasible assignments via counting DP.
Solution uniform_feasible_solution(const KnapsackInstance &inst, CounterRng &rng);

Solution starting_solution(const KnapsackInstance &inst, const RunOptions &options, CounterRng &rng);

/// Grover Adaptive Search with QTG preparation, run until the ledger total
/// reaches the budget (or the improvement limit).
GasResult baseline_gas(const KnapsackInstance &inst, const BiasConfig &bias,
                       const RunOptions &options, CounterRng &rng);

} // namespace nestedaa

#endif // NESTEDAA_GAS_HPP
