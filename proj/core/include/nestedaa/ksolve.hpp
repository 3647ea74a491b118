#ifndef NESTEDAA_KSOLVE_HPP
#define NESTEDAA_KSOLVE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "nestedaa/instances.hpp"

namespace nestedaa {

struct Solution {
  Bitstring bits;
  std::int64_t value = 0;
  std::int64_t weight = 0;

  static Solution from_bits(const KnapsackInstance &inst, Bitstring bits);
  bool operator==(const Solution &) const = default;
};

/// Depth-k prefix that passed the capacity and value conditions.
struct MarkedState {
  Bitstring bits;
  std::int64_t profit = 0;
  std::int64_t weight = 0;
  bool operator==(const MarkedState &) const = default;
};

/// States at a given depth whose partial profit strictly exceeds
/// `threshold` and whose partial weight fits the capacity. For depth n the
/// threshold is the incumbent value itself; for depth k < n it is the
/// incumbent value minus the profit of items k..n-1.
struct MarkedSet {
  std::size_t depth = 0;
  std::int64_t threshold = 0;
  std::vector<MarkedState> states; // lexicographic by x_0 x_1 ...

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
};

inline constexpr std::size_t kDefaultMarkedCap = std::size_t{1} << 22;
inline constexpr std::size_t kDefaultDpBudget = std::size_t{1} << 30; // table bits

/// Items in density order, each included iff it still fits.
Solution greedy_solution(const KnapsackInstance &inst);

/// Exact optimum by 0/1 dynamic programming over capacity. Throws
/// ResourceError if n * (capacity + 1) exceeds `budget_cells`.
Solution optimal_solution(const KnapsackInstance &inst, std::size_t budget_cells = kDefaultDpBudget);

/// S_global(y): feasible full assignments with profit > y.
MarkedSet enumerate_global_marked(const KnapsackInstance &inst, std::int64_t y,
                                  std::size_t cap = kDefaultMarkedCap);

/// S_partial(y, k): depth-k prefixes with weight <= c and
/// profit > y - sum_{i>=k} p_i.
MarkedSet enumerate_partial_marked(const KnapsackInstance &inst, std::int64_t y, std::size_t k,
                                   std::size_t cap = kDefaultMarkedCap);

/// y - sum_{i>=k} p_i.
std::int64_t partial_threshold(const KnapsackInstance &inst, std::int64_t y, std::size_t k);

/// Memoizes marked-set enumeration for one instance across runs. Not
/// thread-safe; use one cache per worker.
class MarkedSetCache {
public:
  MarkedSetCache(const KnapsackInstance &inst, std::size_t cap = kDefaultMarkedCap)
      : inst_(inst), cap_(cap) {}

  const MarkedSet &global(std::int64_t y) { return partial(y, inst_.n()); }
  const MarkedSet &partial(std::int64_t y, std::size_t k);
  const KnapsackInstance &instance() const { return inst_; }
  std::size_t entries() const { return sets_.size(); }

private:
  const KnapsackInstance &inst_;
  std::size_t cap_;
  std::map<std::pair<std::int64_t, std::size_t>, MarkedSet> sets_;
};

} // namespace nestedaa

#endif // NESTEDAA_KSOLVE_HPP
