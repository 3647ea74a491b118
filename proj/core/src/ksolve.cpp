#include "nestedaa/ksolve.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "nestedaa/errors.hpp"

namespace nestedaa {

Solution Solution::from_bits(const KnapsackInstance &inst, Bitstring bits) {
  return Solution{bits, inst.profit_of(bits), inst.weight_of(bits)};
}

Solution greedy_solution(const KnapsackInstance &inst) {
  validate(inst);
  if (inst.n() > 64) {
    throw ParameterError("greedy_solution supports at most 64 items");
  }
  Bitstring bits;
  std::int64_t remaining = inst.capacity;
  for (std::size_t idx : ordering_permutation(inst, ItemOrdering::DensityDescending)) {
    if (inst.weights[idx] <= remaining) {
      bits = bits.with(idx, true);
      remaining -= inst.weights[idx];
    }
  }
  return Solution::from_bits(inst, bits);
}

Solution optimal_solution(const KnapsackInstance &inst, std::size_t budget_cells) {
  validate(inst);
  const std::size_t n = inst.n();
  if (n > 64) {
    throw ParameterError("optimal_solution supports at most 64 items");
  }
  const auto width = static_cast<std::size_t>(inst.capacity) + 1;
  if (width > budget_cells / n) {
    throw ResourceError("DP table of " + std::to_string(n) + " x " + std::to_string(width) +
                        " cells exceeds the memory budget; use a branch-and-bound solver for "
                        "instances with this capacity");
  }

  std::vector<std::int64_t> best(width, 0);
  std::vector<bool> take(n * width, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = static_cast<std::size_t>(inst.weights[i]);
    const std::int64_t p = inst.profits[i];
    if (w >= width) {
      continue;
    }
    for (std::size_t cap = width - 1; cap + 1 > w; --cap) {
      const std::int64_t with_item = best[cap - w] + p;
      if (with_item > best[cap]) {
        best[cap] = with_item;
        take[i * width + cap] = true;
      }
    }
  }

  Bitstring bits;
  std::size_t cap = width - 1;
  for (std::size_t i = n; i-- > 0;) {
    if (take[i * width + cap]) {
      bits = bits.with(i, true);
      cap -= static_cast<std::size_t>(inst.weights[i]);
    }
  }
  Solution sol = Solution::from_bits(inst, bits);
  if (sol.value != best[width - 1] || sol.weight > inst.capacity) {
    throw ConsistencyError("DP reconstruction disagrees with the table optimum");
  }
  return sol;
}

std::int64_t partial_threshold(const KnapsackInstance &inst, std::int64_t y, std::size_t k) {
  std::int64_t tail = 0;
  for (std::size_t i = k; i < inst.n(); ++i) {
    tail += inst.profits[i];
  }
  return y - tail;
}

namespace {

/// Depth-first enumeration of prefixes over items [0, depth), 0-branch
/// first so output is lexicographic. Subtrees whose fractional-relaxation
/// bound cannot beat the threshold are skipped.
class PrefixEnumerator {
public:
  PrefixEnumerator(const KnapsackInstance &inst, std::size_t depth, std::int64_t threshold,
                   std::size_t cap)
      : inst_(inst), depth_(depth), threshold_(threshold), cap_(cap) {
    // by_density_[i]: items in [i, depth) sorted by density, for the bound.
    by_density_.resize(depth + 1);
    for (std::size_t i = 0; i < depth; ++i) {
      auto &order = by_density_[i];
      order.resize(depth - i);
      std::iota(order.begin(), order.end(), i);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return static_cast<wide_int>(inst.profits[a]) * inst.weights[b] >
               static_cast<wide_int>(inst.profits[b]) * inst.weights[a];
      });
    }
  }

  std::vector<MarkedState> run() {
    visit(0, Bitstring{}, 0, 0);
    return std::move(out_);
  }

private:
  // Integer upper bound on the profit obtainable from items [i, depth).
  std::int64_t bound(std::size_t i, std::int64_t room) const {
    std::int64_t extra = 0;
    for (std::size_t idx : by_density_[i]) {
      const std::int64_t w = inst_.weights[idx];
      if (w <= room) {
        room -= w;
        extra += inst_.profits[idx];
      } else {
        extra += static_cast<std::int64_t>(static_cast<wide_int>(inst_.profits[idx]) * room / w);
        break;
      }
    }
    return extra;
  }

  void visit(std::size_t i, Bitstring bits, std::int64_t profit, std::int64_t weight) {
    if (i == depth_) {
      if (profit > threshold_) {
        if (out_.size() >= cap_) {
          throw MarkedSetCapError(cap_, out_.size() + 1);
        }
        out_.push_back(MarkedState{bits, profit, weight});
      }
      return;
    }
    const std::int64_t room = inst_.capacity - weight;
    if (profit + bound(i, room) <= threshold_) {
      return;
    }
    visit(i + 1, bits, profit, weight);
    if (inst_.weights[i] <= room) {
      visit(i + 1, bits.with(i, true), profit + inst_.profits[i], weight + inst_.weights[i]);
    }
  }

  const KnapsackInstance &inst_;
  std::size_t depth_;
  std::int64_t threshold_;
  std::size_t cap_;
  std::vector<std::vector<std::size_t>> by_density_;
  std::vector<MarkedState> out_;
};

} // namespace

MarkedSet enumerate_global_marked(const KnapsackInstance &inst, std::int64_t y, std::size_t cap) {
  return enumerate_partial_marked(inst, y, inst.n(), cap);
}

MarkedSet enumerate_partial_marked(const KnapsackInstance &inst, std::int64_t y, std::size_t k,
                                   std::size_t cap) {
  validate(inst);
  if (k < 1 || k > inst.n()) {
    throw ParameterError("depth k must lie in [1, n]");
  }
  if (inst.n() > kMaxItems) {
    throw ParameterError("enumeration supports at most " + std::to_string(kMaxItems) + " items");
  }
  MarkedSet set;
  set.depth = k;
  set.threshold = partial_threshold(inst, y, k);
  set.states = PrefixEnumerator(inst, k, set.threshold, cap).run();
  return set;
}

const MarkedSet &MarkedSetCache::partial(std::int64_t y, std::size_t k) {
  const auto key = std::make_pair(y, k);
  auto it = sets_.find(key);
  if (it == sets_.end()) {
    it = sets_.emplace(key, enumerate_partial_marked(inst_, y, k, cap_)).first;
  }
  return it->second;
}

} // namespace nestedaa
