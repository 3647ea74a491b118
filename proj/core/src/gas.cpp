#include "nestedaa/gas.hpp"

#include <algorithm>
#include <cmath>

#include "nestedaa/errors.hpp"

namespace nestedaa {

void CostLedger::add_inner(std::size_t k, std::uint64_t r_in, double cost) {
  inner += cost;
  total += cost;
  steps.push_back(LedgerEntry{LedgerEntry::Kind::Inner, 0, r_in, k, cost});
}

void CostLedger::add_outer(std::size_t k, std::uint64_t r, std::uint64_t r_in, double cost) {
  outer += cost;
  total += cost;
  steps.push_back(LedgerEntry{LedgerEntry::Kind::Outer, r, r_in, k, cost});
}

std::uint64_t sample_rotation_count(double m, CounterRng &rng) {
  if (!(m >= 1.0)) {
    throw ParameterError("rotation bound m must be >= 1");
  }
  const auto upper = static_cast<std::uint64_t>(std::ceil(std::sqrt(m)));
  return rng.uniform_int(0, upper - 1);
}

MarkedSampler::MarkedSampler(const MarkedEnsemble &ens) : theta_(ens.theta) {
  bits_.reserve(ens.states.size());
  cumulative_.reserve(ens.states.size());
  double acc = 0.0;
  for (const auto &s : ens.states) {
    const double w = s.amplitude * s.amplitude;
    if (w <= 0.0) {
      continue;
    }
    acc += w;
    bits_.push_back(s.bits);
    cumulative_.push_back(acc);
  }
}

std::optional<Bitstring> MarkedSampler::measure(std::uint64_t r, CounterRng &rng) const {
  if (cumulative_.empty()) {
    return std::nullopt;
  }
  const double s = std::sin(static_cast<double>(2 * r + 1) * theta_);
  if (!(rng.uniform01() < s * s)) {
    return std::nullopt;
  }
  const double u = rng.uniform01() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) {
    --it;
  }
  return bits_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::optional<Solution> emulate_measurement(const KnapsackInstance &inst, const MarkedEnsemble &ens,
                                            std::uint64_t r, CounterRng &rng) {
  const auto hit = MarkedSampler(ens).measure(r, rng);
  if (!hit) {
    return std::nullopt;
  }
  return Solution::from_bits(inst, *hit);
}

MarkedEnsemble baseline_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                                 std::int64_t y, std::size_t marked_cap) {
  return build_partial_ensemble(inst, bias, enumerate_global_marked(inst, y, marked_cap));
}

QSearchDraw qsearch_draw(const MarkedSampler &sampler, QSearchState &qs, CounterRng &rng) {
  QSearchDraw draw;
  draw.r = sample_rotation_count(qs.m, rng);
  draw.found = sampler.measure(draw.r, rng);
  if (draw.found) {
    qs.m = 1.0;
  } else {
    qs.m *= qs.lambda;
  }
  return draw;
}

QSearchResult qsearch_step(const KnapsackInstance &inst, const BiasConfig &bias,
                           const Incumbent &incumbent, QSearchState qs, CounterRng &rng,
                           CostLedger &ledger) {
  const MarkedSampler sampler(baseline_ensemble(inst, bias, incumbent.value));
  const QSearchDraw draw = qsearch_draw(sampler, qs, rng);
  ledger.add_outer(0, draw.r, 0, static_cast<double>(inst.n() * (2 * draw.r + 1)));
  QSearchResult out{incumbent, qs, draw.r};
  if (draw.found) {
    out.incumbent = Incumbent::from(Solution::from_bits(inst, *draw.found));
  }
  return out;
}

Solution uniform_feasible_solution(const KnapsackInstance &inst, CounterRng &rng) {
  const std::size_t n = inst.n();
  if (n > kMaxItems) {
    throw ParameterError("uniform sampling supports at most 62 items");
  }
  const auto width = static_cast<std::size_t>(inst.capacity) + 1;
  // count[i * width + c]: subsets of items i..n-1 with weight <= c.
  std::vector<std::uint64_t> count((n + 1) * width, 0);
  std::fill(count.begin() + static_cast<std::ptrdiff_t>(n * width), count.end(), 1);
  for (std::size_t i = n; i-- > 0;) {
    const auto w = static_cast<std::size_t>(inst.weights[i]);
    for (std::size_t c = 0; c < width; ++c) {
      std::uint64_t v = count[(i + 1) * width + c];
      if (w <= c) {
        v += count[(i + 1) * width + c - w];
      }
      count[i * width + c] = v;
    }
  }
  Bitstring bits;
  std::size_t room = width - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = static_cast<std::size_t>(inst.weights[i]);
    if (w > room) {
      continue;
    }
    const std::uint64_t with_item = count[(i + 1) * width + room - w];
    if (rng.uniform_int(0, count[i * width + room] - 1) < with_item) {
      bits = bits.with(i, true);
      room -= w;
    }
  }
  return Solution::from_bits(inst, bits);
}

Solution starting_solution(const KnapsackInstance &inst, const RunOptions &options, CounterRng &rng) {
  if (options.start_solution) {
    if (options.start_solution->weight > inst.capacity) {
      throw ParameterError("start solution is infeasible");
    }
    return *options.start_solution;
  }
  if (options.start == StartMode::UniformRandom) {
    return uniform_feasible_solution(inst, rng);
  }
  return greedy_solution(inst);
}

const MarkedSet &marked_set(const KnapsackInstance &inst, std::int64_t y, std::size_t k,
                            const RunOptions &options, MarkedSet &scratch) {
  if (options.cache != nullptr) {
    if (&options.cache->instance() != &inst && !(options.cache->instance() == inst)) {
      throw ParameterError("marked-set cache belongs to a different instance");
    }
    return options.cache->partial(y, k);
  }
  scratch = enumerate_partial_marked(inst, y, k, options.marked_cap);
  return scratch;
}

GasResult baseline_gas(const KnapsackInstance &inst, const BiasConfig &bias,
                       const RunOptions &options, CounterRng &rng) {
  if (!(options.budget > 0.0)) {
    throw ParameterError("budget must be positive");
  }
  if (!(options.lambda > 1.0)) {
    throw ParameterError("lambda must exceed 1");
  }
  GasResult res;
  res.incumbent = Incumbent::from(starting_solution(inst, options, rng));
  res.trajectory.push_back({0.0, res.incumbent.value});

  QSearchState qs{1.0, options.lambda};
  const auto n = inst.n();
  MarkedSet scratch;
  MarkedSampler sampler(
      build_partial_ensemble(inst, bias, marked_set(inst, res.incumbent.value, n, options, scratch)));

  while (res.ledger.total < options.budget) {
    if (res.steps == options.max_steps) {
      res.hit_step_limit = true;
      break;
    }
    const QSearchDraw draw = qsearch_draw(sampler, qs, rng);
    res.ledger.add_outer(0, draw.r, 0, static_cast<double>(n * (2 * draw.r + 1)));
    ++res.steps;
    // A step that ends past the budget is charged but its outcome is discarded.
    const bool accepted = draw.found && res.ledger.total <= options.budget;
    if (accepted) {
      res.incumbent = Incumbent::from(Solution::from_bits(inst, *draw.found));
      ++res.improvements;
    }
    res.trajectory.push_back({res.ledger.total, res.incumbent.value});
    if (accepted) {
      if (options.stop_after_improvements != 0 &&
          res.improvements >= options.stop_after_improvements) {
        break;
      }
      sampler = MarkedSampler(build_partial_ensemble(
          inst, bias, marked_set(inst, res.incumbent.value, n, options, scratch)));
    }
  }
  return res;
}

} // namespace nestedaa
