#include "nestedaa/nested.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "nestedaa/errors.hpp"
#include "nestedaa/ksolve.hpp"

namespace nestedaa {

DepthPolicy DepthPolicy::parse(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ParameterError("depth policy must be fixed:K or rvtr:TARGET, got '" + text + "'");
  }
  const std::string mode = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  try {
    if (mode == "fixed") {
      const long k = std::stol(arg);
      if (k < 1) {
        throw ParameterError("fixed depth must be >= 1");
      }
      return fixed(static_cast<std::size_t>(k));
    }
    if (mode == "rvtr") {
      const double t = std::stod(arg);
      if (!(t > 0.0 && t < 1.0)) {
        throw ParameterError("RVTR target must lie in (0, 1)");
      }
      return rvtr_target(t);
    }
  } catch (const std::logic_error &e) {
    if (dynamic_cast<const ParameterError *>(&e) != nullptr) {
      throw;
    }
    throw ParameterError("malformed depth policy argument '" + arg + "'");
  }
  throw ParameterError("unknown depth policy mode '" + mode + "'");
}

std::string DepthPolicy::to_string() const {
  if (mode == Mode::Fixed) {
    return "fixed:" + std::to_string(k);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "rvtr:%g", target);
  return buf;
}

double rvtr(const KnapsackInstance &inst, std::size_t k, std::int64_t y) {
  if (k > inst.n()) {
    throw ParameterError("depth exceeds item count");
  }
  if (y <= 0) {
    throw ParameterError("RVTR is undefined for a non-positive incumbent value");
  }
  std::int64_t tail = 0;
  for (std::size_t i = k; i < inst.n(); ++i) {
    tail += inst.profits[i];
  }
  return static_cast<double>(tail) / static_cast<double>(y);
}

std::size_t choose_depth(const KnapsackInstance &inst, std::int64_t y, const DepthPolicy &policy) {
  const std::size_t n = inst.n();
  if (n < 2) {
    throw ParameterError("no valid depth for fewer than two items");
  }
  if (policy.mode == DepthPolicy::Mode::Fixed) {
    if (policy.k < 1 || policy.k > n - 1) {
      throw ParameterError("fixed depth must lie in [1, n-1]");
    }
    return policy.k;
  }
  if (y <= 0) {
    throw ParameterError("RVTR depth selection needs a positive incumbent value");
  }
  std::size_t best_k = 1;
  double best_dist = std::abs(rvtr(inst, 1, y) - policy.target);
  for (std::size_t k = 2; k <= n - 1; ++k) {
    const double dist = std::abs(rvtr(inst, k, y) - policy.target);
    if (dist < best_dist) {
      best_dist = dist;
      best_k = k;
    }
  }
  return best_k;
}

CpBounds clopper_pearson(std::size_t successes, std::size_t trials, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ParameterError("confidence must lie in (0, 1)");
  }
  if (trials < 1 || successes > trials) {
    throw ParameterError("need 0 <= successes <= trials and trials >= 1");
  }
  const double alpha = 1.0 - confidence;
  const auto s = static_cast<double>(successes);
  const auto t = static_cast<double>(trials);
  CpBounds b;
  b.confidence = confidence;
  b.p_lower = successes == 0 ? 0.0 : boost::math::ibeta_inv(s, t - s + 1.0, alpha / 2.0);
  b.p_upper = successes == trials ? 1.0 : boost::math::ibeta_inv(s + 1.0, t - s, 1.0 - alpha / 2.0);
  return b;
}

IifResult iif_on_ensemble(const MarkedEnsemble &partial, double lambda, std::size_t shots,
                          CounterRng &rng) {
  if (shots < 1) {
    throw ParameterError("IIF needs at least one validation shot");
  }
  if (!(lambda > 1.0)) {
    throw ParameterError("lambda must exceed 1");
  }
  const std::size_t k = partial.depth;
  IifResult res;
  res.theta_k = partial.theta;
  if (partial.empty() || partial.theta == 0.0) {
    res.degenerate = true;
    return res;
  }
  const double kd = static_cast<double>(k);
  if (success_probability(partial, 0) >= 1.0 - 1e-12) {
    // Every shot lands in the marked subspace at r_in = 0.
    res.degenerate = true;
    res.attempts = 1;
    res.measurements = shots;
    res.cost = static_cast<double>(shots) * kd;
    res.success_probability = success_probability(partial, 0);
    return res;
  }

  const double m_cap = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(k, 1000)));
  double m = 1.0;
  std::size_t success = 0;
  std::uint64_t best_r = 0;
  double best_p = -1.0;
  while (success != shots) {
    if (res.attempts == kIifIterationGuard) {
      res.r_in = best_r;
      res.success_probability = best_p;
      res.degenerate = true;
      res.guard_hit = true;
      return res;
    }
    ++res.attempts;
    const std::uint64_t r_in = sample_rotation_count(m, rng);
    const double p = success_probability(partial, r_in);
    if (p > best_p) {
      best_p = p;
      best_r = r_in;
    }
    res.r_in = r_in;
    res.success_probability = p;
    success = 0;
    std::size_t total = 0;
    do {
      ++total;
      ++res.measurements;
      res.cost += kd * static_cast<double>(2 * r_in + 1);
      if (rng.uniform01() < p) {
        ++success;
      }
    } while (total < shots && success == total);
    m = std::min(lambda * m, m_cap);
  }
  return res;
}

IifResult iif(const KnapsackInstance &inst, const BiasConfig &bias, std::size_t k,
              const Incumbent &incumbent, double lambda, std::size_t shots, CounterRng &rng,
              CostLedger &ledger, std::size_t marked_cap) {
  if (k < 1 || k + 1 > inst.n()) {
    throw ParameterError("IIF depth must lie in [1, n-1]");
  }
  const MarkedEnsemble partial =
      build_partial_ensemble(inst, bias, enumerate_partial_marked(inst, incumbent.value, k, marked_cap));
  IifResult res = iif_on_ensemble(partial, lambda, shots, rng);
  ledger.add_inner(k, res.r_in, res.cost);
  return res;
}

MarkedEnsemble nested_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                               const MarkedEnsemble &partial, std::uint64_t r_in,
                               const MarkedSet &global_marked) {
  return extend_ensemble(inst, bias, apply_rotation(partial, r_in), global_marked);
}

double nested_step_cost(std::size_t n, std::size_t k, std::uint64_t r_in, std::uint64_t r) {
  return static_cast<double>((2 * r + 1) * (n + 2 * r_in * k));
}

NestedResult nested_gas(const KnapsackInstance &inst, const BiasConfig &bias,
                        const NestedOptions &options, CounterRng &rng) {
  const RunOptions &run = options.run;
  if (!(run.budget > 0.0)) {
    throw ParameterError("budget must be positive");
  }
  if (!(run.lambda > 1.0)) {
    throw ParameterError("lambda must exceed 1");
  }
  const std::size_t n = inst.n();
  if (n < 2) {
    throw ParameterError("nested GAS needs at least two items");
  }

  NestedResult res;
  res.incumbent = Incumbent::from(starting_solution(inst, run, rng));
  res.trajectory.push_back({0.0, res.incumbent.value});

  QSearchState qs{1.0, run.lambda};
  std::optional<std::int64_t> y_prev;
  MarkedSampler sampler;
  std::size_t k = 0;
  std::uint64_t r_in = 0;

  while (res.ledger.total < run.budget) {
    if (res.steps == run.max_steps) {
      res.hit_step_limit = true;
      break;
    }
    const std::int64_t y = res.incumbent.value;
    if (!y_prev || *y_prev != y) {
      // A zero incumbent leaves RVTR undefined; use the deepest cut.
      k = (options.policy.mode == DepthPolicy::Mode::RvtrTarget && y <= 0)
              ? n - 1
              : choose_depth(inst, y, options.policy);
      MarkedSet scratch;
      const MarkedEnsemble partial =
          build_partial_ensemble(inst, bias, marked_set(inst, y, k, run, scratch));
      const IifResult found = iif_on_ensemble(partial, run.lambda, options.shots, rng);
      res.ledger.add_inner(k, found.r_in, found.cost);
      res.iif_calls.push_back(found);
      res.depths.push_back(k);
      r_in = found.r_in;
      sampler = MarkedSampler(
          nested_ensemble(inst, bias, partial, r_in, marked_set(inst, y, n, run, scratch)));
    }
    y_prev = y;

    const QSearchDraw draw = qsearch_draw(sampler, qs, rng);
    res.ledger.add_outer(k, draw.r, r_in, nested_step_cost(n, k, r_in, draw.r));
    ++res.steps;
    // A step that ends past the budget is charged but its outcome is discarded.
    const bool accepted = draw.found && res.ledger.total <= run.budget;
    if (accepted) {
      res.incumbent = Incumbent::from(Solution::from_bits(inst, *draw.found));
      ++res.improvements;
    }
    res.trajectory.push_back({res.ledger.total, res.incumbent.value});
    if (accepted && run.stop_after_improvements != 0 &&
        res.improvements >= run.stop_after_improvements) {
      break;
    }
  }
  return res;
}

double relative_cost(double c_base, double c_nested) {
  if (!(c_base > 0.0) || !(c_nested > 0.0)) {
    throw ParameterError("relative cost is undefined for non-positive costs");
  }
  return std::log2(c_base / c_nested);
}

double budget(double c_const, std::size_t n, double t_exp) {
  if (!(c_const > 0.0) || n < 1) {
    throw ParameterError("budget needs C > 0 and n >= 1");
  }
  return c_const * std::pow(static_cast<double>(n), t_exp);
}

} // namespace nestedaa
