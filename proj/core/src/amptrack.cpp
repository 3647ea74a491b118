#include "nestedaa/amptrack.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nestedaa/errors.hpp"

namespace nestedaa {

BiasConfig BiasConfig::make(const KnapsackInstance &inst, double bias_b, Bitstring reference) {
  if (!(bias_b >= 0.0) || !std::isfinite(bias_b)) {
    throw ParameterError("bias must be a finite non-negative number");
  }
  if (inst.n() < 64 && (reference.mask >> inst.n()) != 0) {
    throw ParameterError("reference sets bits beyond the item count");
  }
  if (inst.weight_of(reference) > inst.capacity) {
    throw ParameterError("reference solution is infeasible");
  }
  return BiasConfig{bias_b, reference};
}

double MarkedEnsemble::weight() const {
  double total = 0.0;
  for (const auto &s : states) {
    total += s.amplitude * s.amplitude;
  }
  return total;
}

double marked_angle(double squared_norm) {
  return std::asin(std::sqrt(std::clamp(squared_norm, 0.0, 1.0)));
}

double qtg_step_factor(const KnapsackInstance &inst, const BiasConfig &bias,
                       std::int64_t prefix_weight, std::size_t i, bool x_i) {
  if (prefix_weight + inst.weights[i] > inst.capacity) {
    return x_i ? 0.0 : 1.0;
  }
  const double denom = bias.bias_b + 2.0;
  if (x_i == bias.reference.test(i)) {
    return std::sqrt((bias.bias_b + 1.0) / denom);
  }
  return std::sqrt(1.0 / denom);
}

namespace {

// Multiplies step factors for items [from, to) starting at prefix_weight.
double step_product(const KnapsackInstance &inst, const BiasConfig &bias, Bitstring x,
                    std::size_t from, std::size_t to, std::int64_t prefix_weight) {
  double amp = 1.0;
  for (std::size_t i = from; i < to; ++i) {
    const bool xi = x.test(i);
    amp *= qtg_step_factor(inst, bias, prefix_weight, i, xi);
    if (amp == 0.0) {
      return 0.0;
    }
    if (xi) {
      prefix_weight += inst.weights[i];
    }
  }
  return amp;
}

} // namespace

double partial_amplitude(const KnapsackInstance &inst, const BiasConfig &bias, Bitstring x,
                         std::size_t k) {
  if (k > inst.n()) {
    throw ParameterError("prefix length exceeds item count");
  }
  return step_product(inst, bias, x, 0, k, 0);
}

MarkedEnsemble build_partial_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                                      const MarkedSet &marked) {
  MarkedEnsemble ens;
  ens.depth = marked.depth;
  ens.states.reserve(marked.size());
  for (const auto &s : marked.states) {
    ens.states.push_back(TrackedState{s.bits, partial_amplitude(inst, bias, s.bits, marked.depth)});
  }
  ens.theta = marked_angle(ens.weight());
  return ens;
}

double rotation_factor(double theta, std::uint64_t r) {
  const double s = std::sin(theta);
  if (s == 0.0) {
    return 0.0;
  }
  return std::sin(static_cast<double>(2 * r + 1) * theta) / s;
}

MarkedEnsemble apply_rotation(const MarkedEnsemble &ens, std::uint64_t r) {
  MarkedEnsemble out = ens;
  const double factor = rotation_factor(ens.theta, r);
  for (auto &s : out.states) {
    s.amplitude *= factor;
  }
  return out;
}

MarkedEnsemble extend_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                               const MarkedEnsemble &inner, const MarkedSet &global_marked) {
  const std::size_t k = inner.depth;
  if (global_marked.depth != inst.n() || k > inst.n()) {
    throw ParameterError("extend_ensemble needs a depth-n marked set and inner depth <= n");
  }
  std::unordered_map<Bitstring, double> prefix_amp;
  prefix_amp.reserve(inner.states.size() * 2);
  for (const auto &s : inner.states) {
    prefix_amp.emplace(s.bits, s.amplitude);
  }

  MarkedEnsemble out;
  out.depth = inst.n();
  out.states.reserve(global_marked.size());
  for (const auto &g : global_marked.states) {
    const auto it = prefix_amp.find(g.bits.prefix(k));
    if (it == prefix_amp.end()) {
      throw ConsistencyError("globally marked state " + g.bits.to_string(inst.n()) +
                             " has no marked depth-" + std::to_string(k) + " prefix");
    }
    const std::int64_t prefix_weight = inst.weight_of(g.bits.prefix(k));
    const double amp = it->second * step_product(inst, bias, g.bits, k, inst.n(), prefix_weight);
    out.states.push_back(TrackedState{g.bits, amp});
  }
  out.theta = marked_angle(out.weight());
  return out;
}

double success_probability(const MarkedEnsemble &ens, std::uint64_t r) {
  const double s = std::sin(static_cast<double>(2 * r + 1) * ens.theta);
  return s * s;
}

} // namespace nestedaa
