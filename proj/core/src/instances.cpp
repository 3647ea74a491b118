#include "nestedaa/instances.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "json.hpp"

#include "nestedaa/errors.hpp"
#include "nestedaa/rng.hpp"

namespace nestedaa {

std::string Bitstring::to_string(std::size_t len) const {
  std::string s(len, '0');
  for (std::size_t i = 0; i < len; ++i) {
    if (test(i)) {
      s[i] = '1';
    }
  }
  return s;
}

bool lexicographic_less(Bitstring a, Bitstring b) {
  const std::uint64_t diff = a.mask ^ b.mask;
  if (diff == 0) {
    return false;
  }
  const int j = std::countr_zero(diff);
  return !a.test(static_cast<std::size_t>(j));
}

std::string_view to_string(CorrelationType t) {
  switch (t) {
  case CorrelationType::Uncorrelated:
    return "uncorrelated";
  case CorrelationType::WeaklyCorrelated:
    return "weakly_correlated";
  case CorrelationType::StronglyCorrelated:
    return "strongly_correlated";
  }
  return "unknown";
}

std::string_view to_string(ItemOrdering o) {
  switch (o) {
  case ItemOrdering::AsGenerated:
    return "as_generated";
  case ItemOrdering::DensityDescending:
    return "density_descending";
  case ItemOrdering::ValueDescending:
    return "value_descending";
  }
  return "unknown";
}

CorrelationType parse_correlation(std::string_view s) {
  if (s == "uncorrelated" || s == "unc") {
    return CorrelationType::Uncorrelated;
  }
  if (s == "weakly_correlated" || s == "weak") {
    return CorrelationType::WeaklyCorrelated;
  }
  if (s == "strongly_correlated" || s == "strong") {
    return CorrelationType::StronglyCorrelated;
  }
  throw ParameterError("unknown correlation type: " + std::string(s));
}

ItemOrdering parse_ordering(std::string_view s) {
  if (s == "as_generated") {
    return ItemOrdering::AsGenerated;
  }
  if (s == "density_descending" || s == "density") {
    return ItemOrdering::DensityDescending;
  }
  if (s == "value_descending" || s == "value") {
    return ItemOrdering::ValueDescending;
  }
  throw ParameterError("unknown item ordering: " + std::string(s));
}

std::int64_t KnapsackInstance::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
}

std::int64_t KnapsackInstance::total_profit() const {
  return std::accumulate(profits.begin(), profits.end(), std::int64_t{0});
}

std::int64_t KnapsackInstance::weight_of(Bitstring x) const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (x.test(i)) {
      total += weights[i];
    }
  }
  return total;
}

std::int64_t KnapsackInstance::profit_of(Bitstring x) const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < profits.size(); ++i) {
    if (x.test(i)) {
      total += profits[i];
    }
  }
  return total;
}

void validate(const KnapsackInstance &inst) {
  if (inst.weights.size() != inst.profits.size()) {
    throw ParameterError("weights and profits differ in length");
  }
  if (inst.weights.empty()) {
    throw ParameterError("instance has no items");
  }
  if (inst.capacity < 0) {
    throw ParameterError("negative capacity");
  }
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (inst.weights[i] <= 0 || inst.profits[i] <= 0) {
      throw ParameterError("weights and profits must be positive (item " + std::to_string(i) + ")");
    }
  }
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) {
    throw ParameterError("zero denominator");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return Rational{num / g, den / g};
}

std::strong_ordering Rational::operator<=>(const Rational &o) const {
  const wide_int lhs = static_cast<wide_int>(num) * o.den;
  const wide_int rhs = static_cast<wide_int>(o.num) * den;
  if (lhs < rhs) {
    return std::strong_ordering::less;
  }
  if (lhs > rhs) {
    return std::strong_ordering::greater;
  }
  return std::strong_ordering::equal;
}

KnapsackInstance generate_instance(const GeneratorParams &params) {
  if (params.n < 1) {
    throw ParameterError("n must be at least 1");
  }
  if (params.range_r < 1) {
    throw ParameterError("range must be at least 1");
  }
  if (params.tightness_s < 1) {
    throw ParameterError("tightness S must be at least 1");
  }
  if (params.index_i < 1) {
    throw ParameterError("instance index must be at least 1");
  }
  if (params.corr_type == CorrelationType::WeaklyCorrelated && params.range_r < 10) {
    throw ParameterError("weakly correlated instances need range >= 10");
  }

  CounterRng rng(fold_key({0x4B4E4150ULL, params.n, static_cast<std::uint64_t>(params.range_r),
                           static_cast<std::uint64_t>(params.corr_type),
                           static_cast<std::uint64_t>(params.index_i)}));

  const auto r = static_cast<std::uint64_t>(params.range_r);
  const std::int64_t spread = params.range_r / 10;

  KnapsackInstance inst;
  inst.weights.resize(params.n);
  inst.profits.resize(params.n);
  for (std::size_t j = 0; j < params.n; ++j) {
    const auto w = static_cast<std::int64_t>(rng.uniform_int(1, r));
    std::int64_t p = 0;
    switch (params.corr_type) {
    case CorrelationType::Uncorrelated:
      p = static_cast<std::int64_t>(rng.uniform_int(1, r));
      break;
    case CorrelationType::WeaklyCorrelated: {
      const std::int64_t lo = std::max<std::int64_t>(1, w - spread);
      const std::int64_t hi = w + spread;
      p = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(lo),
                                                    static_cast<std::uint64_t>(hi)));
      break;
    }
    case CorrelationType::StronglyCorrelated:
      p = w + 10;
      break;
    }
    inst.weights[j] = w;
    inst.profits[j] = p;
  }

  const std::int64_t sum_w = inst.total_weight();
  const std::int64_t denom = params.tightness_s + 1;
  const std::int64_t scaled = (params.index_i * sum_w + denom - 1) / denom;
  inst.capacity = std::max(scaled, params.range_r + 1);
  inst.corr_type = params.corr_type;
  inst.range_r = params.range_r;
  inst.tightness_s = params.tightness_s;
  inst.index_i = params.index_i;
  inst.ordering = ItemOrdering::AsGenerated;
  return inst;
}

InstanceMetrics compute_metrics(const KnapsackInstance &inst) {
  InstanceMetrics m;
  m.total_weight = inst.total_weight();
  m.total_profit = inst.total_profit();
  if (m.total_weight <= 0) {
    throw ParameterError("total weight must be positive");
  }
  m.capweight = Rational::make(inst.capacity, m.total_weight);
  return m;
}

std::vector<KnapsackInstance> dedup_instances(const std::vector<KnapsackInstance> &batch) {
  using Key = std::tuple<std::vector<std::int64_t>, std::vector<std::int64_t>, std::int64_t>;
  std::set<Key> seen;
  std::vector<KnapsackInstance> out;
  for (const auto &inst : batch) {
    if (seen.emplace(inst.weights, inst.profits, inst.capacity).second) {
      out.push_back(inst);
    }
  }
  return out;
}

std::vector<std::size_t> ordering_permutation(const KnapsackInstance &inst, ItemOrdering ordering) {
  std::vector<std::size_t> perm(inst.n());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  switch (ordering) {
  case ItemOrdering::AsGenerated:
    break;
  case ItemOrdering::DensityDescending:
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      // p_a / w_a > p_b / w_b without division.
      return static_cast<wide_int>(inst.profits[a]) * inst.weights[b] >
             static_cast<wide_int>(inst.profits[b]) * inst.weights[a];
    });
    break;
  case ItemOrdering::ValueDescending:
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return inst.profits[a] > inst.profits[b]; });
    break;
  }
  return perm;
}

KnapsackInstance reorder_items(const KnapsackInstance &inst, ItemOrdering ordering) {
  const auto perm = ordering_permutation(inst, ordering);
  KnapsackInstance out = inst;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.weights[j] = inst.weights[perm[j]];
    out.profits[j] = inst.profits[perm[j]];
  }
  out.ordering = ordering;
  return out;
}

std::string to_json_line(const KnapsackInstance &inst) {
  nlohmann::ordered_json j;
  j["n"] = inst.n();
  j["weights"] = inst.weights;
  j["profits"] = inst.profits;
  j["capacity"] = inst.capacity;
  j["corr_type"] = to_string(inst.corr_type);
  j["range_r"] = inst.range_r;
  j["tightness_s"] = inst.tightness_s;
  j["index_i"] = inst.index_i;
  j["ordering"] = to_string(inst.ordering);
  return j.dump();
}

KnapsackInstance from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParameterError(std::string("malformed instance JSON: ") + e.what());
  }
  KnapsackInstance inst;
  try {
    inst.weights = j.at("weights").get<std::vector<std::int64_t>>();
    inst.profits = j.at("profits").get<std::vector<std::int64_t>>();
    inst.capacity = j.at("capacity").get<std::int64_t>();
    inst.corr_type = parse_correlation(j.at("corr_type").get<std::string>());
    inst.range_r = j.at("range_r").get<std::int64_t>();
    inst.tightness_s = j.at("tightness_s").get<std::int64_t>();
    inst.index_i = j.at("index_i").get<std::int64_t>();
    inst.ordering = parse_ordering(j.at("ordering").get<std::string>());
    if (j.at("n").get<std::size_t>() != inst.weights.size()) {
      throw ParameterError("field n does not match the item count");
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParameterError(std::string("invalid instance record: ") + e.what());
  }
  validate(inst);
  return inst;
}

void write_instances(std::ostream &os, const std::vector<KnapsackInstance> &batch) {
  for (const auto &inst : batch) {
    os << to_json_line(inst) << '\n';
  }
}

std::vector<KnapsackInstance> read_instances(std::istream &is) {
  std::vector<KnapsackInstance> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    out.push_back(from_json_line(line));
  }
  return out;
}

} // namespace nestedaa
