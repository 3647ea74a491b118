#include "nestedaa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "nestedaa/errors.hpp"

namespace nestedaa {

namespace {

// Experiment tags folded into every RNG key.
constexpr std::uint64_t kTagCapweight = 0xC0;
constexpr std::uint64_t kTagRvtr = 0xC1;
constexpr std::uint64_t kTagOptgap = 0xC2;
constexpr std::uint64_t kTagRun = 0xC3;
constexpr std::uint64_t kTagTrajectory = 0xC4;

constexpr std::size_t kFirstImprovementSteps = 2'000'000;

double capweight_of(const KnapsackInstance &inst) {
  const Rational cw = compute_metrics(inst).capweight;
  return quantize(static_cast<double>(cw.num) / static_cast<double>(cw.den));
}

// Per-instance quantities every driver needs.
struct InstanceContext {
  const KnapsackInstance *inst = nullptr;
  std::string id;
  std::uint64_t key = 0;
  double capweight = 0.0;
  Solution greedy;
  Solution optimum;
  BiasConfig bias;
  double alpha_greedy = 0.0;

  bool greedy_optimal() const { return greedy.value == optimum.value; }
};

InstanceContext make_context(const KnapsackInstance &inst, const ProtocolParams &params) {
  InstanceContext ctx;
  ctx.inst = &inst;
  ctx.id = instance_id(inst);
  ctx.key = instance_key(inst);
  ctx.capweight = capweight_of(inst);
  ctx.greedy = greedy_solution(inst);
  ctx.optimum = optimal_solution(inst);
  ctx.bias = BiasConfig::make(inst, params.bias_for(inst.n()), ctx.greedy.bits);
  ctx.alpha_greedy = ctx.optimum.value > 0 ? approximation_ratio(ctx.greedy.value, ctx.optimum.value)
                                           : 1.0;
  return ctx;
}

RunRecord base_record(const InstanceContext &ctx, Protocol protocol, std::uint64_t seed,
                      const ProtocolParams &params) {
  const KnapsackInstance &inst = *ctx.inst;
  RunRecord r;
  r.instance_id = ctx.id;
  r.n = inst.n();
  r.corr_type = inst.corr_type;
  r.range_r = inst.range_r;
  r.tightness_s = inst.tightness_s;
  r.capweight = ctx.capweight;
  r.protocol = protocol;
  r.seed = seed;
  r.bias_b = quantize(ctx.bias.bias_b);
  r.lambda = quantize(params.lambda);
  r.shots = params.shots;
  r.y_greedy = ctx.greedy.value;
  r.y_star = ctx.optimum.value;
  return r;
}

void set_outcome(RunRecord &r, const InstanceContext &ctx, std::int64_t y_final) {
  r.y_final = y_final;
  if (ctx.optimum.value <= 0) {
    r.alpha = 1.0;
    r.gamma = 1.0;
    return;
  }
  const double alpha = approximation_ratio(y_final, ctx.optimum.value);
  r.alpha = quantize(alpha);
  r.gamma = quantize(optimality_gap(alpha, ctx.alpha_greedy).gamma);
}

void set_costs(RunRecord &r, double inner, double outer) {
  r.c_inner = quantize(inner);
  r.c_outer = quantize(outer);
  r.c_total = quantize(inner + outer);
}

double mean_of(const std::vector<double> &v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<std::size_t> default_depths(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t k = lo; k <= hi; ++k) {
    out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> depths_for(const SweepSpec &spec, std::size_t max_k) {
  if (spec.depths.empty()) {
    return default_depths(1, max_k);
  }
  std::vector<std::size_t> out;
  for (std::size_t k : spec.depths) {
    if (k >= 1 && k <= max_k) {
      out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Output of one instance task, merged in instance order.
struct Slot {
  std::vector<RunRecord> rows;
  std::vector<std::string> warnings;
  bool excluded = false;
};

ExperimentTable collate(std::string name, std::vector<Slot> &slots) {
  ExperimentTable table;
  table.name = std::move(name);
  for (auto &s : slots) {
    table.rows.insert(table.rows.end(), std::make_move_iterator(s.rows.begin()),
                      std::make_move_iterator(s.rows.end()));
    table.warnings.insert(table.warnings.end(), s.warnings.begin(), s.warnings.end());
    if (s.excluded) {
      ++table.excluded;
    }
  }
  return table;
}

void check_spec(const SweepSpec &spec) {
  if (spec.seeds < 1) {
    throw ParameterError("seeds per point must be at least 1");
  }
  if (spec.params.shots < 1) {
    throw ParameterError("L must be at least 1");
  }
  if (!(spec.params.lambda > 1.0)) {
    throw ParameterError("lambda must exceed 1");
  }
}

// Baseline first-improvement cost for every seed, from incumbent y.
std::vector<FirstImprovement> baseline_first(const InstanceContext &ctx, const MarkedSampler &sampler,
                                             const SweepSpec &spec, std::uint64_t tag,
                                             std::int64_t y) {
  const std::size_t n = ctx.inst->n();
  std::vector<FirstImprovement> out;
  for (std::size_t s = 0; s < spec.seeds; ++s) {
    const std::uint64_t seed = spec.params.seed + s;
    CounterRng rng(fold_key({tag, ctx.key, static_cast<std::uint64_t>(y), seed, 0, 0}));
    out.push_back(first_improvement(
        sampler, spec.params.lambda,
        [n](std::uint64_t r) { return static_cast<double>(n * (2 * r + 1)); }, rng,
        kFirstImprovementSteps));
  }
  return out;
}

struct NestedFirst {
  IifResult iif;
  FirstImprovement outer;
};

// Nested first-improvement at depth k for every seed, from incumbent y.
std::vector<NestedFirst> nested_first(const InstanceContext &ctx, MarkedSetCache &cache,
                                      const SweepSpec &spec, std::uint64_t tag, std::int64_t y,
                                      std::size_t k) {
  const KnapsackInstance &inst = *ctx.inst;
  const std::size_t n = inst.n();
  const MarkedEnsemble partial = build_partial_ensemble(inst, ctx.bias, cache.partial(y, k));
  const MarkedSet &global = cache.global(y);
  std::map<std::uint64_t, MarkedSampler> samplers;
  std::vector<NestedFirst> out;
  for (std::size_t s = 0; s < spec.seeds; ++s) {
    const std::uint64_t seed = spec.params.seed + s;
    CounterRng rng(fold_key({tag, ctx.key, static_cast<std::uint64_t>(y), seed, 1, k}));
    NestedFirst nf;
    nf.iif = iif_on_ensemble(partial, spec.params.lambda, spec.params.shots, rng);
    const std::uint64_t r_in = nf.iif.r_in;
    auto it = samplers.find(r_in);
    if (it == samplers.end()) {
      it = samplers
               .emplace(r_in, MarkedSampler(nested_ensemble(inst, ctx.bias, partial, r_in, global)))
               .first;
    }
    nf.outer = first_improvement(
        it->second, spec.params.lambda,
        [n, k, r_in](std::uint64_t r) { return nested_step_cost(n, k, r_in, r); }, rng,
        kFirstImprovementSteps);
    out.push_back(nf);
  }
  return out;
}

std::int64_t found_value(const KnapsackInstance &inst, const FirstImprovement &fi, std::int64_t y) {
  return fi.found ? inst.profit_of(*fi.found) : y;
}

std::string not_found_warning(const InstanceContext &ctx, const std::string &what) {
  return ctx.id + ": " + what + " found no improvement within " +
         std::to_string(kFirstImprovementSteps) + " steps";
}

// Rows for one incumbent y: baseline per seed, nested per (k, seed).
void first_improvement_rows(const InstanceContext &ctx, MarkedSetCache &cache, const SweepSpec &spec,
                            std::uint64_t tag, std::int64_t y, const std::vector<std::size_t> &depths,
                            bool record_start, Slot &slot) {
  const KnapsackInstance &inst = *ctx.inst;
  const MarkedSampler base_sampler(build_partial_ensemble(inst, ctx.bias, cache.global(y)));
  const auto base = baseline_first(ctx, base_sampler, spec, tag, y);
  for (std::size_t s = 0; s < base.size(); ++s) {
    RunRecord r = base_record(ctx, Protocol::Baseline, spec.params.seed + s, spec.params);
    set_costs(r, 0.0, base[s].cost);
    set_outcome(r, ctx, found_value(inst, base[s], y));
    if (record_start) {
      r.y_start = y;
    }
    if (!base[s].found) {
      slot.warnings.push_back(not_found_warning(ctx, "baseline"));
    }
    slot.rows.push_back(std::move(r));
  }
  for (std::size_t k : depths) {
    std::vector<NestedFirst> nested;
    try {
      nested = nested_first(ctx, cache, spec, tag, y, k);
    } catch (const MarkedSetCapError &e) {
      slot.warnings.push_back(ctx.id + ": depth " + std::to_string(k) + " skipped, " + e.what());
      continue;
    }
    for (std::size_t s = 0; s < nested.size(); ++s) {
      const NestedFirst &nf = nested[s];
      RunRecord r = base_record(ctx, Protocol::Nested, spec.params.seed + s, spec.params);
      r.depth_policy = DepthPolicy::fixed(k).to_string();
      r.k = k;
      r.r_in = nf.iif.r_in;
      set_costs(r, nf.iif.cost, nf.outer.cost);
      set_outcome(r, ctx, found_value(inst, nf.outer, y));
      if (base[s].cost > 0.0 && r.c_total > 0.0) {
        r.c_rel = quantize(relative_cost(base[s].cost, r.c_total));
      }
      if (record_start) {
        r.y_start = y;
        r.rvtr = quantize(rvtr(inst, k, y));
      }
      if (!nf.outer.found) {
        slot.warnings.push_back(not_found_warning(ctx, "nested k=" + std::to_string(k)));
      }
      slot.rows.push_back(std::move(r));
    }
  }
}

// Bin boundaries rounded to 12 digits so that 0 + 6 * 0.1 compares as 0.6.
double boundary(double lo, double width, std::size_t j) {
  return quantize(lo + static_cast<double>(j) * width);
}

} // namespace

std::string_view to_string(Protocol p) {
  return p == Protocol::Baseline ? "baseline" : "nested";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "baseline") {
    return Protocol::Baseline;
  }
  if (s == "nested") {
    return Protocol::Nested;
  }
  throw ParameterError("unknown protocol '" + std::string(s) + "'");
}

bool RunRecord::operator==(const RunRecord &o) const {
  return std::tie(instance_id, n, corr_type, range_r, tightness_s, capweight, protocol, seed, bias_b,
                  lambda, shots, depth_policy, k, r_in, c_total, c_inner, c_outer, y_greedy, y_final,
                  y_star, alpha, gamma, c_rel, budget_const, budget_exp, rep, y_start, rvtr) ==
         std::tie(o.instance_id, o.n, o.corr_type, o.range_r, o.tightness_s, o.capweight, o.protocol,
                  o.seed, o.bias_b, o.lambda, o.shots, o.depth_policy, o.k, o.r_in, o.c_total,
                  o.c_inner, o.c_outer, o.y_greedy, o.y_final, o.y_star, o.alpha, o.gamma, o.c_rel,
                  o.budget_const, o.budget_exp, o.rep, o.y_start, o.rvtr);
}

const std::vector<std::string> &csv_header() {
  static const std::vector<std::string> header{
      "instance_id", "n",          "corr_type", "range_r", "tightness_s", "capweight",
      "protocol",    "seed",       "bias_b",    "lambda",  "L",           "depth_policy",
      "k",           "r_in",       "C_total",   "C_inner", "C_outer",     "y_greedy",
      "y_final",     "y_star",     "alpha",     "gamma",   "c_rel",       "budget_const",
      "budget_exp",  "rep",        "y_start",   "rvtr"};
  return header;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double quantize(double v) {
  return std::strtod(format_real(v).c_str(), nullptr);
}

namespace {

template <class T> std::string cell(const std::optional<T> &v) {
  if (!v) {
    return "";
  }
  if constexpr (std::is_floating_point_v<T>) {
    return format_real(*v);
  } else {
    return std::to_string(*v);
  }
}

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_real(const std::string &s) {
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') {
    throw ParameterError("malformed number '" + s + "' in CSV");
  }
  return v;
}

std::int64_t to_int(const std::string &s) {
  char *end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    throw ParameterError("malformed integer '" + s + "' in CSV");
  }
  return v;
}

std::uint64_t to_uint(const std::string &s) {
  char *end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || s[0] == '-') {
    throw ParameterError("malformed unsigned integer '" + s + "' in CSV");
  }
  return v;
}

template <class T, class F> std::optional<T> opt(const std::string &s, F conv) {
  if (s.empty()) {
    return std::nullopt;
  }
  return static_cast<T>(conv(s));
}

} // namespace

std::string to_csv(const std::vector<RunRecord> &rows) {
  std::ostringstream os;
  const auto &h = csv_header();
  for (std::size_t i = 0; i < h.size(); ++i) {
    os << (i ? "," : "") << h[i];
  }
  os << '\n';
  for (const RunRecord &r : rows) {
    os << r.instance_id << ',' << r.n << ',' << to_string(r.corr_type) << ',' << r.range_r << ','
       << r.tightness_s << ',' << format_real(r.capweight) << ',' << to_string(r.protocol) << ','
       << r.seed << ',' << format_real(r.bias_b) << ',' << format_real(r.lambda) << ',' << r.shots
       << ',' << r.depth_policy << ',' << cell(r.k) << ',' << cell(r.r_in) << ','
       << format_real(r.c_total) << ',' << format_real(r.c_inner) << ',' << format_real(r.c_outer)
       << ',' << r.y_greedy << ',' << r.y_final << ',' << r.y_star << ',' << format_real(r.alpha)
       << ',' << format_real(r.gamma) << ',' << cell(r.c_rel) << ',' << cell(r.budget_const) << ','
       << cell(r.budget_exp) << ',' << cell(r.rep) << ',' << cell(r.y_start) << ',' << cell(r.rvtr)
       << '\n';
  }
  return os.str();
}

std::vector<RunRecord> parse_csv(const std::string &text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) {
    throw ParameterError("empty CSV");
  }
  if (split_line(line) != csv_header()) {
    throw ParameterError("unexpected CSV header");
  }
  std::vector<RunRecord> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto f = split_line(line);
    if (f.size() != csv_header().size()) {
      throw ParameterError("CSV row has " + std::to_string(f.size()) + " fields");
    }
    RunRecord r;
    r.instance_id = f[0];
    r.n = static_cast<std::size_t>(to_uint(f[1]));
    r.corr_type = parse_correlation(f[2]);
    r.range_r = to_int(f[3]);
    r.tightness_s = to_int(f[4]);
    r.capweight = to_real(f[5]);
    r.protocol = parse_protocol(f[6]);
    r.seed = to_uint(f[7]);
    r.bias_b = to_real(f[8]);
    r.lambda = to_real(f[9]);
    r.shots = static_cast<std::size_t>(to_uint(f[10]));
    r.depth_policy = f[11];
    r.k = opt<std::size_t>(f[12], to_uint);
    r.r_in = opt<std::uint64_t>(f[13], to_uint);
    r.c_total = to_real(f[14]);
    r.c_inner = to_real(f[15]);
    r.c_outer = to_real(f[16]);
    r.y_greedy = to_int(f[17]);
    r.y_final = to_int(f[18]);
    r.y_star = to_int(f[19]);
    r.alpha = to_real(f[20]);
    r.gamma = to_real(f[21]);
    r.c_rel = opt<double>(f[22], to_real);
    r.budget_const = opt<double>(f[23], to_real);
    r.budget_exp = opt<double>(f[24], to_real);
    r.rep = opt<std::size_t>(f[25], to_uint);
    r.y_start = opt<std::int64_t>(f[26], to_int);
    r.rvtr = opt<double>(f[27], to_real);
    rows.push_back(std::move(r));
  }
  return rows;
}

double approximation_ratio(std::int64_t y, std::int64_t y_star) {
  if (y_star <= 0) {
    throw ParameterError("approximation ratio needs y* > 0");
  }
  if (y < 0) {
    throw ParameterError("approximation ratio needs y >= 0");
  }
  if (y > y_star) {
    throw ConsistencyError("incumbent " + std::to_string(y) + " exceeds the optimum " +
                           std::to_string(y_star));
  }
  return static_cast<double>(y) / static_cast<double>(y_star);
}

GapValue optimality_gap(double alpha, double alpha_greedy) {
  if (alpha_greedy >= 1.0) {
    return GapValue{1.0, true};
  }
  return GapValue{(alpha - alpha_greedy) / (1.0 - alpha_greedy), false};
}

std::vector<KnapsackInstance> build_cohort(const SweepSpec &spec) {
  std::vector<KnapsackInstance> batch;
  if (!spec.cohort.explicit_instances.empty()) {
    batch = spec.cohort.explicit_instances;
  } else {
    for (std::size_t n : spec.cohort.n_values) {
      if (n < spec.n_min || n > spec.n_max) {
        continue;
      }
      for (std::int64_t s : spec.cohort.tightness) {
        for (std::int64_t i = spec.cohort.index_min; i <= spec.cohort.index_max; ++i) {
          batch.push_back(generate_instance(
              GeneratorParams{n, spec.cohort.range_r, spec.cohort.corr_type, s, i}));
        }
      }
    }
  }
  for (auto &inst : batch) {
    inst = reorder_items(inst, spec.ordering);
  }
  std::vector<KnapsackInstance> out;
  for (auto &inst : dedup_instances(batch)) {
    if (inst.n() < spec.n_min || inst.n() > spec.n_max) {
      continue;
    }
    const double cw = capweight_of(inst);
    if (cw > spec.capweight_lo && cw < spec.capweight_hi) {
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::string instance_id(const KnapsackInstance &inst) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s-n%zu-r%lld-s%lld-i%lld-%08llx",
                std::string(to_string(inst.corr_type)).c_str(), inst.n(),
                static_cast<long long>(inst.range_r), static_cast<long long>(inst.tightness_s),
                static_cast<long long>(inst.index_i),
                static_cast<unsigned long long>(instance_key(inst) & 0xFFFFFFFFULL));
  return buf;
}

std::uint64_t instance_key(const KnapsackInstance &inst) {
  std::uint64_t key = fold_key({inst.n(), static_cast<std::uint64_t>(inst.capacity)});
  for (std::size_t i = 0; i < inst.n(); ++i) {
    key = fold_key({key, static_cast<std::uint64_t>(inst.weights[i]),
                    static_cast<std::uint64_t>(inst.profits[i])});
  }
  return key;
}

SummaryRow summarize(std::vector<double> values) {
  SummaryRow row;
  row.count = values.size();
  if (values.empty()) {
    return row;
  }
  std::sort(values.begin(), values.end());
  const std::size_t c = values.size();
  row.mean = mean_of(values);
  row.median = c % 2 == 1 ? values[c / 2] : 0.5 * (values[c / 2 - 1] + values[c / 2]);
  double ss = 0.0;
  for (double v : values) {
    ss += (v - row.mean) * (v - row.mean);
  }
  row.stddev = std::sqrt(ss / static_cast<double>(c));
  return row;
}

std::vector<SummaryRow> bin_values(const std::vector<std::pair<double, double>> &points, double lo,
                                   double hi, double width, bool overflow, const std::string &group) {
  if (!(width > 0.0) || !(hi > lo)) {
    throw ParameterError("bins need width > 0 and hi > lo");
  }
  const auto bins = static_cast<std::size_t>(std::llround((hi - lo) / width));
  std::vector<std::vector<double>> members(bins + (overflow ? 1 : 0));
  for (const auto &[x, v] : points) {
    if (x < lo) {
      continue;
    }
    if (x >= boundary(lo, width, bins)) {
      if (overflow) {
        members[bins].push_back(v);
      }
      continue;
    }
    auto j = static_cast<std::size_t>(std::floor((x - lo) / width));
    j = std::min(j, bins - 1);
    while (j + 1 < bins && x >= boundary(lo, width, j + 1)) {
      ++j;
    }
    while (j > 0 && x < boundary(lo, width, j)) {
      --j;
    }
    members[j].push_back(v);
  }
  std::vector<SummaryRow> out;
  for (std::size_t j = 0; j < members.size(); ++j) {
    SummaryRow row = summarize(members[j]);
    row.group = group;
    row.lo = boundary(lo, width, j);
    row.hi = j < bins ? boundary(lo, width, j + 1) : INFINITY;
    out.push_back(row);
  }
  return out;
}

std::vector<CapweightPoint> capweight_points(const std::vector<RunRecord> &rows) {
  struct Acc {
    double capweight = 0.0;
    std::vector<double> base;
    std::map<std::size_t, std::vector<double>> nested;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  for (const RunRecord &r : rows) {
    auto [it, fresh] = acc.try_emplace(r.instance_id);
    if (fresh) {
      order.push_back(r.instance_id);
      it->second.capweight = r.capweight;
    }
    if (r.protocol == Protocol::Baseline) {
      it->second.base.push_back(r.c_total);
    } else if (r.k) {
      it->second.nested[*r.k].push_back(r.c_total);
    }
  }
  std::vector<CapweightPoint> out;
  for (const auto &id : order) {
    const Acc &a = acc.at(id);
    if (a.base.empty() || a.nested.empty()) {
      continue;
    }
    const double base = mean_of(a.base);
    CapweightPoint p{id, a.capweight, -INFINITY, 0};
    for (const auto &[k, costs] : a.nested) {
      const double c = relative_cost(base, mean_of(costs));
      if (c > p.c_rel_opt) {
        p.c_rel_opt = c;
        p.best_k = k;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::vector<SummaryRow> capweight_summary(const std::vector<RunRecord> &rows) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &p : capweight_points(rows)) {
    pts.emplace_back(p.capweight, p.c_rel_opt);
  }
  return bin_values(pts, 0.0, 1.2, 0.1, true, "capweight");
}

std::vector<RvtrPoint> rvtr_points(const std::vector<RunRecord> &rows) {
  using Key = std::pair<std::string, std::int64_t>;
  struct Acc {
    std::vector<double> base;
    std::map<std::size_t, std::pair<double, std::vector<double>>> nested; // k -> (rvtr, costs)
  };
  std::vector<Key> order;
  std::map<Key, Acc> acc;
  for (const RunRecord &r : rows) {
    if (!r.y_start) {
      continue;
    }
    const Key key{r.instance_id, *r.y_start};
    auto [it, fresh] = acc.try_emplace(key);
    if (fresh) {
      order.push_back(key);
    }
    if (r.protocol == Protocol::Baseline) {
      it->second.base.push_back(r.c_total);
    } else if (r.k && r.rvtr) {
      auto &slot = it->second.nested[*r.k];
      slot.first = *r.rvtr;
      slot.second.push_back(r.c_total);
    }
  }
  std::vector<RvtrPoint> out;
  for (const auto &key : order) {
    const Acc &a = acc.at(key);
    if (a.base.empty()) {
      continue;
    }
    const double base = mean_of(a.base);
    for (const auto &[k, v] : a.nested) {
      out.push_back(RvtrPoint{key.first, key.second, k, v.first, relative_cost(base, mean_of(v.second))});
    }
  }
  return out;
}

std::vector<SummaryRow> rvtr_summary(const std::vector<RunRecord> &rows) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &p : rvtr_points(rows)) {
    pts.emplace_back(p.rvtr, p.c_rel);
  }
  return bin_values(pts, 0.0, 2.0, 0.1, true, "rvtr");
}

std::vector<SummaryRow> optgap_summary(const std::vector<RunRecord> &rows) {
  using Group = std::pair<int, double>; // (protocol, t)
  using Point = std::pair<std::string, std::uint64_t>;
  std::map<Group, std::vector<Point>> order;
  std::map<Group, std::map<Point, std::vector<double>>> acc;
  for (const RunRecord &r : rows) {
    if (!r.budget_exp) {
      continue;
    }
    const Group g{static_cast<int>(r.protocol), *r.budget_exp};
    const Point p{r.instance_id, r.seed};
    auto &m = acc[g];
    auto [it, fresh] = m.try_emplace(p);
    if (fresh) {
      order[g].push_back(p);
    }
    it->second.push_back(r.gamma);
  }
  std::vector<SummaryRow> out;
  for (const auto &[g, points] : order) {
    std::vector<double> means;
    for (const auto &p : points) {
      means.push_back(mean_of(acc.at(g).at(p)));
    }
    SummaryRow row = summarize(means);
    row.group = std::string(to_string(static_cast<Protocol>(g.first)));
    row.lo = g.second;
    row.hi = g.second;
    out.push_back(row);
  }
  return out;
}

FirstImprovement first_improvement(const MarkedSampler &sampler, double lambda,
                                   const std::function<double(std::uint64_t)> &step_cost,
                                   CounterRng &rng, std::size_t max_steps) {
  FirstImprovement out;
  if (sampler.empty()) {
    return out;
  }
  QSearchState qs{1.0, lambda};
  while (out.steps < max_steps) {
    const QSearchDraw draw = qsearch_draw(sampler, qs, rng);
    out.cost += step_cost(draw.r);
    ++out.steps;
    if (draw.found) {
      out.found = draw.found;
      break;
    }
  }
  return out;
}

ExperimentTable capweight_sweep(const SweepSpec &spec) {
  check_spec(spec);
  const auto cohort = build_cohort(spec);
  std::vector<Slot> slots(cohort.size());
  parallel_for(cohort.size(), spec.threads, [&](std::size_t i) {
    const KnapsackInstance &inst = cohort[i];
    Slot &slot = slots[i];
    if (inst.n() < 2) {
      slot.warnings.push_back(instance_id(inst) + ": needs at least two items");
      return;
    }
    const InstanceContext ctx = make_context(inst, spec.params);
    if (ctx.greedy_optimal()) {
      slot.excluded = true;
      return;
    }
    MarkedSetCache cache(inst, spec.params.marked_cap);
    try {
      first_improvement_rows(ctx, cache, spec, kTagCapweight, ctx.greedy.value,
                             depths_for(spec, inst.n() - 1), false, slot);
    } catch (const MarkedSetCapError &e) {
      slot.rows.clear();
      slot.warnings.push_back(ctx.id + ": skipped, " + e.what());
    }
  });
  ExperimentTable table = collate("capweight", slots);
  if (cohort.empty()) {
    table.warnings.push_back("instance filter matched no instances");
  }
  table.summary = capweight_summary(table.rows);
  return table;
}

ExperimentTable rvtr_sweep(const SweepSpec &spec) {
  check_spec(spec);
  const auto cohort = build_cohort(spec);
  std::vector<Slot> slots(cohort.size());
  parallel_for(cohort.size(), spec.threads, [&](std::size_t i) {
    const KnapsackInstance &inst = cohort[i];
    Slot &slot = slots[i];
    if (inst.n() < 2) {
      slot.warnings.push_back(instance_id(inst) + ": needs at least two items");
      return;
    }
    const InstanceContext ctx = make_context(inst, spec.params);
    if (ctx.greedy_optimal()) {
      slot.excluded = true;
      return;
    }
    MarkedSetCache cache(inst, spec.params.marked_cap);
    try {
      // Incumbents along one baseline trajectory from the greedy value.
      std::vector<std::int64_t> incumbents{ctx.greedy.value};
      CounterRng traj(fold_key({kTagTrajectory, ctx.key, spec.params.seed}));
      std::int64_t y = ctx.greedy.value;
      while (incumbents.size() < std::max<std::size_t>(spec.max_incumbents, 1)) {
        const MarkedSampler sampler(build_partial_ensemble(inst, ctx.bias, cache.global(y)));
        const auto fi = first_improvement(
            sampler, spec.params.lambda,
            [](std::uint64_t) { return 0.0; }, traj, kFirstImprovementSteps);
        if (!fi.found) {
          break;
        }
        y = inst.profit_of(*fi.found);
        if (y >= ctx.optimum.value) {
          break;
        }
        incumbents.push_back(y);
      }
      const auto depths = depths_for(spec, inst.n());
      for (std::int64_t start : incumbents) {
        first_improvement_rows(ctx, cache, spec, kTagRvtr, start, depths, true, slot);
      }
    } catch (const MarkedSetCapError &e) {
      slot.rows.clear();
      slot.warnings.push_back(ctx.id + ": skipped, " + e.what());
    }
  });
  ExperimentTable table = collate("rvtr", slots);
  if (cohort.empty()) {
    table.warnings.push_back("instance filter matched no instances");
  }
  table.summary = rvtr_summary(table.rows);
  return table;
}

namespace {

RunRecord protocol_record(const InstanceContext &ctx, Protocol protocol, std::uint64_t seed,
                          const ProtocolParams &params, const GasResult &res,
                          const NestedResult *nested) {
  RunRecord r = base_record(ctx, protocol, seed, params);
  set_costs(r, res.ledger.inner, res.ledger.outer);
  set_outcome(r, ctx, res.incumbent.value);
  if (nested != nullptr) {
    r.depth_policy = params.policy.to_string();
    if (!nested->depths.empty()) {
      r.k = nested->depths.back();
      r.r_in = nested->iif_calls.back().r_in;
    }
  }
  r.trajectory = res.trajectory;
  return r;
}

// One run of `protocol`; rng keyed by the caller.
RunRecord run_once(const InstanceContext &ctx, Protocol protocol, std::uint64_t seed,
                   const ProtocolParams &params, double budget_value, MarkedSetCache &cache,
                   CounterRng &rng) {
  RunOptions run;
  run.budget = budget_value;
  run.lambda = params.lambda;
  run.start = params.start;
  run.marked_cap = params.marked_cap;
  run.cache = &cache;
  if (protocol == Protocol::Baseline) {
    const GasResult res = baseline_gas(*ctx.inst, ctx.bias, run, rng);
    return protocol_record(ctx, protocol, seed, params, res, nullptr);
  }
  NestedOptions opts;
  opts.run = run;
  opts.policy = params.policy;
  opts.shots = params.shots;
  const NestedResult res = nested_gas(*ctx.inst, ctx.bias, opts, rng);
  return protocol_record(ctx, protocol, seed, params, res, &res);
}

} // namespace

ExperimentTable optgap_experiment(const SweepSpec &spec, double c_const,
                                  const std::vector<double> &t_exps) {
  check_spec(spec);
  if (!(c_const > 0.0)) {
    throw ParameterError("budget constant must be positive");
  }
  if (spec.repetitions < 1) {
    throw ParameterError("repetitions must be at least 1");
  }
  const auto cohort = build_cohort(spec);
  std::vector<Slot> slots(cohort.size());
  parallel_for(cohort.size(), spec.threads, [&](std::size_t i) {
    const KnapsackInstance &inst = cohort[i];
    Slot &slot = slots[i];
    if (inst.n() < 2) {
      slot.warnings.push_back(instance_id(inst) + ": needs at least two items");
      return;
    }
    const InstanceContext ctx = make_context(inst, spec.params);
    if (ctx.greedy_optimal()) {
      slot.excluded = true;
      return;
    }
    MarkedSetCache cache(inst, spec.params.marked_cap);
    try {
      for (std::size_t ti = 0; ti < t_exps.size(); ++ti) {
        const double t = quantize(t_exps[ti]);
        const double b = budget(c_const, inst.n(), t);
        for (std::size_t s = 0; s < spec.seeds; ++s) {
          const std::uint64_t seed = spec.params.seed + s;
          for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
            for (Protocol p : {Protocol::Baseline, Protocol::Nested}) {
              CounterRng rng(fold_key({kTagOptgap, ctx.key, ti, seed, rep, static_cast<std::uint64_t>(p)}));
              RunRecord r = run_once(ctx, p, seed, spec.params, b, cache, rng);
              r.budget_const = quantize(c_const);
              r.budget_exp = t;
              r.rep = rep;
              r.trajectory.clear();
              slot.rows.push_back(std::move(r));
            }
          }
        }
      }
    } catch (const MarkedSetCapError &e) {
      slot.rows.clear();
      slot.warnings.push_back(ctx.id + ": skipped, " + e.what());
    }
  });
  ExperimentTable table = collate("optgap", slots);
  if (cohort.empty()) {
    table.warnings.push_back("instance filter matched no instances");
  }
  table.summary = optgap_summary(table.rows);
  return table;
}

ExperimentTable run_protocol(const std::vector<KnapsackInstance> &instances, Protocol protocol,
                             const SweepSpec &spec) {
  check_spec(spec);
  std::vector<Slot> slots(instances.size());
  parallel_for(instances.size(), spec.threads, [&](std::size_t i) {
    const KnapsackInstance &inst = instances[i];
    Slot &slot = slots[i];
    const InstanceContext ctx = make_context(inst, spec.params);
    if (ctx.greedy_optimal()) {
      slot.warnings.push_back(ctx.id + ": greedy is optimal, gamma reported as 1");
    }
    MarkedSetCache cache(inst, spec.params.marked_cap);
    const double b = budget(spec.params.budget_const, inst.n(), spec.params.budget_exp);
    for (std::size_t s = 0; s < spec.seeds; ++s) {
      const std::uint64_t seed = spec.params.seed + s;
      CounterRng rng(fold_key({kTagRun, ctx.key, seed, static_cast<std::uint64_t>(protocol)}));
      RunRecord r = run_once(ctx, protocol, seed, spec.params, b, cache, rng);
      r.budget_const = quantize(spec.params.budget_const);
      r.budget_exp = quantize(spec.params.budget_exp);
      slot.rows.push_back(std::move(r));
    }
  });
  ExperimentTable table = collate("run_" + std::string(to_string(protocol)), slots);
  std::vector<double> gammas;
  for (const auto &r : table.rows) {
    gammas.push_back(r.gamma);
  }
  SummaryRow row = summarize(gammas);
  row.group = std::string(to_string(protocol));
  row.lo = row.hi = quantize(spec.params.budget_exp);
  table.summary.push_back(row);
  return table;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)> &fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) {
          error = std::current_exception();
        }
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back(worker);
  }
  for (auto &t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

OutputFormat parse_format(std::string_view s) {
  if (s == "csv") {
    return OutputFormat::Csv;
  }
  if (s == "svg") {
    return OutputFormat::Svg;
  }
  if (s == "both") {
    return OutputFormat::Both;
  }
  throw ParameterError("unknown output format '" + std::string(s) + "'");
}

} // namespace nestedaa
