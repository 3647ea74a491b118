#ifndef NESTEDAA_BENCH_HPP
#define NESTEDAA_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nestedaa/gas.hpp"
#include "nestedaa/instances.hpp"
#include "nestedaa/nested.hpp"

namespace nestedaa {

enum class Protocol { Baseline, Nested };
std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

/// Knobs shared by every experiment driver.
struct ProtocolParams {
  double lambda = kDefaultLambda;
  std::size_t shots = kDefaultValidationShots; // L
  std::optional<double> bias;                  // unset: b = n
  DepthPolicy policy = DepthPolicy::rvtr_target(0.6);
  double budget_const = 10.0;
  double budget_exp = 2.0;
  std::uint64_t seed = 1;
  StartMode start = StartMode::Greedy;
  std::size_t marked_cap = kDefaultMarkedCap;

  double bias_for(std::size_t n) const { return bias.value_or(static_cast<double>(n)); }
};

/// One CSV datapoint. Optional fields serialize as empty cells.
struct RunRecord {
  std::string instance_id;
  std::size_t n = 0;
  CorrelationType corr_type = CorrelationType::Uncorrelated;
  std::int64_t range_r = 0;
  std::int64_t tightness_s = 0;
  double capweight = 0.0;
  Protocol protocol = Protocol::Baseline;
  std::uint64_t seed = 0;
  double bias_b = 0.0;
  double lambda = 0.0;
  std::size_t shots = 0;
  std::string depth_policy;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> r_in;
  double c_total = 0.0;
  double c_inner = 0.0;
  double c_outer = 0.0;
  std::int64_t y_greedy = 0;
  std::int64_t y_final = 0;
  std::int64_t y_star = 0;
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<double> c_rel;
  // Columns after the core schema.
  std::optional<double> budget_const;
  std::optional<double> budget_exp;
  std::optional<std::size_t> rep;
  std::optional<std::int64_t> y_start;
  std::optional<double> rvtr;

  std::vector<TrajectoryPoint> trajectory; // in memory only

  bool operator==(const RunRecord &o) const; // ignores trajectory
};

/// Column names, in order.
const std::vector<std::string> &csv_header();
std::string format_real(double v); // 12 significant digits
/// Rounds through format_real so in-memory values equal parsed CSV values.
double quantize(double v);

std::string to_csv(const std::vector<RunRecord> &rows);
std::vector<RunRecord> parse_csv(const std::string &text);

/// alpha(y) = y / y*. Throws ConsistencyError when y > y*.
double approximation_ratio(std::int64_t y, std::int64_t y_star);

struct GapValue {
  double gamma = 0.0;
  bool undefined = false; // greedy already optimal; gamma reported as 1
};

/// (alpha - alpha_greedy) / (1 - alpha_greedy).
GapValue optimality_gap(double alpha, double alpha_greedy);

/// Where the experiment instances come from.
struct CohortSpec {
  std::vector<std::size_t> n_values{10, 12, 14, 16, 18, 20, 22, 24};
  std::int64_t range_r = 1000;
  CorrelationType corr_type = CorrelationType::Uncorrelated;
  std::vector<std::int64_t> tightness{10};
  std::int64_t index_min = 1;
  std::int64_t index_max = 10;
  std::vector<KnapsackInstance> explicit_instances; // used instead when non-empty
};

struct SweepSpec {
  CohortSpec cohort;
  std::size_t n_min = 1;
  std::size_t n_max = kMaxItems;
  double capweight_lo = 0.0; // exclusive
  double capweight_hi = 1e18; // exclusive
  std::vector<std::size_t> depths; // empty: driver default
  std::size_t seeds = 4;
  std::size_t repetitions = 4; // optgap only
  ItemOrdering ordering = ItemOrdering::DensityDescending;
  ProtocolParams params;
  std::size_t threads = 1;
  std::size_t max_incumbents = 8; // rvtr sweep: incumbents per instance
};

/// Generated (or explicit) instances, deduplicated, reordered and filtered.
std::vector<KnapsackInstance> build_cohort(const SweepSpec &spec);

std::string instance_id(const KnapsackInstance &inst);
std::uint64_t instance_key(const KnapsackInstance &inst);

struct SummaryRow {
  std::string group;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
};

struct ExperimentTable {
  std::string name;
  std::vector<RunRecord> rows;
  std::vector<SummaryRow> summary;
  std::vector<std::string> warnings;
  std::size_t excluded = 0; // instances with nothing to improve
};

/// Mean, median and population standard deviation.
SummaryRow summarize(std::vector<double> values);

/// Fixed-width bins [lo + j w, lo + (j+1) w); values >= hi go to an
/// overflow bin [hi, inf) when `overflow` is set, otherwise are dropped.
std::vector<SummaryRow> bin_values(const std::vector<std::pair<double, double>> &points, double lo,
                                   double hi, double width, bool overflow, const std::string &group);

/// Per instance: capweight and c_rel^opt = max_k log2(mean C_base / mean C_nested).
struct CapweightPoint {
  std::string instance_id;
  double capweight = 0.0;
  double c_rel_opt = 0.0;
  std::size_t best_k = 0;
};
std::vector<CapweightPoint> capweight_points(const std::vector<RunRecord> &rows);
std::vector<SummaryRow> capweight_summary(const std::vector<RunRecord> &rows);

/// Per (instance, incumbent, depth): RVTR and log2(mean C_base / mean C_nested).
struct RvtrPoint {
  std::string instance_id;
  std::int64_t y_start = 0;
  std::size_t k = 0;
  double rvtr = 0.0;
  double c_rel = 0.0;
};
std::vector<RvtrPoint> rvtr_points(const std::vector<RunRecord> &rows);
std::vector<SummaryRow> rvtr_summary(const std::vector<RunRecord> &rows);

/// Per (protocol, t): statistics over datapoints, each datapoint the mean
/// gamma over repetitions of one (instance, seed).
std::vector<SummaryRow> optgap_summary(const std::vector<RunRecord> &rows);

/// Cost to the first improvement over `start`, emulated with the given
/// preparation ensemble and per-step cost law.
struct FirstImprovement {
  double cost = 0.0;
  std::size_t steps = 0;
  std::optional<Bitstring> found;
};
FirstImprovement first_improvement(const MarkedSampler &sampler, double lambda,
                                   const std::function<double(std::uint64_t)> &step_cost,
                                   CounterRng &rng, std::size_t max_steps = 10'000'000);

ExperimentTable capweight_sweep(const SweepSpec &spec);
ExperimentTable rvtr_sweep(const SweepSpec &spec);
ExperimentTable optgap_experiment(const SweepSpec &spec, double c_const,
                                  const std::vector<double> &t_exps);

/// Runs one protocol on every instance for `seeds` seeds with budget
/// C * n^t; one record per (instance, seed).
ExperimentTable run_protocol(const std::vector<KnapsackInstance> &instances, Protocol protocol,
                             const SweepSpec &spec);

/// Calls fn(i) for every i in [0, count) on `threads` workers. Callers
/// write results into slot i, so output order never depends on scheduling.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)> &fn);

enum class OutputFormat { Csv, Svg, Both };
OutputFormat parse_format(std::string_view s);

/// Writes <dir>/<name>.csv, <dir>/<name>_summary.csv and/or <dir>/<name>.svg.
/// Returns the written paths.
std::vector<std::string> emit_outputs(const ExperimentTable &table, OutputFormat format,
                                      const std::string &out_dir);

std::string summary_to_csv(const std::vector<SummaryRow> &summary);
std::string render_svg(const ExperimentTable &table);

} // namespace nestedaa

#endif // NESTEDAA_BENCH_HPP
