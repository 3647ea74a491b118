// nestedaa: instance generation, protocol runs and the experiment sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nestedaa/bench.hpp"
#include "nestedaa/errors.hpp"
#include "nestedaa/nested.hpp"
#include "nestedaa/qcheck.hpp"

using namespace nestedaa;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  double lambda = kDefaultLambda;
  std::optional<double> bias;
  std::size_t shots = kDefaultValidationShots;
  std::string depth_policy = "rvtr:0.6";
  double budget_const = 10.0;
  double budget_exp = 2.0;
  std::size_t threads = 1;
  std::string out_dir = "out";
  std::string format = "csv";
};

struct CohortArgs {
  std::vector<std::size_t> n{10, 12, 14, 16, 18, 20, 22, 24};
  std::int64_t range = 1000;
  std::string type = "uncorrelated";
  std::vector<std::int64_t> tightness{10};
  std::int64_t count = 10;
  std::string ordering = "density_descending";
  std::string instances_file;
  double cw_lo = 0.0;
  double cw_hi = 1e18;
  std::size_t seeds = 4;
  std::vector<std::size_t> depths;
};

void add_cohort_options(CLI::App *cmd, CohortArgs &c) {
  cmd->add_option("--n", c.n, "Item counts")->capture_default_str();
  cmd->add_option("--range", c.range, "Weight range R")->capture_default_str();
  cmd->add_option("--type", c.type, "Correlation type")
      ->check(CLI::IsMember({"uncorrelated", "weakly_correlated", "strongly_correlated"}))
      ->capture_default_str();
  cmd->add_option("--tightness", c.tightness, "Tightness series S")->capture_default_str();
  cmd->add_option("--count", c.count, "Instance indices 1..count per (n, S)")->capture_default_str();
  cmd->add_option("--ordering", c.ordering, "Item ordering")
      ->check(CLI::IsMember({"as_generated", "density_descending", "value_descending"}))
      ->capture_default_str();
  cmd->add_option("--instances", c.instances_file, "JSONL instances instead of generating");
  cmd->add_option("--cw-min", c.cw_lo, "Keep capweight > this")->capture_default_str();
  cmd->add_option("--cw-max", c.cw_hi, "Keep capweight < this");
  cmd->add_option("--seeds", c.seeds, "Seeds per datapoint")->capture_default_str();
  cmd->add_option("--depths", c.depths, "Depths k to sweep (default: all)");
}

std::vector<KnapsackInstance> load_instances(const std::string &path) {
  std::ifstream is(path);
  if (!is) {
    throw IoError("cannot read " + path);
  }
  return read_instances(is);
}

SweepSpec make_spec(const GlobalArgs &g, const CohortArgs &c) {
  SweepSpec spec;
  spec.cohort.n_values = c.n;
  spec.cohort.range_r = c.range;
  spec.cohort.corr_type = parse_correlation(c.type);
  spec.cohort.tightness = c.tightness;
  spec.cohort.index_min = 1;
  spec.cohort.index_max = c.count;
  if (!c.instances_file.empty()) {
    spec.cohort.explicit_instances = load_instances(c.instances_file);
  }
  spec.capweight_lo = c.cw_lo;
  spec.capweight_hi = c.cw_hi;
  spec.depths = c.depths;
  spec.seeds = c.seeds;
  spec.ordering = parse_ordering(c.ordering);
  spec.threads = g.threads;
  spec.params.lambda = g.lambda;
  spec.params.shots = g.shots;
  spec.params.bias = g.bias;
  spec.params.policy = DepthPolicy::parse(g.depth_policy);
  spec.params.budget_const = g.budget_const;
  spec.params.budget_exp = g.budget_exp;
  spec.params.seed = g.seed;
  return spec;
}

void report(const ExperimentTable &table, const GlobalArgs &g) {
  for (const auto &w : table.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  if (table.excluded > 0) {
    std::cerr << table.excluded << " instance(s) excluded: greedy already optimal\n";
  }
  for (const auto &path : emit_outputs(table, parse_format(g.format), g.out_dir)) {
    std::cout << "wrote " << path << '\n';
  }
  std::cout << summary_to_csv(table.summary);
}

void print_cp_table(std::size_t shots) {
  std::printf("%-10s %3s %3s %9s %9s\n", "confidence", "L", "s", "p_lower", "p_upper");
  for (double conf : {0.80, 0.90, 0.95, 0.99}) {
    for (std::size_t s = shots + 1; s-- > 0;) {
      const CpBounds b = clopper_pearson(s, shots, conf);
      std::printf("%-10.2f %3zu %3zu %9.6f %9.6f\n", conf, shots, s, b.p_lower, b.p_upper);
    }
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Nested amplitude amplification for 0/1 knapsack (classical emulation)"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
  app.add_option("--lambda", g.lambda, "QSearch growth factor")->capture_default_str();
  app.add_option("--bias", g.bias, "QTG bias b (default: n)");
  app.add_option("--L", g.shots, "IIF validation shots")->capture_default_str();
  app.add_option("--depth-policy", g.depth_policy, "fixed:K or rvtr:TARGET")->capture_default_str();
  app.add_option("--budget-const", g.budget_const, "Budget constant C")->capture_default_str();
  app.add_option("--budget-exp", g.budget_exp, "Budget exponent t")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "csv, svg or both")
      ->check(CLI::IsMember({"csv", "svg", "both"}))
      ->capture_default_str();

  // generate
  auto *gen = app.add_subcommand("generate", "Write instances as JSON lines");
  CohortArgs gen_c;
  std::string gen_out = "-";
  gen->add_option("--n", gen_c.n, "Item counts")->capture_default_str();
  gen->add_option("--range", gen_c.range, "Weight range R")->capture_default_str();
  gen->add_option("--type", gen_c.type, "Correlation type")
      ->check(CLI::IsMember({"uncorrelated", "weakly_correlated", "strongly_correlated"}))
      ->capture_default_str();
  gen->add_option("--tightness", gen_c.tightness, "Tightness series S")->capture_default_str();
  gen->add_option("--count", gen_c.count, "Instance indices 1..count")->capture_default_str();
  gen->add_option("--ordering", gen_c.ordering, "Item ordering")
      ->check(CLI::IsMember({"as_generated", "density_descending", "value_descending"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output file, - for stdout")->capture_default_str();

  // run
  auto *run = app.add_subcommand("run", "Run one protocol with budget C n^t");
  CohortArgs run_c;
  run_c.seeds = 1;
  std::string protocol = "baseline";
  run->add_option("--protocol", protocol, "baseline or nested")
      ->check(CLI::IsMember({"baseline", "nested"}))
      ->capture_default_str();
  add_cohort_options(run, run_c);

  auto *cw = app.add_subcommand("sweep-capweight", "First-improvement cost vs capweight");
  CohortArgs cw_c;
  add_cohort_options(cw, cw_c);

  auto *rv = app.add_subcommand("sweep-rvtr", "First-improvement cost vs RVTR");
  CohortArgs rv_c;
  std::size_t max_incumbents = 8;
  add_cohort_options(rv, rv_c);
  rv->add_option("--max-incumbents", max_incumbents, "Incumbents per instance")->capture_default_str();

  auto *og = app.add_subcommand("optgap", "Optimality gap under budget C n^t");
  CohortArgs og_c;
  og_c.n = {30};
  std::vector<double> t_exps{1.0, 1.5, 2.0};
  std::size_t reps = 4;
  add_cohort_options(og, og_c);
  og->add_option("--t", t_exps, "Budget exponents")->capture_default_str();
  og->add_option("--reps", reps, "Repetitions per datapoint")->capture_default_str();

  auto *ver = app.add_subcommand("verify", "Compare the amplitude tracker with statevector simulation");
  std::size_t ver_instances = 50;
  std::size_t ver_max_n = 5;
  std::uint64_t ver_rot = 3;
  double ver_tol = 1e-9;
  ver->add_option("--instances", ver_instances, "Random instances")->capture_default_str();
  ver->add_option("--max-n", ver_max_n, "Largest item count")->capture_default_str();
  ver->add_option("--max-rotations", ver_rot, "Largest r_in and r_out")->capture_default_str();
  ver->add_option("--tol", ver_tol, "Allowed probability error")->capture_default_str();

  auto *cp = app.add_subcommand("cp-table", "Clopper-Pearson bounds for L shots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::vector<KnapsackInstance> batch;
      for (std::size_t n : gen_c.n) {
        for (std::int64_t s : gen_c.tightness) {
          for (std::int64_t i = 1; i <= gen_c.count; ++i) {
            batch.push_back(reorder_items(
                generate_instance(GeneratorParams{n, gen_c.range, parse_correlation(gen_c.type), s, i}),
                parse_ordering(gen_c.ordering)));
          }
        }
      }
      if (gen_out == "-") {
        write_instances(std::cout, batch);
      } else {
        std::ofstream os(gen_out);
        if (!os) {
          throw IoError("cannot write " + gen_out);
        }
        write_instances(os, batch);
      }
    } else if (*run) {
      SweepSpec spec = make_spec(g, run_c);
      const auto instances = build_cohort(spec);
      report(run_protocol(instances, parse_protocol(protocol), spec), g);
    } else if (*cw) {
      report(capweight_sweep(make_spec(g, cw_c)), g);
    } else if (*rv) {
      SweepSpec spec = make_spec(g, rv_c);
      spec.max_incumbents = max_incumbents;
      report(rvtr_sweep(spec), g);
    } else if (*og) {
      SweepSpec spec = make_spec(g, og_c);
      spec.repetitions = reps;
      report(optgap_experiment(spec, g.budget_const, t_exps), g);
    } else if (*ver) {
      const std::size_t bad = qcheck::oracle_mismatches(6);
      std::printf("threshold oracle, widths 1..6: %zu mismatches\n", bad);
      const auto rep = qcheck::check_equivalence(ver_instances, ver_max_n, {0.0, 1.0, 3.0}, ver_rot, g.seed);
      std::printf("tracker vs statevector: %zu instances, %zu cases, max error %.3e\n",
                  rep.instances, rep.cases, rep.max_error);
      return (bad == 0 && rep.max_error <= ver_tol) ? 0 : 1;
    } else if (*cp) {
      print_cp_table(g.shots);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
