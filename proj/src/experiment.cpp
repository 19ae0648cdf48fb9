#include "dasgrad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "dasgrad/errors.hpp"
#include "dasgrad/optimizer.hpp"

namespace dasgrad {

namespace {

Dataset load_or_synthesize(const ProblemSpec& spec) {
  if (!spec.data_path.empty()) {
    return spec.sparse_format ? load_sparse(spec.data_path) : load_dense_csv(spec.data_path);
  }
  if (spec.kind == ProblemKind::centroid) {
    return synth_centroid(spec.n, spec.d, spec.sigma, spec.data_seed);
  }
  const int k = spec.kind == ProblemKind::binary_logistic ? 2 : spec.classes;
  return synth_classification(spec.n + spec.test_n, spec.d, k, spec.margin, spec.sparsity,
                              spec.data_seed);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string(), 0, "cannot open for writing");
  return out;
}

std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", sigma);
  return buf;
}

void write_aggregate(const OptimizerRuns& runs, bool has_accuracy,
                     const std::filesystem::path& path) {
  const auto ok = runs.successful();
  auto out = open_out(path);
  out << "step,n_seeds,loss_mean,loss_ci_low,loss_ci_high,accuracy_mean,accuracy_ci_low,"
         "accuracy_ci_high,cum_regret_mean,cum_regret_ci_low,cum_regret_ci_high\n";
  if (ok.empty()) return;
  const auto loss = aggregate_column(runs, &TraceRow::loss);
  const auto regret = aggregate_column(runs, &TraceRow::cum_regret);
  AggregateTrace acc;
  if (has_accuracy) {
    std::vector<MetricTrace> traces;
    for (const SeedRun* r : ok) {
      MetricTrace tr;
      for (const auto& row : r->rows) {
        tr.steps.push_back(row.step);
        tr.values.push_back(row.accuracy.value_or(0.0));
      }
      traces.push_back(std::move(tr));
    }
    acc = aggregate_runs(traces);
  }
  for (std::size_t k = 0; k < loss.size(); ++k) {
    out << loss[k].t << ',' << loss[k].n_seeds << ',' << format_real(loss[k].mean) << ','
        << format_real(loss[k].ci_low) << ',' << format_real(loss[k].ci_high) << ',';
    if (has_accuracy) {
      out << format_real(acc[k].mean) << ',' << format_real(acc[k].ci_low) << ','
          << format_real(acc[k].ci_high) << ',';
    } else {
      out << ",,,";
    }
    out << format_real(regret[k].mean) << ',' << format_real(regret[k].ci_low) << ','
        << format_real(regret[k].ci_high) << '\n';
  }
}

void write_interval(std::ostream& out, const Interval& ci) {
  out << format_real(ci.mean) << ',' << format_real(ci.low) << ',' << format_real(ci.high);
}

}  // namespace

PreparedProblem prepare_problem(const ProblemSpec& spec, double reference_tol,
                                std::size_t reference_max_iters) {
  Dataset all = load_or_synthesize(spec);
  if (spec.kind == ProblemKind::binary_logistic) all.num_classes = 2;
  std::vector<Example> test;
  if (spec.test_n > 0) {
    if (spec.test_n >= all.size()) throw ConfigError("test_n leaves no training examples");
    const auto split = all.examples.end() - static_cast<std::ptrdiff_t>(spec.test_n);
    test.assign(split, all.examples.end());
    all.examples.erase(split, all.examples.end());
    all.provenance += " | last " + std::to_string(spec.test_n) + " examples held out";
  }
  Dataset train = spec.keep_fraction < 1.0 || !spec.drop_labels.empty()
                      ? unbalance(all, spec.drop_labels, spec.keep_fraction, spec.unbalance_seed)
                      : std::move(all);
  Problem problem = make_problem(train, spec.kind, spec.l2_lambda);
  std::vector<std::size_t> test_counts(static_cast<std::size_t>(problem.num_classes()), 0);
  for (const auto& ex : test) {
    if (ex.label < 0 || ex.label >= problem.num_classes()) {
      throw ConfigError("test label outside the training label range");
    }
    ++test_counts[static_cast<std::size_t>(ex.label)];
  }
  ReferenceSolution ref = solve_reference(problem, reference_tol, reference_max_iters);
  return PreparedProblem{std::move(problem), std::move(test), std::move(test_counts),
                         std::move(ref), train.provenance};
}

std::vector<const SeedRun*> OptimizerRuns::successful() const {
  std::vector<const SeedRun*> out;
  for (const auto& r : runs) {
    if (r.ok) out.push_back(&r);
  }
  return out;
}

OptimizerConfig resolve_optimizer(const NamedOptimizer& opt, const PreparedProblem& prepared) {
  OptimizerConfig config = opt.config;
  if (opt.weights == WeightMode::target) {
    if (prepared.test_set.empty()) throw ConfigError("target weights need a test set");
    config.target = TargetDistribution{prepared.test_label_counts, prepared.test_set.size()};
  }
  if (config.projection && config.projection->lo.size() == 1) {
    const std::size_t dim = prepared.problem.param_dim();
    config.projection = Box{DenseVector(dim, config.projection->lo[0]),
                            DenseVector(dim, config.projection->hi[0])};
  }
  return config;
}

SeedRun run_seed(const PreparedProblem& prepared, const NamedOptimizer& opt, EvalSet eval,
                 std::uint64_t seed, std::size_t steps, std::size_t metric_tick) {
  const Problem& problem = prepared.problem;
  const double f_star = prepared.reference.f_star;
  const std::span<const Example> eval_set =
      eval == EvalSet::test ? std::span<const Example>(prepared.test_set)
                            : std::span<const Example>(problem.examples());

  SeedRun out;
  out.seed = seed;
  RegretLedger ledger;
  RunOptions options;
  options.steps = steps;
  options.seed = seed;
  options.metric_tick = metric_tick;
  options.observer = [&](const StepView& view) {
    if (!view.loss_full) return;
    TraceRow row;
    row.step = view.t;
    row.loss = *view.loss_full;
    if (problem.is_classification()) row.accuracy = accuracy(problem, view.theta, eval_set);
    row.inst_regret = row.loss - f_star;
    ledger.record(view.t, row.inst_regret);
    row.cum_regret = ledger.cumulative();
    row.grad_norm_var = gradient_norm_variance(problem, view.theta);
    out.rows.push_back(row);
  };
  try {
    run(problem, resolve_optimizer(opt, prepared), options);
  } catch (const DivergenceError& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

AggregateTrace aggregate_column(const OptimizerRuns& runs, double TraceRow::*column) {
  std::vector<MetricTrace> traces;
  for (const SeedRun* r : runs.successful()) {
    MetricTrace tr;
    for (const auto& row : r->rows) {
      tr.steps.push_back(row.step);
      tr.values.push_back(row.*column);
    }
    traces.push_back(std::move(tr));
  }
  return aggregate_runs(traces);
}

std::vector<ComparisonRow> compare_runs(const OptimizerRuns& reference,
                                        const OptimizerRuns& baseline) {
  std::map<std::uint64_t, const SeedRun*> base_by_seed;
  for (const SeedRun* r : baseline.successful()) base_by_seed[r->seed] = r;
  std::vector<std::pair<const SeedRun*, const SeedRun*>> pairs;
  for (const SeedRun* r : reference.successful()) {
    if (auto it = base_by_seed.find(r->seed); it != base_by_seed.end()) {
      pairs.emplace_back(r, it->second);
    }
  }
  std::vector<ComparisonRow> rows;
  if (pairs.empty()) return rows;
  const std::size_t ticks = pairs.front().first->rows.size();
  for (const auto& [ref, base] : pairs) {
    if (ref->rows.size() != ticks || base->rows.size() != ticks) {
      throw PreconditionError("compare_runs: tick grids differ");
    }
  }
  std::vector<double> ref_loss(pairs.size()), base_loss(pairs.size());
  std::vector<double> ref_acc(pairs.size()), base_acc(pairs.size());
  for (std::size_t k = 0; k < ticks; ++k) {
    bool has_acc = true;
    for (std::size_t s = 0; s < pairs.size(); ++s) {
      const TraceRow& a = pairs[s].first->rows[k];
      const TraceRow& b = pairs[s].second->rows[k];
      if (a.step != b.step) throw PreconditionError("compare_runs: tick grids differ");
      ref_loss[s] = a.loss;
      base_loss[s] = b.loss;
      has_acc = has_acc && a.accuracy && b.accuracy;
      ref_acc[s] = a.accuracy.value_or(0.0);
      base_acc[s] = b.accuracy.value_or(0.0);
    }
    ComparisonRow row;
    row.step = pairs.front().first->rows[k].step;
    row.baseline = baseline.label;
    row.loss_unpaired = unpaired_difference(base_loss, ref_loss);
    row.loss_paired = paired_difference(base_loss, ref_loss);
    if (has_acc) {
      row.accuracy_unpaired = unpaired_difference(ref_acc, base_acc);
      row.accuracy_paired = paired_difference(ref_acc, base_acc);
    }
    row.n_pairs = pairs.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  config.validate();
  const PreparedProblem prepared =
      prepare_problem(config.problem, config.reference_tol, config.reference_max_iters);

  ExperimentResult result;
  result.f_star = prepared.reference.f_star;
  result.reference_converged = prepared.reference.converged;
  result.provenance = prepared.provenance;
  for (const auto& opt : config.optimizers) {
    resolve_optimizer(opt, prepared).validate();
    OptimizerRuns runs;
    runs.label = opt.label;
    runs.optimizer = opt;
    runs.runs.resize(config.seeds.size());
    result.optimizers.push_back(std::move(runs));
  }

  // Jobs write into preassigned slots, so output does not depend on scheduling.
  const std::size_t n_jobs = config.optimizers.size() * config.seeds.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const std::size_t o = job / config.seeds.size();
      const std::size_t s = job % config.seeds.size();
      result.optimizers[o].runs[s] =
          run_seed(prepared, config.optimizers[o], config.problem.eval, config.seeds[s],
                   config.steps, config.metric_tick);
    }
  };
  const std::size_t n_threads = std::min(config.threads, n_jobs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }

  if (!write_files) return result;

  std::filesystem::create_directories(config.output);
  const bool has_accuracy = prepared.problem.is_classification();
  for (const auto& runs : result.optimizers) {
    for (const auto& r : runs.runs) {
      const auto path = config.output / (runs.label + "_seed" + std::to_string(r.seed) + ".csv");
      write_trace_csv(r.rows, path);
      result.files.push_back(path);
    }
    const auto agg = config.output / (runs.label + "_aggregate.csv");
    write_aggregate(runs, has_accuracy, agg);
    result.files.push_back(agg);
  }

  const OptimizerRuns* reference = nullptr;
  for (const auto& runs : result.optimizers) {
    const bool named = !config.compare_against.empty() && runs.label == config.compare_against;
    const bool first_dasgrad = config.compare_against.empty() &&
                               runs.optimizer.config.method == Method::dasgrad;
    if (named || first_dasgrad) {
      reference = &runs;
      break;
    }
  }
  if (reference) {
    const auto path = config.output / "comparison.csv";
    auto out = open_out(path);
    out << "step,reference,baseline,n_pairs,"
           "loss_improvement,loss_ci_low,loss_ci_high,"
           "loss_paired_improvement,loss_paired_ci_low,loss_paired_ci_high,"
           "accuracy_improvement,accuracy_ci_low,accuracy_ci_high,"
           "accuracy_paired_improvement,accuracy_paired_ci_low,accuracy_paired_ci_high\n";
    for (const auto& runs : result.optimizers) {
      if (&runs == reference) continue;
      for (const auto& row : compare_runs(*reference, runs)) {
        out << row.step << ',' << reference->label << ',' << row.baseline << ',' << row.n_pairs
            << ',';
        write_interval(out, row.loss_unpaired);
        out << ',';
        write_interval(out, row.loss_paired);
        out << ',';
        if (row.accuracy_unpaired) {
          write_interval(out, *row.accuracy_unpaired);
          out << ',';
          write_interval(out, *row.accuracy_paired);
        } else {
          out << ",,,,,";
        }
        out << '\n';
      }
    }
    result.files.push_back(path);
  }

  {
    const auto path = config.output / "runs.csv";
    auto out = open_out(path);
    out << "label,method,seed,status,detail\n";
    for (const auto& runs : result.optimizers) {
      for (const auto& r : runs.runs) {
        out << runs.label << ',' << to_string(runs.optimizer.config.method) << ',' << r.seed
            << ',' << (r.ok ? "ok" : "diverged") << ',' << r.error << '\n';
      }
    }
    result.files.push_back(path);
  }
  {
    const auto path = config.output / "metadata.txt";
    auto out = open_out(path);
    out << "problem = " << to_string(prepared.problem.kind()) << '\n'
        << "provenance = " << prepared.provenance << '\n'
        << "n = " << prepared.problem.size() << '\n'
        << "param_dim = " << prepared.problem.param_dim() << '\n'
        << "l2_lambda = " << format_real(prepared.problem.l2_lambda()) << '\n'
        << "loss_includes_regularizer = true\n"
        << "f_star = " << format_real(prepared.reference.f_star) << '\n'
        << "reference_grad_norm = " << format_real(prepared.reference.grad_norm_at_star) << '\n'
        << "reference_iterations = " << prepared.reference.solver_iterations << '\n'
        << "reference_converged = " << (prepared.reference.converged ? "true" : "false") << '\n'
        << "cum_regret = running sum of inst_regret over recorded ticks (metric_tick = "
        << config.metric_tick << ")\n"
        << "accuracy_set = " << (config.problem.eval == EvalSet::test ? "test" : "train") << '\n';
    if (!config.problem.data_path.empty() && config.problem.sparse_format) {
      out << "features = loaded sparse file\n";
    } else if (config.problem.data_path.empty() && config.problem.sparsity > 0.0) {
      out << "features = synthetic sparse stand-in\n";
    }
    result.files.push_back(path);
  }
  return result;
}

std::vector<SweepPoint> sweep_variance(const SweepOptions& options, bool write_files) {
  if (options.sigmas.empty()) throw ConfigError("sweep needs at least one sigma");
  if (options.seeds < 2) throw ConfigError("sweep needs at least two seeds");
  std::vector<SweepPoint> points;
  for (double sigma : options.sigmas) {
    ExperimentConfig cfg;
    cfg.problem.kind = ProblemKind::centroid;
    cfg.problem.n = options.n;
    cfg.problem.d = options.d;
    cfg.problem.sigma = sigma;
    cfg.problem.data_seed = options.data_seed;
    for (Method m : {Method::amsgrad, Method::dasgrad}) {
      NamedOptimizer opt;
      opt.label = std::string(to_string(m));
      opt.config = preset_optimizer(m, options.alpha);
      opt.config.batch_size = options.batch_size;
      opt.config.refresh_period = options.refresh_period;
      cfg.optimizers.push_back(opt);
    }
    cfg.steps = options.steps;
    for (std::uint64_t s = 1; s <= options.seeds; ++s) cfg.seeds.push_back(s);
    cfg.metric_tick = options.metric_tick;
    cfg.threads = options.threads;
    cfg.output = options.output / ("sigma_" + format_sigma(sigma));

    SweepPoint point;
    point.sigma = sigma;
    point.result = run_experiment(cfg, false);
    const auto& ams = point.result.optimizers[0];
    const auto& das = point.result.optimizers[1];
    const auto ams_regret = aggregate_column(ams, &TraceRow::cum_regret);
    const auto das_regret = aggregate_column(das, &TraceRow::cum_regret);
    point.amsgrad_final_regret = ams_regret.back().mean;
    point.dasgrad_final_regret = das_regret.back().mean;

    // Paired final-regret gap per tick.
    std::map<std::uint64_t, const SeedRun*> das_by_seed;
    for (const SeedRun* r : das.successful()) das_by_seed[r->seed] = r;
    std::vector<const SeedRun*> a_runs, d_runs;
    for (const SeedRun* r : ams.successful()) {
      if (auto it = das_by_seed.find(r->seed); it != das_by_seed.end()) {
        a_runs.push_back(r);
        d_runs.push_back(it->second);
      }
    }
    if (a_runs.empty()) throw DivergenceError(0, "every sweep run diverged at sigma " + format_sigma(sigma));
    std::vector<Interval> gap_per_tick;
    const std::size_t ticks = a_runs.front()->rows.size();
    std::vector<double> a(a_runs.size()), d(a_runs.size());
    for (std::size_t k = 0; k < ticks; ++k) {
      for (std::size_t s = 0; s < a_runs.size(); ++s) {
        a[s] = a_runs[s]->rows[k].cum_regret;
        d[s] = d_runs[s]->rows[k].cum_regret;
      }
      gap_per_tick.push_back(paired_difference(a, d));
    }
    point.gap = gap_per_tick.back();

    if (write_files) {
      std::filesystem::create_directories(options.output);
      auto out = open_out(options.output / ("sigma_" + format_sigma(sigma) + "_aggregate.csv"));
      out << "step,amsgrad_cum_regret_mean,amsgrad_ci_low,amsgrad_ci_high,"
             "dasgrad_cum_regret_mean,dasgrad_ci_low,dasgrad_ci_high,"
             "gap_mean,gap_paired_ci_low,gap_paired_ci_high\n";
      for (std::size_t k = 0; k < ams_regret.size(); ++k) {
        out << ams_regret[k].t << ',' << format_real(ams_regret[k].mean) << ','
            << format_real(ams_regret[k].ci_low) << ',' << format_real(ams_regret[k].ci_high)
            << ',' << format_real(das_regret[k].mean) << ',' << format_real(das_regret[k].ci_low)
            << ',' << format_real(das_regret[k].ci_high) << ',';
        write_interval(out, gap_per_tick[k]);
        out << '\n';
      }
    }
    points.push_back(std::move(point));
  }
  if (write_files) {
    auto out = open_out(options.output / "summary.csv");
    out << "sigma,amsgrad_final_regret,dasgrad_final_regret,gap_mean,gap_ci_low,gap_ci_high\n";
    for (const auto& p : points) {
      out << format_real(p.sigma) << ',' << format_real(p.amsgrad_final_regret) << ','
          << format_real(p.dasgrad_final_regret) << ',';
      write_interval(out, p.gap);
      out << '\n';
    }
  }
  return points;
}

MatchingResult distribution_matching(const MatchingOptions& options, bool write_files) {
  ExperimentConfig cfg;
  cfg.problem.kind = ProblemKind::multiclass_logistic;
  cfg.problem.n = options.n;
  cfg.problem.d = options.d;
  cfg.problem.classes = options.classes;
  cfg.problem.margin = options.margin;
  cfg.problem.l2_lambda = options.l2_lambda;
  cfg.problem.test_n = options.test_n;
  cfg.problem.drop_labels = options.drop_labels;
  cfg.problem.keep_fraction = options.keep_fraction;
  cfg.problem.data_seed = options.data_seed;
  cfg.problem.unbalance_seed = options.data_seed;
  cfg.problem.eval = EvalSet::test;
  NamedOptimizer weighted;
  weighted.label = "dasgrad_target";
  weighted.config = preset_optimizer(Method::dasgrad, options.alpha);
  weighted.weights = WeightMode::target;
  NamedOptimizer unweighted = weighted;
  unweighted.label = "dasgrad_training";
  unweighted.weights = WeightMode::training;
  cfg.optimizers = {weighted, unweighted};
  cfg.compare_against = weighted.label;
  cfg.steps = options.steps;
  for (std::uint64_t s = 1; s <= options.seeds; ++s) cfg.seeds.push_back(s);
  cfg.metric_tick = options.metric_tick;
  cfg.threads = options.threads;
  cfg.output = options.output;
  cfg.reference_max_iters = 5000;

  MatchingResult result;
  result.result = run_experiment(cfg, write_files);
  const auto rows = compare_runs(result.result.optimizers[0], result.result.optimizers[1]);
  if (rows.empty() || !rows.back().accuracy_paired) {
    throw DivergenceError(0, "distribution matching produced no comparable runs");
  }
  result.improvement = *rows.back().accuracy_paired;
  const auto& acc_unpaired = *rows.back().accuracy_unpaired;
  result.weighted_accuracy = 0.0;
  std::size_t count = 0;
  for (const SeedRun* r : result.result.optimizers[0].successful()) {
    result.weighted_accuracy += r->rows.back().accuracy.value_or(0.0);
    ++count;
  }
  result.weighted_accuracy /= static_cast<double>(std::max<std::size_t>(count, 1));
  result.unweighted_accuracy = result.weighted_accuracy - acc_unpaired.mean;
  if (write_files) {
    auto out = open_out(options.output / "matching_summary.csv");
    out << "weighted_accuracy,unweighted_accuracy,improvement,paired_ci_low,paired_ci_high\n"
        << format_real(result.weighted_accuracy) << ',' << format_real(result.unweighted_accuracy)
        << ',';
    write_interval(out, result.improvement);
    out << '\n';
  }
  return result;
}

}  // namespace dasgrad
