// Command-line front end: every subcommand is a thin wrapper over the library
// and is byte-for-byte reproducible from (config, seed).
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "acl/evaluation.hpp"
#include "acl/experiment.hpp"

namespace fs = std::filesystem;
using namespace acl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int parallel = 1;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig config = load_experiment_config(args.config_path);
  if (args.seed_set) config.seed = args.seed;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  return config;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string out_path(const ExperimentConfig& config, const std::string& name) {
  return (fs::path(config.out_dir) / name).string();
}

// Labeled fit set over the full class list, n_fit_per_class points per class.
SupervisedTaskSet full_task_fit_set(const ExperimentConfig& config, std::uint64_t seed) {
  std::vector<int> task(config.generator.num_classes());
  for (std::size_t c = 0; c < task.size(); ++c) task[c] = static_cast<int>(c);
  SupervisedTaskSet fit_set;
  fit_set.task = task;
  fit_set.dist = Vector::Constant(static_cast<Eigen::Index>(task.size()),
                                  1.0 / static_cast<double>(task.size()));
  const std::size_t n_fit = config.eval.n_fit_per_class;
  fit_set.points.resize(static_cast<Eigen::Index>(task.size() * n_fit), config.generator.dim());
  fit_set.labels.resize(task.size() * n_fit);
  Rng rng(seed);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < task.size(); ++c)
    for (std::size_t i = 0; i < n_fit; ++i) {
      fit_set.labels[static_cast<std::size_t>(row)] = task[c];
      fit_set.points.row(row) = config.generator.sample_point(task[c], rng).transpose();
      ++row;
    }
  return fit_set;
}

int cmd_gen_data(const CommonArgs& args) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const ContrastiveBatch batch =
      sample_pairs(config.generator, config.data_M, config.data_k, config.seed);
  const std::string model_hash = fnv1a64_hex(generator_to_json(config.generator).dump());
  save_batch(batch, out_path(config, "batch.csv"), out_path(config, "batch.json"), config.seed,
             model_hash);
  write_text_file(out_path(config, "generator.json"),
                  generator_to_json(config.generator).dump(2) + "\n");
  std::cout << "wrote " << out_path(config, "batch.csv") << " (" << batch.size() << " tuples)\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const ContrastiveBatch data =
      sample_pairs(config.generator, config.data_M, config.data_k, Rng::derive(config.seed, 1));
  FeatureExtractor init = random_like(config.model_prototype, Rng::derive(config.seed, 2));
  TrainConfig train = config.train;
  train.seed = Rng::derive(config.seed, 3);
  auto [model, report] = aerm_train(train, std::move(init), data);
  save_model(model, out_path(config, "model.json"));
  save_train_report(report, out_path(config, "train_report.csv"));
  std::cout << "wrote " << out_path(config, "model.json") << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& model_path) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const FeatureExtractor model = load_model(model_path);

  const SupervisedTaskSet fit_set = full_task_fit_set(config, Rng::derive(config.seed, 4));
  const MeanClassifier head = fit_mean_classifier(model, fit_set);
  const SupervisedTaskSet eval_set =
      sample_points_for_task(config.generator, fit_set.task, TaskDistPolicy::Uniform,
                             config.eval.n_eval, Rng::derive(config.seed, 5));

  Json records = Json::array();
  const SupervisedEval clean =
      supervised_risk(model, head, eval_set, config.train.loss, std::nullopt);
  Json jc = risk_to_json(clean.risk, config.config_hash);
  jc["accuracy"] = clean.accuracy;
  jc["attack"] = "none";
  records.push_back(jc);
  std::cout << "clean: accuracy=" << clean.accuracy << " loss=" << clean.risk.value << "\n";
  for (const AttackSpec& attack : config.eval.attacks) {
    const SupervisedEval adv = supervised_risk(model, head, eval_set, config.train.loss, attack);
    Json ja = risk_to_json(adv.risk, config.config_hash);
    ja["accuracy"] = adv.accuracy;
    ja["attack"] = to_string(attack.method);
    ja["epsilon"] = attack.epsilon;
    records.push_back(ja);
    std::cout << to_string(attack.method) << " eps=" << attack.epsilon
              << ": accuracy=" << adv.accuracy << " loss=" << adv.risk.value << "\n";
  }
  write_text_file(out_path(config, "eval.json"), records.dump(2) + "\n");
  return 0;
}

int cmd_attack_eval(const CommonArgs& args, const std::string& model_path) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const FeatureExtractor model = load_model(model_path);

  Json records = Json::array();
  const RiskEstimate clean =
      unsup_risk(model, config.generator, config.data_k, false, config.train.loss, std::nullopt,
                 config.eval.n_eval, Rng::derive(config.seed, 11));
  records.push_back(risk_to_json(clean, config.config_hash));
  std::cout << clean.kind << " = " << clean.value << " +- " << clean.stderr_ << "\n";
  for (const AttackSpec& attack : config.eval.attacks) {
    const RiskEstimate adv =
        unsup_risk(model, config.generator, config.data_k, false, config.train.loss, attack,
                   config.eval.n_eval, Rng::derive(config.seed, 11));
    Json ja = risk_to_json(adv, config.config_hash);
    ja["attack"] = to_string(attack.method);
    ja["epsilon"] = attack.epsilon;
    records.push_back(ja);
    std::cout << adv.kind << "(" << to_string(attack.method) << ", eps=" << attack.epsilon
              << ") = " << adv.value << " +- " << adv.stderr_ << "\n";
  }
  write_text_file(out_path(config, "attack_eval.json"), records.dump(2) + "\n");
  return 0;
}

int cmd_bounds(const CommonArgs& args, const std::string& model_path,
               const std::string& data_prefix, const std::vector<double>& eps_grid,
               double delta) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const FeatureExtractor model = load_model(model_path);

  if (!within_budget(model, 1e-6))
    throw PreconditionError("bounds: model violates its declared budgets by more than 1e-6");

  ContrastiveBatch batch;
  if (!data_prefix.empty()) {
    batch = load_batch(data_prefix + ".csv", data_prefix + ".json");
  } else {
    batch = sample_pairs(config.generator, config.data_M, 1, Rng::derive(config.seed, 1));
  }

  const double attack_r = config.train.attack.p;
  const double eps0 = config.train.attack.epsilon;
  auto report_for = [&](double eps) {
    if (const auto* lin = std::get_if<LinearExtractor>(&model)) {
      const DataNorms norms = compute_data_norms(batch, lin->p, attack_r);
      return linear_bound_report(norms, lin->budget, eps, config.train.loss, delta);
    }
    const auto& mlp = std::get<MlpExtractor>(model);
    const DataNorms norms = compute_data_norms(batch, attack_r, attack_r);
    return mlp.constraint == ConstraintKind::Frobenius
               ? mlp_bound_frobenius(mlp, norms, eps, config.train.loss, delta)
               : mlp_bound_oneinf(mlp, norms, eps, config.train.loss, delta);
  };

  const BoundReport report = report_for(eps0);
  std::cout << bound_report_table(report);
  Json j = bound_report_to_json(report);
  if (!eps_grid.empty()) {
    Json series = Json::array();
    for (double eps : eps_grid) {
      const BoundReport r = report_for(eps);
      Json je;
      je["epsilon"] = eps;
      je["rademacher_bound"] = r.rademacher_bound;
      je["ag_m"] = r.ag_m;
      series.push_back(je);
      std::cout << "eps=" << format_double(eps)
                << "  bound=" << format_double(r.rademacher_bound) << "\n";
    }
    j["eps_series"] = series;
  }
  write_text_file(out_path(config, "bounds.json"), j.dump(2) + "\n");
  return 0;
}

int cmd_sweep_regularizer(const CommonArgs& args) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const auto rows = run_regularizer_sweep(config, args.parallel);
  const std::string csv = regularizer_sweep_csv(rows);
  write_text_file(out_path(config, "sweep_regularizer.csv"), csv);
  std::cout << csv;
  return 0;
}

int cmd_sweep_block(const CommonArgs& args) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const auto rows = run_block_sweep(config, args.parallel);
  const std::string csv = block_sweep_csv(rows);
  write_text_file(out_path(config, "sweep_block.csv"), csv);
  std::cout << csv;
  return 0;
}

int cmd_check_losses(std::uint64_t seed, int trials) {
  bool all_pass = true;
  for (LossKind kind : {LossKind::Hinge, LossKind::Logistic}) {
    const LossSpec spec{kind};
    const Assumption1Report report = check_assumption1(spec, trials, 8, seed);
    std::cout << to_string(kind) << ": partition inequalities "
              << (report.pass ? "PASS" : "FAIL") << " (worst margin "
              << format_double(report.worst_margin) << ", " << report.trials << " trials)\n";
    all_pass = all_pass && report.pass;
  }
  return all_pass ? 0 : 4;
}

int cmd_rademacher(const CommonArgs& args, const std::string& model_path, int n_sigma,
                   int n_restarts, double delta) {
  const ExperimentConfig config = load_config(args);
  ensure_out_dir(config.out_dir);
  const FeatureExtractor prototype =
      model_path.empty() ? config.model_prototype : load_model(model_path);

  const std::size_t M = std::min<std::size_t>(config.data_M, 64);
  const ContrastiveBatch batch = sample_pairs(config.generator, M, 1, Rng::derive(config.seed, 1));
  AttackSpec attack = config.train.attack;
  if (std::holds_alternative<LinearExtractor>(prototype))
    attack.method = AttackMethod::ExactLinear;

  RademacherConfig rc;
  rc.n_sigma = n_sigma;
  rc.n_restarts = n_restarts;
  const RiskEstimate estimate = empirical_rademacher(prototype, batch, config.train.loss, attack,
                                                     rc, Rng::derive(config.seed, 2));

  BoundReport analytic;
  if (const auto* lin = std::get_if<LinearExtractor>(&prototype)) {
    const DataNorms norms = compute_data_norms(batch, lin->p, attack.p);
    analytic = linear_bound_report(norms, lin->budget, attack.epsilon, config.train.loss, delta);
  } else {
    const auto& mlp = std::get<MlpExtractor>(prototype);
    const DataNorms norms = compute_data_norms(batch, attack.p, attack.p);
    analytic = mlp.constraint == ConstraintKind::Frobenius
                   ? mlp_bound_frobenius(mlp, norms, attack.epsilon, config.train.loss, delta)
                   : mlp_bound_oneinf(mlp, norms, attack.epsilon, config.train.loss, delta);
  }
  const double analytic_g = analytic.eta * analytic.rademacher_bound;
  std::cout << "empirical lower estimate of R_S(G): " << format_double(estimate.value) << " +- "
            << format_double(estimate.stderr_) << "\n";
  std::cout << "analytic bound on R_S(G):          " << format_double(analytic_g) << "\n";

  Json j;
  j["empirical"] = risk_to_json(estimate, config.config_hash);
  j["analytic_bound_g"] = analytic_g;
  j["analytic"] = bound_report_to_json(analytic);
  write_text_file(out_path(config, "rademacher.json"), j.dump(2) + "\n");
  return estimate.value <= analytic_g ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial contrastive learning toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string model_path, data_prefix;
  std::vector<double> eps_grid;
  double delta = 0.05;
  int trials = 10000;
  int n_sigma = 10, n_restarts = 3;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", common.seed, "seed override")
        ->each([&](const std::string&) { common.seed_set = true; });
    cmd->add_option("--out", common.out_dir, "output directory override");
    cmd->add_option("--parallel", common.parallel, "concurrent sweep points");
  };

  auto* gen = app.add_subcommand("gen-data", "sample a contrastive batch to CSV + manifest");
  add_common(gen);
  auto* train = app.add_subcommand("train", "AERM training run");
  add_common(train);
  auto* eval = app.add_subcommand("eval", "mean-classifier downstream evaluation");
  add_common(eval);
  eval->add_option("--model", model_path, "model JSON")->required();
  auto* attack_eval = app.add_subcommand("attack-eval", "unsupervised surrogate risks");
  add_common(attack_eval);
  attack_eval->add_option("--model", model_path, "model JSON")->required();
  auto* bounds = app.add_subcommand("bounds", "analytic complexity bound report");
  add_common(bounds);
  bounds->add_option("--model", model_path, "model JSON")->required();
  bounds->add_option("--data", data_prefix, "batch path prefix (expects .csv and .json)");
  bounds->add_option("--eps-grid", eps_grid, "epsilon grid for a bound series");
  bounds->add_option("--delta", delta, "confidence level");
  auto* sweep_reg = app.add_subcommand("sweep-regularizer", "lambda sweep");
  add_common(sweep_reg);
  auto* sweep_block = app.add_subcommand("sweep-block", "block size sweep");
  add_common(sweep_block);
  auto* check = app.add_subcommand("check-losses", "loss axiom checks");
  check->add_option("--seed", common.seed, "seed");
  check->add_option("--trials", trials, "trials per loss");
  auto* rad = app.add_subcommand("rademacher", "empirical vs analytic Rademacher complexity");
  add_common(rad);
  rad->add_option("--model", model_path, "prototype model JSON (defaults to config model)");
  rad->add_option("--n-sigma", n_sigma, "sigma draws");
  rad->add_option("--n-restarts", n_restarts, "restarts per draw");
  rad->add_option("--delta", delta, "confidence level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(common);
    if (train->parsed()) return cmd_train(common);
    if (eval->parsed()) return cmd_eval(common, model_path);
    if (attack_eval->parsed()) return cmd_attack_eval(common, model_path);
    if (bounds->parsed()) return cmd_bounds(common, model_path, data_prefix, eps_grid, delta);
    if (sweep_reg->parsed()) return cmd_sweep_regularizer(common);
    if (sweep_block->parsed()) return cmd_sweep_block(common);
    if (check->parsed()) return cmd_check_losses(common.seed, trials);
    if (rad->parsed()) return cmd_rademacher(common, model_path, n_sigma, n_restarts, delta);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
