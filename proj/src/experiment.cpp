#include "acl/experiment.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <sstream>

#include "acl/evaluation.hpp"

namespace acl {

AttackSpec attack_spec_from_json(const Json& j) {
  AttackSpec spec;
  if (j.contains("method")) spec.method = attack_method_from_string(j.at("method"));
  if (j.contains("p")) spec.p = norm_index_from_json(j.at("p"));
  spec.epsilon = j.value("epsilon", 0.0);
  spec.steps = j.value("steps", 20);
  spec.step_size = j.value("step_size", 0.0);
  spec.random_start = j.value("random_start", false);
  return spec;
}

Json attack_spec_to_json(const AttackSpec& spec) {
  Json j;
  j["method"] = to_string(spec.method);
  j["p"] = norm_index_to_json(spec.p);
  j["epsilon"] = spec.epsilon;
  j["steps"] = spec.steps;
  j["step_size"] = spec.step_size;
  j["random_start"] = spec.random_start;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig config;
  config.lambda = j.value("lambda", 0.0);
  config.lr = j.value("lr", 0.001);
  config.momentum = j.value("momentum", 0.9);
  config.weight_decay = j.value("weight_decay", 5e-4);
  config.batch_size = j.value("batch_size", 32);
  config.iterations = j.value("iterations", 100);
  config.project_each_step = j.value("project_each_step", true);
  config.log_interval = j.value("log_interval", 1);
  if (j.contains("attack")) config.attack = attack_spec_from_json(j.at("attack"));
  if (j.contains("loss"))
    config.loss.kind = loss_kind_from_string(j.at("loss").value("kind", "hinge"));
  config.validate();
  return config;
}

namespace {

LatentClassModel generator_config_from_json(const Json& j) {
  if (j.value("format", "") == "acl-generator/1") return generator_from_json(j);
  // Compact synthetic form.
  const int classes = j.at("classes").get<int>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const double radius = j.value("mean_radius", 2.0);
  const double stddev = j.value("stddev", 0.5);
  std::optional<double> clamp;
  if (j.contains("clamp_box")) clamp = j.at("clamp_box").get<double>();
  const std::uint64_t seed = j.value("seed", static_cast<std::uint64_t>(7));
  return make_gaussian_model(classes, dim, radius, stddev, clamp, seed);
}

FeatureExtractor model_prototype_from_json(const Json& j) {
  if (j.value("format", "") == "acl-model/1") return model_from_json(j);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    LinearExtractor lin;
    lin.p = j.contains("p") ? norm_index_from_json(j.at("p")) : 2.0;
    lin.budget = j.value("budget", 1.0);
    lin.weight = Matrix::Zero(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    return lin;
  }
  if (kind != "mlp") throw ConfigError("model: unknown kind " + kind);
  MlpExtractor mlp;
  const auto widths = j.at("widths").get<std::vector<Eigen::Index>>();
  require(widths.size() >= 2, "model: widths must list input and output");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    mlp.layers.push_back(Matrix::Zero(widths[l + 1], widths[l]));
  mlp.activation = act_kind_from_string(j.value("activation", "relu"));
  mlp.leaky_alpha = j.value("leaky_alpha", 0.01);
  mlp.constraint = constraint_kind_from_string(j.value("constraint", "frobenius"));
  if (j.contains("budgets")) {
    mlp.budgets = j.at("budgets").get<std::vector<double>>();
  } else {
    mlp.budgets.assign(mlp.layers.size(), j.value("budget", 2.0));
  }
  require(mlp.budgets.size() == mlp.layers.size(), "model: budget count mismatch");
  return mlp;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig config;
  config.seed = j.value("seed", static_cast<std::uint64_t>(1));
  config.out_dir = j.value("out_dir", "out");
  config.generator = generator_config_from_json(j.at("generator"));
  config.model_prototype = model_prototype_from_json(j.at("model"));
  config.train = train_config_from_json(j.value("train", Json::object()));
  if (j.contains("data")) {
    config.data_M = j.at("data").value("M", static_cast<std::size_t>(2048));
    config.data_k = j.at("data").value("k", 1);
  }
  if (j.contains("eval")) {
    const Json& e = j.at("eval");
    config.eval.n_fit_per_class = e.value("n_fit_per_class", static_cast<std::size_t>(200));
    config.eval.n_eval = e.value("n_eval", static_cast<std::size_t>(1000));
    for (const auto& ja : e.value("attacks", Json::array()))
      config.eval.attacks.push_back(attack_spec_from_json(ja));
  }
  if (j.contains("lambda_list"))
    config.lambda_list = j.at("lambda_list").get<std::vector<double>>();
  if (j.contains("b_list")) config.b_list = j.at("b_list").get<std::vector<int>>();
  require(input_dim(config.model_prototype) == config.generator.dim(),
          "experiment: model input dim must match generator dim");
  config.config_hash = fnv1a64_hex(j.dump());
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(parse_json_file(path));
}

RunMetrics run_single(const ExperimentConfig& config, double lambda, int block_size,
                      std::uint64_t seed) {
  const bool block = block_size > 0;
  const ContrastiveBatch data =
      block ? sample_blocks(config.generator, config.data_M, block_size, Rng::derive(seed, 1))
            : sample_pairs(config.generator, config.data_M, config.data_k, Rng::derive(seed, 1));

  FeatureExtractor init = random_like(config.model_prototype, Rng::derive(seed, 2));
  TrainConfig train = config.train;
  train.lambda = lambda;
  train.seed = Rng::derive(seed, 3);
  auto [model, report] = aerm_train(train, std::move(init), data);
  (void)report;

  // Downstream task over every generator class; D_T uniform.
  std::vector<int> task(config.generator.num_classes());
  std::iota(task.begin(), task.end(), 0);

  SupervisedTaskSet fit_set;
  fit_set.task = task;
  fit_set.dist = Vector::Constant(static_cast<Eigen::Index>(task.size()),
                                  1.0 / static_cast<double>(task.size()));
  const std::size_t n_fit = config.eval.n_fit_per_class;
  fit_set.points.resize(static_cast<Eigen::Index>(task.size() * n_fit), config.generator.dim());
  fit_set.labels.resize(task.size() * n_fit);
  Rng fit_rng(Rng::derive(seed, 4));
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < task.size(); ++c)
    for (std::size_t i = 0; i < n_fit; ++i) {
      fit_set.labels[static_cast<std::size_t>(row)] = task[c];
      fit_set.points.row(row) = config.generator.sample_point(task[c], fit_rng).transpose();
      ++row;
    }
  const MeanClassifier head = fit_mean_classifier(model, fit_set);

  const SupervisedTaskSet eval_set = sample_points_for_task(
      config.generator, task, TaskDistPolicy::Uniform, config.eval.n_eval, Rng::derive(seed, 5));

  RunMetrics metrics;
  const SupervisedEval clean =
      supervised_risk(model, head, eval_set, config.train.loss, std::nullopt);
  metrics.clean_accuracy = clean.accuracy;
  metrics.clean_loss = clean.risk.value;
  for (const AttackSpec& attack : config.eval.attacks) {
    const SupervisedEval adv = supervised_risk(model, head, eval_set, config.train.loss, attack);
    metrics.adv_accuracy.push_back(adv.accuracy);
    metrics.adv_loss.push_back(adv.risk.value);
  }
  metrics.final_layer_norms = constrained_norms(model);
  return metrics;
}

namespace {

std::vector<RunMetrics> run_points(const ExperimentConfig& config,
                                   const std::vector<double>& params, bool block, int parallel) {
  std::vector<RunMetrics> results(params.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, parallel));
  std::size_t next = 0;
  while (next < params.size()) {
    const std::size_t begin = next;
    const std::size_t end = std::min(params.size(), begin + width);
    std::vector<std::future<RunMetrics>> futures;
    for (std::size_t i = begin; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&config, &params, block, i] {
        // Sweep points share the experiment seed so they differ only in the
        // swept parameter.
        return block
                   ? run_single(config, config.train.lambda, static_cast<int>(params[i]),
                                config.seed)
                   : run_single(config, params[i], 0, config.seed);
      }));
    }
    for (std::size_t i = begin; i < end; ++i) results[i] = futures[i - begin].get();
    next = end;
  }
  return results;
}

}  // namespace

std::vector<SweepRow> run_regularizer_sweep(const ExperimentConfig& config, int parallel) {
  require(!config.lambda_list.empty(), "regularizer sweep: lambda_list is empty");
  const auto results = run_points(config, config.lambda_list, false, parallel);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < config.lambda_list.size(); ++i) {
    const double lambda = config.lambda_list[i];
    const RunMetrics& m = results[i];
    for (std::size_t a = 0; a < config.eval.attacks.size(); ++a) {
      const AttackSpec& attack = config.eval.attacks[a];
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "clean_accuracy", lambda, m.clean_accuracy});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "adv_accuracy", lambda, m.adv_accuracy[a]});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "clean_loss", lambda, m.clean_loss});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "adv_loss", lambda, m.adv_loss[a]});
    }
  }
  return rows;
}

std::vector<SweepRow> run_block_sweep(const ExperimentConfig& config, int parallel) {
  require(!config.b_list.empty(), "block sweep: b_list is empty");
  std::vector<double> params;
  for (int b : config.b_list) params.push_back(static_cast<double>(b));
  const auto results = run_points(config, params, true, parallel);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const RunMetrics& m = results[i];
    for (std::size_t a = 0; a < config.eval.attacks.size(); ++a) {
      const AttackSpec& attack = config.eval.attacks[a];
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "clean_accuracy", params[i], m.clean_accuracy});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "adv_accuracy", params[i], m.adv_accuracy[a]});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "clean_loss", params[i], m.clean_loss});
      rows.push_back(
          {to_string(attack.method), attack.epsilon, "adv_loss", params[i], m.adv_loss[a]});
    }
  }
  return rows;
}

std::string regularizer_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "attack,epsilon,metric,lambda,value\n";
  for (const auto& r : rows)
    out << r.attack << "," << format_double(r.epsilon) << "," << r.metric << ","
        << format_double(r.param) << "," << format_double(r.value) << "\n";
  return out.str();
}

std::string block_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "b,metric,attack,epsilon,value\n";
  for (const auto& r : rows)
    out << format_double(r.param) << "," << r.metric << "," << r.attack << ","
        << format_double(r.epsilon) << "," << format_double(r.value) << "\n";
  return out.str();
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "spearman: need matched series");
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
      i = j + 1;
    }
    return rank;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace acl
