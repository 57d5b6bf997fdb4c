#pragma once

#include <string>
#include <vector>

#include "acl/io.hpp"

namespace acl {

// Configuration-driven experiment runner: trains AERM on synthetic latent
// class data and evaluates the mean classifier on the full downstream task.

struct EvalConfig {
  std::size_t n_fit_per_class = 200;
  std::size_t n_eval = 1000;
  std::vector<AttackSpec> attacks;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  LatentClassModel generator;
  FeatureExtractor model_prototype;
  TrainConfig train;
  std::size_t data_M = 2048;
  int data_k = 1;
  EvalConfig eval;
  std::vector<double> lambda_list;
  std::vector<int> b_list;
  std::string config_hash;
};

AttackSpec attack_spec_from_json(const Json& j);
Json attack_spec_to_json(const AttackSpec& spec);
TrainConfig train_config_from_json(const Json& j);
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Metrics of one train+eval run: clean and attacked accuracy / margin loss of
// the mean classifier on the full class set.
struct RunMetrics {
  double clean_accuracy = 0.0;
  double clean_loss = 0.0;
  std::vector<double> adv_accuracy;  // one per eval attack
  std::vector<double> adv_loss;
  std::vector<double> final_layer_norms;
};

// Trains with the given regularizer weight (pair mode, k = data_k) or block
// size (block mode, when block_size > 0) and evaluates downstream.
RunMetrics run_single(const ExperimentConfig& config, double lambda, int block_size,
                      std::uint64_t seed);

struct SweepRow {
  std::string attack;  // attack label "pgd"/"fgsm" or "none"
  double epsilon = 0.0;
  std::string metric;
  double param = 0.0;  // lambda or b
  double value = 0.0;
};

std::vector<SweepRow> run_regularizer_sweep(const ExperimentConfig& config, int parallel = 1);
std::vector<SweepRow> run_block_sweep(const ExperimentConfig& config, int parallel = 1);

// CSV layouts: regularizer sweep `attack,epsilon,metric,lambda,value`,
// block sweep `b,metric,attack,epsilon,value`.
std::string regularizer_sweep_csv(const std::vector<SweepRow>& rows);
std::string block_sweep_csv(const std::vector<SweepRow>& rows);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace acl
