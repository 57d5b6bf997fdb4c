#pragma once

#include "acl/attacks.hpp"
#include "acl/synthdata.hpp"

namespace acl {

struct TrainConfig {
  double lambda = 0.0;        // Frobenius regularizer weight
  double lr = 0.001;
  double momentum = 0.0;
  double weight_decay = 0.0;
  int batch_size = 32;
  int iterations = 100;
  AttackSpec attack;
  LossSpec loss;
  std::uint64_t seed = 0;
  bool project_each_step = true;
  int log_interval = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<int> iteration;
  std::vector<double> risk;         // batch-mean adversarial loss at theta_t
  std::vector<double> regularizer;  // N(f) = sum_l ||W_l||_F
  std::vector<std::vector<double>> layer_norms;
};

// Sum of per-layer Frobenius norms and its gradient contribution.
double frobenius_regularizer(const FeatureExtractor& f);

// Minibatch SGD with momentum on the attacked empirical contrastive risk plus
// lambda * N(f): per iteration sample a batch with replacement, regenerate an
// adversarial anchor for every visited tuple, take one gradient step, and
// optionally project back onto the declared budgets. Deterministic per seed.
std::pair<FeatureExtractor, TrainReport> aerm_train(const TrainConfig& config,
                                                    FeatureExtractor model,
                                                    const ContrastiveBatch& data);

// Mean over all tuples of the attacked contrastive loss at a fixed model.
double empirical_surrogate_risk(const FeatureExtractor& model, const ContrastiveBatch& data,
                                const AttackSpec& attack, const LossSpec& loss,
                                std::uint64_t attack_seed = 0);

// Shared full-objective gradient engine (also used by the Rademacher
// estimator): evaluates one tuple's loss and accumulates d(loss)/d(weights).
class TupleGradient {
 public:
  TupleGradient(const FeatureExtractor& prototype, const LossSpec& loss,
                ContrastiveBatch::Mode mode, int slots);

  // Computes the loss at (anchor, positives, negatives) and adds
  // `scale` * gradient into grad_accum (one matrix per layer).
  double accumulate(const FeatureExtractor& f, const Vector& anchor, const Matrix& positives,
                    const Matrix& negatives, double scale, std::vector<Matrix>& grad_accum);
  double loss_only(const FeatureExtractor& f, const Vector& anchor, const Matrix& positives,
                   const Matrix& negatives);

 private:
  double run(const FeatureExtractor& f, const Vector& anchor, const Matrix& positives,
             const Matrix& negatives, bool with_grad, double scale,
             std::vector<Matrix>* grad_accum);

  LossSpec loss_;
  ContrastiveBatch::Mode mode_;
  int slots_;
  Graph graph_;
  std::vector<int> weight_leaf_idx_;
  int x_idx_ = -1;
  std::vector<int> pos_idx_, neg_idx_;
  Graph::Workspace ws_;
};

}  // namespace acl
