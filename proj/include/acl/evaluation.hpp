#pragma once

#include <optional>

#include "acl/attacks.hpp"
#include "acl/synthdata.hpp"

namespace acl {

// Linear head whose row for class c is the empirical mean feature of class c.
struct MeanClassifier {
  Matrix rows;                   // |T| x n
  std::vector<int> class_order;  // class id per row
};

struct RiskEstimate {
  std::string kind;
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

RiskEstimate mc_estimate(const std::string& kind, const std::vector<double>& samples);

MeanClassifier fit_mean_classifier(const FeatureExtractor& f, const SupervisedTaskSet& data);

// Margin-loss head trained by full-batch gradient descent on the same loss;
// a tighter upper proxy for the infimum-based risk than the mean classifier.
// Labeled like the mean classifier, it makes no claim of attaining the inf.
MeanClassifier fit_trained_head(const FeatureExtractor& f, const SupervisedTaskSet& data,
                                const LossSpec& loss, int steps = 200, double lr = 0.5);

struct SupervisedEval {
  RiskEstimate risk;      // margin loss, attacked when an attack is given
  double accuracy = 0.0;  // 0-1 companion metric at the (attacked) points
  double accuracy_stderr = 0.0;
};

// MC estimate of the multiclass margin-loss risk of g = W f on labeled
// points; the attack (if any) runs through the composed classifier with the
// same engine used everywhere else.
SupervisedEval supervised_risk(const FeatureExtractor& f, const MeanClassifier& head,
                               const SupervisedTaskSet& points, const LossSpec& loss,
                               const std::optional<AttackSpec>& attack);

// MC estimate of the (attacked) unsupervised risk on fresh tuples from the
// generator. `block` selects the block composition with b = slots.
RiskEstimate unsup_risk(const FeatureExtractor& f, const LatentClassModel& model, int slots,
                        bool block, const LossSpec& loss,
                        const std::optional<AttackSpec>& attack, std::size_t n_mc,
                        std::uint64_t seed);

enum class TaskSampling {
  AllDistinct,  // (k+1) classes ~ rho^{k+1} conditioned on pairwise distinct
  Collapsed     // tuple ~ rho^{k+1} | c-_i != c+, task = distinct set
};

// Outer MC over tasks, inner: fit a mean classifier from fresh labeled
// samples (n_fit per class) and estimate the adversarial supervised risk on
// n_eval points; stderr is computed across tasks.
RiskEstimate avg_adv_sup_risk_mu(const FeatureExtractor& f, const LatentClassModel& model, int k,
                                 const LossSpec& loss, const std::optional<AttackSpec>& attack,
                                 std::size_t n_tasks, std::size_t n_fit_per_class,
                                 std::size_t n_eval, std::uint64_t seed, TaskSampling sampling);

// Distinct (k+1)-tuple of classes ~ rho^{k+1} conditioned on all-distinct.
std::vector<int> sample_distinct_task(const LatentClassModel& model, int k, Rng& rng);

}  // namespace acl
