#pragma once

#include <optional>
#include <utility>

#include "acl/losses.hpp"
#include "acl/models.hpp"

namespace acl {

enum class AttackMethod { Fgsm, Pgd, ExactLinear };

struct AttackSpec {
  double p = kInf;      // ball norm index; {2, inf} for fgsm/pgd, {1, 2, inf} for exact
  double epsilon = 0.0;
  AttackMethod method = AttackMethod::Pgd;
  int steps = 20;
  double step_size = 0.0;  // 0 picks the default epsilon / 4
  bool random_start = false;

  double effective_step() const { return step_size > 0.0 ? step_size : epsilon / 4.0; }
};

std::string to_string(AttackMethod m);
AttackMethod attack_method_from_string(const std::string& s);

// Maximizes l({ f(x')^T d_i }_i) over the epsilon-ball around x, for fixed
// difference vectors d_i (rows of D). Contrastive, block and supervised-margin
// attacks all reduce to this objective. Holds a prebuilt gradient graph, so
// one engine per (extractor shape, k); an engine is single-threaded.
class ScoreAttack {
 public:
  ScoreAttack(const FeatureExtractor& extractor, const LossSpec& loss, int k);

  // Returns the attacked anchor; the reported point is the best feasible
  // iterate visited, so its loss never falls below the clean loss.
  Vector run(const AttackSpec& spec, const Vector& x, const Matrix& d, Rng* rng = nullptr);

  double loss_at(const Vector& x, const Matrix& d);
  const FeatureExtractor& extractor() const { return *extractor_; }
  // Re-reads the extractor weights; call after the extractor has been updated
  // in place (run() does this itself).
  void sync_weights();

 private:
  Vector gradient_at(const Vector& x, const Matrix& d);
  double eval_bound(const Vector& x, const Matrix& d, bool with_grad, Vector* grad);
  Vector exact_run(const AttackSpec& spec, const Vector& x, const Matrix& d) const;

  const FeatureExtractor* extractor_;
  LossSpec loss_;
  int k_;
  Graph graph_;
  int x_leaf_ = -1;
  std::vector<int> d_leaf_idx_;
  std::vector<Tensor> weights_;
  Graph::Workspace ws_;
};

// Contrastive attack on one tuple (x, x+, x-_1..x-_k); block = false expects
// one negative per row of x_negs, block = true averages positives/negatives
// and perturbs only the anchor.
Vector attack(const AttackSpec& spec, const FeatureExtractor& extractor, const Vector& x,
              const Vector& x_pos, const Matrix& x_negs, const LossSpec& loss,
              std::optional<std::uint64_t> seed = std::nullopt);
Vector attack_block(const AttackSpec& spec, const FeatureExtractor& extractor, const Vector& x,
                    const Matrix& pos_block, const Matrix& neg_block, const LossSpec& loss,
                    std::optional<std::uint64_t> seed = std::nullopt);

// Exact minimizer of f(x')^T (f(x+) - f(x-)) over the l_r ball (k = 1):
//   score = x^T W^T W (x+ - x-) - epsilon ||W^T W (x+ - x-)||_{r*}
// attained at x~ = x - epsilon * dual_unit(W^T W (x+ - x-), r).
std::pair<Vector, double> exact_linear_adversary(const LinearExtractor& extractor,
                                                 const Vector& x, const Vector& x_pos,
                                                 const Vector& x_neg, double r, double epsilon);

// Ball geometry helpers shared with PGD.
Vector project_to_ball(const Vector& center, const Vector& point, double p, double epsilon);
Vector random_ball_point(const Vector& center, double p, double epsilon, Rng& rng);

}  // namespace acl
