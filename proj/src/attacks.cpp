#include "acl/attacks.hpp"

#include <cmath>

namespace acl {

std::string to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::Fgsm:
      return "fgsm";
    case AttackMethod::Pgd:
      return "pgd";
    case AttackMethod::ExactLinear:
      return "exact-linear";
  }
  return "pgd";
}

AttackMethod attack_method_from_string(const std::string& s) {
  if (s == "fgsm") return AttackMethod::Fgsm;
  if (s == "pgd") return AttackMethod::Pgd;
  if (s == "exact-linear") return AttackMethod::ExactLinear;
  throw ConfigError("unknown attack method: " + s);
}

Vector project_to_ball(const Vector& center, const Vector& point, double p, double epsilon) {
  Vector delta = point - center;
  if (std::isinf(p)) {
    for (Eigen::Index i = 0; i < delta.size(); ++i)
      delta[i] = std::clamp(delta[i], -epsilon, epsilon);
  } else if (p == 2.0) {
    const double n = delta.norm();
    if (n > epsilon && n > 0.0) delta *= epsilon / n;
  } else {
    throw std::invalid_argument("project_to_ball: only p in {2, inf} supported");
  }
  return center + delta;
}

Vector random_ball_point(const Vector& center, double p, double epsilon, Rng& rng) {
  const Eigen::Index m = center.size();
  if (std::isinf(p)) return center + rng.uniform_vector(m, -epsilon, epsilon);
  if (p == 2.0) {
    Vector dir = rng.normal_vector(m);
    const double n = dir.norm();
    if (n > 0.0) dir /= n;
    const double radius = epsilon * std::pow(rng.uniform(), 1.0 / static_cast<double>(m));
    return center + radius * dir;
  }
  throw std::invalid_argument("random_ball_point: only p in {2, inf} supported");
}

ScoreAttack::ScoreAttack(const FeatureExtractor& extractor, const LossSpec& loss, int k)
    : extractor_(&extractor), loss_(loss), k_(k) {
  require(k >= 1, "ScoreAttack: k must be >= 1");
  x_leaf_ = graph_.leaf("x");
  const int feat = append_forward_graph(graph_, extractor, x_leaf_);
  std::vector<int> scores;
  scores.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int d_leaf = graph_.leaf("d" + std::to_string(i));
    d_leaf_idx_.push_back(graph_.leaf_index("d" + std::to_string(i)));
    scores.push_back(graph_.dot(feat, d_leaf));
  }
  const int packed = graph_.pack(scores);
  const int out = loss_.kind == LossKind::Hinge ? graph_.hinge_reduce(packed)
                                                : graph_.logistic_reduce(packed);
  graph_.set_output(out);
  sync_weights();
}

void ScoreAttack::sync_weights() {
  Graph::Bindings probe(graph_);
  bind_weights(*extractor_, probe, graph_, weights_);
}

double ScoreAttack::eval_bound(const Vector& x, const Matrix& d, bool with_grad, Vector* grad) {
  Graph::Bindings b(graph_);
  const auto names = weight_leaf_names(*extractor_);
  for (std::size_t i = 0; i < names.size(); ++i) b.set(graph_.leaf_index(names[i]), weights_[i]);
  const Tensor tx = Tensor::vector(x);
  b.set(graph_.leaf_index("x"), tx);
  std::vector<Tensor> drows;
  drows.reserve(static_cast<std::size_t>(k_));
  for (int i = 0; i < k_; ++i) drows.push_back(Tensor::vector(d.row(i).transpose()));
  for (int i = 0; i < k_; ++i) b.set(d_leaf_idx_[static_cast<std::size_t>(i)], drows[i]);
  if (!with_grad) return graph_.evaluate(b, ws_);
  std::vector<Tensor> grads;
  graph_.gradient(b, {graph_.leaf_index("x")}, grads, ws_);
  *grad = grads[0].vec();
  require(grad->allFinite(), "attack: non-finite gradient");
  return 0.0;
}

double ScoreAttack::loss_at(const Vector& x, const Matrix& d) {
  sync_weights();
  return eval_bound(x, d, false, nullptr);
}

Vector ScoreAttack::gradient_at(const Vector& x, const Matrix& d) {
  Vector g;
  eval_bound(x, d, true, &g);
  return g;
}

Vector ScoreAttack::exact_run(const AttackSpec& spec, const Vector& x, const Matrix& d) const {
  const auto* lin = std::get_if<LinearExtractor>(extractor_);
  require(lin != nullptr, "exact-linear attack: extractor must be linear");
  require(k_ == 1 || loss_.kind == LossKind::Hinge,
          "exact-linear attack: k > 1 requires the hinge loss");
  // Per-coordinate minima are attained independently; for the hinge loss the
  // worst coordinate decides the sup, so its minimizer attains it.
  int worst = 0;
  double worst_value = -kInf;
  Matrix duals(k_, x.size());
  for (int i = 0; i < k_; ++i) {
    const Vector g = lin->weight.transpose() * d.row(i).transpose();
    duals.row(i) = holder_dual_unit(g, spec.p).transpose();
    const double v_min = x.dot(g) - spec.epsilon * lp_norm(g, conjugate_exponent(spec.p));
    if (-v_min > worst_value) {
      worst_value = -v_min;
      worst = i;
    }
  }
  return x - spec.epsilon * duals.row(worst).transpose();
}

Vector ScoreAttack::run(const AttackSpec& spec, const Vector& x, const Matrix& d, Rng* rng) {
  require(spec.epsilon >= 0.0, "attack: epsilon must be non-negative");
  require(d.rows() == k_, "attack: wrong number of difference vectors");
  if (spec.epsilon == 0.0) return x;
  if (spec.method == AttackMethod::ExactLinear) return exact_run(spec, x, d);
  sync_weights();

  Vector best = x;
  double best_loss = eval_bound(x, d, false, nullptr);

  auto consider = [&](const Vector& cand) {
    const double l = eval_bound(cand, d, false, nullptr);
    if (l > best_loss) {
      best_loss = l;
      best = cand;
    }
  };

  if (spec.method == AttackMethod::Fgsm) {
    const Vector g = gradient_at(x, d);
    consider(project_to_ball(x, x + spec.epsilon * holder_dual_unit(g, spec.p), spec.p,
                             spec.epsilon));
    return best;
  }

  // PGD with best-iterate tracking.
  Vector cur = x;
  if (spec.random_start) {
    require(rng != nullptr, "attack: random_start needs an rng");
    cur = random_ball_point(x, spec.p, spec.epsilon, *rng);
    consider(cur);
  }
  const double step = spec.effective_step();
  for (int t = 0; t < spec.steps; ++t) {
    const Vector g = gradient_at(cur, d);
    cur = project_to_ball(x, cur + step * holder_dual_unit(g, spec.p), spec.p, spec.epsilon);
    consider(cur);
  }
  return best;
}

namespace {

Matrix pair_difference_rows(const FeatureExtractor& extractor, const Vector& x_pos,
                            const Matrix& x_negs) {
  const Vector f_pos = forward(extractor, x_pos);
  Matrix d(x_negs.rows(), f_pos.size());
  for (Eigen::Index i = 0; i < x_negs.rows(); ++i)
    d.row(i) = (f_pos - forward(extractor, x_negs.row(i).transpose())).transpose();
  return d;
}

}  // namespace

Vector attack(const AttackSpec& spec, const FeatureExtractor& extractor, const Vector& x,
              const Vector& x_pos, const Matrix& x_negs, const LossSpec& loss,
              std::optional<std::uint64_t> seed) {
  ScoreAttack engine(extractor, loss, static_cast<int>(x_negs.rows()));
  const Matrix d = pair_difference_rows(extractor, x_pos, x_negs);
  if (seed) {
    Rng rng(*seed);
    return engine.run(spec, x, d, &rng);
  }
  return engine.run(spec, x, d, nullptr);
}

Vector attack_block(const AttackSpec& spec, const FeatureExtractor& extractor, const Vector& x,
                    const Matrix& pos_block, const Matrix& neg_block, const LossSpec& loss,
                    std::optional<std::uint64_t> seed) {
  ScoreAttack engine(extractor, loss, 1);
  const Matrix f_pos = forward_rows(extractor, pos_block);
  const Matrix f_neg = forward_rows(extractor, neg_block);
  Matrix d(1, f_pos.cols());
  d.row(0) = f_pos.colwise().mean() - f_neg.colwise().mean();
  if (seed) {
    Rng rng(*seed);
    return engine.run(spec, x, d, &rng);
  }
  return engine.run(spec, x, d, nullptr);
}

std::pair<Vector, double> exact_linear_adversary(const LinearExtractor& extractor,
                                                 const Vector& x, const Vector& x_pos,
                                                 const Vector& x_neg, double r, double epsilon) {
  require(epsilon >= 0.0, "exact_linear_adversary: epsilon must be non-negative");
  require(r == 1.0 || r == 2.0 || std::isinf(r),
          "exact_linear_adversary: r must be in {1, 2, inf}");
  const Vector g = extractor.weight.transpose() * (extractor.weight * (x_pos - x_neg));
  const double score = x.dot(g) - epsilon * lp_norm(g, conjugate_exponent(r));
  const Vector x_adv = x - epsilon * holder_dual_unit(g, r);
  return {x_adv, score};
}

}  // namespace acl
