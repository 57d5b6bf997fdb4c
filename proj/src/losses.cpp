#include "acl/losses.hpp"

#include <algorithm>
#include <cmath>

namespace acl {

double hinge_loss(const Vector& scores) {
  require(scores.size() > 0, "hinge_loss: empty score vector");
  return std::max(0.0, 1.0 - scores.minCoeff());
}

double logistic_loss(const Vector& scores) {
  require(scores.size() > 0, "logistic_loss: empty score vector");
  // log2(1 + sum exp(-v_i)) via a shifted log-sum-exp over {0} u {-v_i}.
  double shift = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) shift = std::max(shift, -scores[i]);
  double acc = std::exp(-shift);
  for (Eigen::Index i = 0; i < scores.size(); ++i) acc += std::exp(-scores[i] - shift);
  return (shift + std::log(acc)) / std::log(2.0);
}

double loss(const LossSpec& spec, const Vector& scores) {
  return spec.kind == LossKind::Hinge ? hinge_loss(scores) : logistic_loss(scores);
}

double loss_at_zero(const LossSpec& spec, int n) {
  require(n >= 0, "loss_at_zero: negative dimension");
  if (spec.kind == LossKind::Hinge) return 1.0;
  return std::log2(1.0 + static_cast<double>(n));
}

double contrastive_loss(const LossSpec& spec, const Vector& f_x, const Vector& f_pos,
                        const Matrix& f_negs) {
  require(f_x.size() == f_pos.size() && f_negs.cols() == f_x.size(),
          "contrastive_loss: feature dimension mismatch");
  require(f_negs.rows() >= 1, "contrastive_loss: need at least one negative");
  Vector v(f_negs.rows());
  for (Eigen::Index i = 0; i < f_negs.rows(); ++i)
    v[i] = f_x.dot(f_pos - f_negs.row(i).transpose());
  return loss(spec, v);
}

double block_loss(const LossSpec& spec, const Vector& f_x, const Matrix& f_pos_block,
                  const Matrix& f_neg_block) {
  require(f_pos_block.rows() >= 1 && f_pos_block.rows() == f_neg_block.rows(),
          "block_loss: block sizes differ");
  require(f_pos_block.cols() == f_x.size() && f_neg_block.cols() == f_x.size(),
          "block_loss: feature dimension mismatch");
  const Vector mean_pos = f_pos_block.colwise().mean().transpose();
  const Vector mean_neg = f_neg_block.colwise().mean().transpose();
  Vector v(1);
  v[0] = f_x.dot(mean_pos - mean_neg);
  return loss(spec, v);
}

double lipschitz_constant(const LossSpec& spec, int /*k*/) {
  return spec.kind == LossKind::Hinge ? 1.0 : 1.0 / std::log(2.0);
}

double effective_bound(const LossSpec& spec, double v_min, double v_max, int k) {
  require(std::isfinite(v_min) && v_min <= v_max, "effective_bound: need a finite score range");
  require(k >= 1, "effective_bound: k must be >= 1");
  if (spec.kind == LossKind::Hinge) return std::max(0.0, 1.0 + std::max(0.0, -v_min));
  return std::log2(1.0 + static_cast<double>(k) * std::exp(-v_min));
}

Assumption1Report check_assumption1(const std::function<double(const Vector&)>& fn, int trials,
                                    int k_max, std::uint64_t seed) {
  require(trials >= 1 && k_max >= 1, "check_assumption1: trials and k_max must be >= 1");
  Rng rng(seed);
  Assumption1Report report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const int d = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k_max)));
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.uniform(-4.0, 4.0);

    // Random cover: every index lands in I1, I2, or both; patch up empties.
    std::vector<int> in1, in2;
    for (int i = 0; i < d; ++i) {
      switch (rng.uniform_index(3)) {
        case 0:
          in1.push_back(i);
          break;
        case 1:
          in2.push_back(i);
          break;
        default:
          in1.push_back(i);
          in2.push_back(i);
          break;
      }
    }
    if (in1.empty()) in1.push_back(static_cast<int>(rng.uniform_index(d)));
    if (in2.empty()) in2.push_back(static_cast<int>(rng.uniform_index(d)));

    auto subvec = [&](const std::vector<int>& idx) {
      Vector s(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) s[static_cast<Eigen::Index>(j)] = v[idx[j]];
      return s;
    };
    const double full = fn(v);
    const double l1 = fn(subvec(in1));
    const double l2 = fn(subvec(in2));
    const double margins[4] = {full - l1, full - l2, (l1 + l2) - full, (l1 + l2) - full};
    for (double m : margins) report.worst_margin = std::min(report.worst_margin, m);
  }
  report.pass = report.worst_margin >= -1e-12;
  return report;
}

Assumption1Report check_assumption1(const LossSpec& spec, int trials, int k_max,
                                    std::uint64_t seed) {
  return check_assumption1([&](const Vector& v) { return loss(spec, v); }, trials, k_max, seed);
}

std::string to_string(LossKind kind) { return kind == LossKind::Hinge ? "hinge" : "logistic"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "hinge") return LossKind::Hinge;
  if (s == "logistic") return LossKind::Logistic;
  throw ConfigError("unknown loss kind: " + s);
}

}  // namespace acl
