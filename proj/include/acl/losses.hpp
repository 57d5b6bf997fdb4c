#pragma once

#include <functional>
#include <string>

#include "acl/common.hpp"
#include "acl/rng.hpp"

namespace acl {

enum class LossKind { Hinge, Logistic };

struct LossSpec {
  LossKind kind = LossKind::Hinge;
};

// Score-vector losses. Both are convex and non-increasing in every coordinate.
//   hinge:    max{0, 1 + max_i(-v_i)}
//   logistic: log2(1 + sum_i exp(-v_i)), evaluated with a log-sum-exp shift
double hinge_loss(const Vector& scores);
double logistic_loss(const Vector& scores);
double loss(const LossSpec& spec, const Vector& scores);

// Loss of the N-dimensional zero vector: hinge -> 1, logistic -> log2(1 + N).
double loss_at_zero(const LossSpec& spec, int n);

// l({ f(x)^T (f(x+) - f(x-_i)) }_{i=1..k}); f_negs holds one negative per row.
double contrastive_loss(const LossSpec& spec, const Vector& f_x, const Vector& f_pos,
                        const Matrix& f_negs);

// l( f(x)^T ( mean_j f(x+_j) - mean_j f(x-_j) ) ); one block member per row.
double block_loss(const LossSpec& spec, const Vector& f_x, const Matrix& f_pos_block,
                  const Matrix& f_neg_block);

// Lipschitz constant of the scalar (k = 1) loss path: hinge 1, logistic 1/ln 2.
double lipschitz_constant(const LossSpec& spec, int k = 1);

// Upper bound of the loss over score vectors with coordinates in
// [v_min, v_max]; v_min must be finite.
//   hinge:    max(0, 1 + max(0, -v_min))
//   logistic: log2(1 + k exp(-v_min))
double effective_bound(const LossSpec& spec, double v_min, double v_max, int k = 1);

// Partition-inequality check: for random v and random non-empty covers
// I1 u I2 = [d], asserts  l(v_I1) <= l(v) <= l(v_I1) + l(v_I2)  and the
// symmetric statement. `worst_margin` is the most negative slack seen.
struct Assumption1Report {
  bool pass = true;
  double worst_margin = kInf;
  int trials = 0;
};
Assumption1Report check_assumption1(const LossSpec& spec, int trials, int k_max,
                                    std::uint64_t seed);
Assumption1Report check_assumption1(const std::function<double(const Vector&)>& fn, int trials,
                                    int k_max, std::uint64_t seed);

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

}  // namespace acl
