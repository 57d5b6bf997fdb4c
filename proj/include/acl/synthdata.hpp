#pragma once

#include <optional>
#include <vector>

#include "acl/common.hpp"
#include "acl/rng.hpp"

namespace acl {

// Finite latent-class generative model. Each class samples an isotropic
// Gaussian around its mean, optionally hard-clamped to the box [-R, R]^m so
// the domain is bounded.
struct ClassSpec {
  Vector mean;
  double stddev = 0.0;
};

struct LatentClassModel {
  std::vector<ClassSpec> classes;
  Vector rho;                         // class probabilities, sums to 1
  std::optional<double> clamp_box;    // half-width R of the clamp box

  std::size_t num_classes() const { return classes.size(); }
  Eigen::Index dim() const { return classes.front().mean.size(); }

  void validate() const;
  Vector sample_point(int c, Rng& rng) const;

  // Collision probabilities, exact closed forms:
  //   tau   = sum_c rho(c)^2
  //   tau_k = 1 - sum_c rho(c) (1 - rho(c))^k
  double tau() const;
  double tau_k(int k) const;
};

// Uniform-rho model with class means placed deterministically on a sphere.
LatentClassModel make_gaussian_model(int num_classes, Eigen::Index dim, double mean_radius,
                                     double stddev, std::optional<double> clamp_box,
                                     std::uint64_t seed);

struct ContrastiveBatch {
  enum class Mode { Pair, Block };
  Mode mode = Mode::Pair;
  int slots = 1;  // k negatives (pair) or block size b

  Matrix anchors;                 // M x m
  std::vector<Matrix> positives;  // pair: 1 slot; block: b slots, each M x m
  std::vector<Matrix> negatives;  // pair: k slots; block: b slots

  // Per-row provenance of the generating classes.
  std::vector<int> anchor_class;
  std::vector<std::vector<int>> negative_class;  // per row: k entries (pair) or 1 (block)

  std::size_t size() const { return static_cast<std::size_t>(anchors.rows()); }
  Eigen::Index dim() const { return anchors.cols(); }
  void check_consistent() const;
};

// Pair tuples (x, x+, x-_1..x-_k): c+ ~ rho, x, x+ ~ D_{c+}^2, and each
// negative independently via c- ~ rho then x- ~ D_{c-}.
ContrastiveBatch sample_pairs(const LatentClassModel& model, std::size_t M, int k,
                              std::uint64_t seed);

// Block tuples (x, x+_1..x+_b, x-_1..x-_b): c+, c- ~ rho^2, anchor and b
// positives from D_{c+}, b negatives from D_{c-}. The draw path is shared
// with sample_pairs so that b = 1 reproduces k = 1 pair batches exactly.
ContrastiveBatch sample_blocks(const LatentClassModel& model, std::size_t M, int b,
                               std::uint64_t seed);

enum class TaskDistPolicy { Uniform, RhoConditional };

struct SupervisedTaskSet {
  std::vector<int> task;  // distinct class ids
  Vector dist;            // D_T over task classes
  Matrix points;          // N x m
  std::vector<int> labels;  // class ids drawn from task

  std::size_t size() const { return labels.size(); }
};

// Task draw: (c+, c-_1..c-_k) ~ rho^{k+1} conditioned on c-_i != c+ for all i
// (rejection sampling, capped), task = set of distinct classes. Labeled
// points follow D_T(c) D_c(x).
SupervisedTaskSet sample_task(const LatentClassModel& model, int k, TaskDistPolicy policy,
                              std::size_t N, std::uint64_t seed);

// Labeled points for a fixed task (used when the task is chosen externally).
SupervisedTaskSet sample_points_for_task(const LatentClassModel& model,
                                         const std::vector<int>& task, TaskDistPolicy policy,
                                         std::size_t N, std::uint64_t seed);

inline constexpr std::size_t kTaskRejectionCap = 1000000;

}  // namespace acl
