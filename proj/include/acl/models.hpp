#pragma once

#include <string>
#include <variant>
#include <vector>

#include "acl/graph.hpp"
#include "acl/norms.hpp"
#include "acl/rng.hpp"

namespace acl {

// Feature extractor classes. Linear maps carry an induced-p operator norm
// budget; MLPs carry per-layer Frobenius or l_{1,inf} budgets. No bias terms.

struct LinearExtractor {
  Matrix weight;        // n x m
  double p = 2.0;       // induced norm index, in {1, 2, inf}
  double budget = 1.0;  // |||W|||_p <= budget

  Eigen::Index input_dim() const { return weight.cols(); }
  Eigen::Index output_dim() const { return weight.rows(); }
};

enum class ConstraintKind { Frobenius, OneInf };

struct MlpExtractor {
  std::vector<Matrix> layers;  // W_l: h_l x h_{l-1}, h_0 = m, h_d = n
  ActKind activation = ActKind::Relu;
  double leaky_alpha = 0.01;
  ConstraintKind constraint = ConstraintKind::Frobenius;
  std::vector<double> budgets;  // one per layer

  Eigen::Index input_dim() const { return layers.front().cols(); }
  Eigen::Index output_dim() const { return layers.back().rows(); }
  int depth() const { return static_cast<int>(layers.size()); }
  // All supported activations are 1-Lipschitz with sigma(0) = 0.
  double activation_lipschitz() const { return 1.0; }
  std::vector<Eigen::Index> widths() const {
    std::vector<Eigen::Index> h{layers.front().cols()};
    for (const auto& w : layers) h.push_back(w.rows());
    return h;
  }
};

using FeatureExtractor = std::variant<LinearExtractor, MlpExtractor>;

Eigen::Index input_dim(const FeatureExtractor& f);
Eigen::Index output_dim(const FeatureExtractor& f);

// W_d sigma(W_{d-1} sigma( ... sigma(W_1 x)))  — no activation after the top
// layer, so depth 1 is a plain linear map.
Vector forward(const FeatureExtractor& f, const Vector& x);
Matrix forward_rows(const FeatureExtractor& f, const Matrix& xs);  // row-wise batch

// Declared norm of each constrained matrix (single entry for linear models).
std::vector<double> constrained_norms(const FeatureExtractor& f);
std::vector<double> declared_budgets(const FeatureExtractor& f);

// Radial projection: any constrained norm above its budget is rescaled by
// budget/norm; feasible weights are returned bit-exactly unchanged.
FeatureExtractor project_to_budget(FeatureExtractor f);
bool within_budget(const FeatureExtractor& f, double slack = 1e-9);

// s(p, q, n) = n^{max{1/p - 1/q, 1/q - 1/p}}
inline double s_factor(double p, double q, std::size_t n) { return dimension_factor(p, q, n); }

enum class MatrixNormKind { InducedP, Frobenius, OneInf, GroupPQ };
double matrix_norm(const Matrix& a, MatrixNormKind kind, double p = 2.0, double q = kInf);

// Layer-uniform init on (-a, a) with a = 1/sqrt(fan_in), then projected.
FeatureExtractor random_like(const FeatureExtractor& prototype, std::uint64_t seed);

// Appends the feature-extractor subgraph for input node `x` using weight
// leaves named "W1".."Wd" (registered on first use); returns the feature node.
int append_forward_graph(Graph& g, const FeatureExtractor& f, int x_node);
std::vector<std::string> weight_leaf_names(const FeatureExtractor& f);
void bind_weights(const FeatureExtractor& f, Graph::Bindings& b, const Graph& g,
                  std::vector<Tensor>& storage);

std::string to_string(ActKind a);
ActKind act_kind_from_string(const std::string& s);
std::string to_string(ConstraintKind c);
ConstraintKind constraint_kind_from_string(const std::string& s);

}  // namespace acl
