#include "acl/models.hpp"

#include <cmath>

namespace acl {

double spectral_norm_power_iteration(const Matrix& a, double rel_tol, int max_iter) {
  if (a.size() == 0) return 0.0;
  // Iterate on the smaller Gram matrix.
  const bool tall = a.rows() >= a.cols();
  const Matrix gram = tall ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  const Eigen::Index n = gram.rows();
  if (gram.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // Deterministic start with a small ramp so symmetric ties are broken.
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
  v /= v.norm();

  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = gram * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const double next = v.dot(gram * v);
    if (std::abs(next - lambda) <= rel_tol * std::max(next, 1e-300)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

double induced_norm(const Matrix& a, double p) {
  if (p == 1.0) {
    // max column l1
    double best = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) best = std::max(best, a.col(j).cwiseAbs().sum());
    return best;
  }
  if (std::isinf(p)) {
    // max row l1
    double best = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) best = std::max(best, a.row(i).cwiseAbs().sum());
    return best;
  }
  if (p == 2.0) return spectral_norm_power_iteration(a);
  throw std::invalid_argument("induced_norm: only p in {1, 2, inf} supported");
}

double matrix_norm(const Matrix& a, MatrixNormKind kind, double p, double q) {
  switch (kind) {
    case MatrixNormKind::InducedP:
      return induced_norm(a, p);
    case MatrixNormKind::Frobenius:
      return frobenius_norm(a);
    case MatrixNormKind::OneInf:
      return one_inf_norm(a);
    case MatrixNormKind::GroupPQ:
      return group_norm(a, p, q);
  }
  return 0.0;
}

Eigen::Index input_dim(const FeatureExtractor& f) {
  return std::visit([](const auto& m) { return m.input_dim(); }, f);
}

Eigen::Index output_dim(const FeatureExtractor& f) {
  return std::visit([](const auto& m) { return m.output_dim(); }, f);
}

namespace {

double apply_act(double x, ActKind kind, double alpha) {
  switch (kind) {
    case ActKind::Relu:
      return x > 0.0 ? x : 0.0;
    case ActKind::Tanh:
      return std::tanh(x);
    case ActKind::LeakyRelu:
      return x > 0.0 ? x : alpha * x;
  }
  return 0.0;
}

}  // namespace

Vector forward(const FeatureExtractor& f, const Vector& x) {
  if (const auto* lin = std::get_if<LinearExtractor>(&f)) {
    require(x.size() == lin->weight.cols(), "forward: input dimension mismatch");
    return lin->weight * x;
  }
  const auto& mlp = std::get<MlpExtractor>(f);
  require(x.size() == mlp.input_dim(), "forward: input dimension mismatch");
  Vector z = mlp.layers[0] * x;
  for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] = apply_act(z[i], mlp.activation, mlp.leaky_alpha);
    z = mlp.layers[l] * z;
  }
  return z;
}

Matrix forward_rows(const FeatureExtractor& f, const Matrix& xs) {
  Matrix out(xs.rows(), output_dim(f));
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    out.row(i) = forward(f, xs.row(i).transpose()).transpose();
  return out;
}

std::vector<double> constrained_norms(const FeatureExtractor& f) {
  if (const auto* lin = std::get_if<LinearExtractor>(&f))
    return {induced_norm(lin->weight, lin->p)};
  const auto& mlp = std::get<MlpExtractor>(f);
  std::vector<double> out;
  out.reserve(mlp.layers.size());
  for (const auto& w : mlp.layers)
    out.push_back(mlp.constraint == ConstraintKind::Frobenius ? frobenius_norm(w)
                                                              : one_inf_norm(w));
  return out;
}

std::vector<double> declared_budgets(const FeatureExtractor& f) {
  if (const auto* lin = std::get_if<LinearExtractor>(&f)) return {lin->budget};
  return std::get<MlpExtractor>(f).budgets;
}

FeatureExtractor project_to_budget(FeatureExtractor f) {
  if (auto* lin = std::get_if<LinearExtractor>(&f)) {
    const double norm = induced_norm(lin->weight, lin->p);
    if (norm > lin->budget) lin->weight *= lin->budget / norm;
    return f;
  }
  auto& mlp = std::get<MlpExtractor>(f);
  require(mlp.budgets.size() == mlp.layers.size(), "project_to_budget: missing budgets");
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const double norm = mlp.constraint == ConstraintKind::Frobenius
                            ? frobenius_norm(mlp.layers[l])
                            : one_inf_norm(mlp.layers[l]);
    if (norm > mlp.budgets[l]) mlp.layers[l] *= mlp.budgets[l] / norm;
  }
  return f;
}

bool within_budget(const FeatureExtractor& f, double slack) {
  const auto norms = constrained_norms(f);
  const auto budgets = declared_budgets(f);
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] > budgets[i] + slack) return false;
  return true;
}

FeatureExtractor random_like(const FeatureExtractor& prototype, std::uint64_t seed) {
  Rng rng(seed);
  FeatureExtractor out = prototype;
  if (auto* lin = std::get_if<LinearExtractor>(&out)) {
    const double a = 1.0 / std::sqrt(static_cast<double>(lin->weight.cols()));
    lin->weight = rng.uniform_matrix(lin->weight.rows(), lin->weight.cols(), -a, a);
  } else {
    auto& mlp = std::get<MlpExtractor>(out);
    for (auto& w : mlp.layers) {
      const double a = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      w = rng.uniform_matrix(w.rows(), w.cols(), -a, a);
    }
  }
  return project_to_budget(std::move(out));
}

std::vector<std::string> weight_leaf_names(const FeatureExtractor& f) {
  const int d = std::holds_alternative<LinearExtractor>(f)
                    ? 1
                    : std::get<MlpExtractor>(f).depth();
  std::vector<std::string> names;
  names.reserve(d);
  for (int l = 1; l <= d; ++l) names.push_back("W" + std::to_string(l));
  return names;
}

int append_forward_graph(Graph& g, const FeatureExtractor& f, int x_node) {
  const auto names = weight_leaf_names(f);
  std::vector<int> weight_nodes;
  for (const auto& name : names) {
    const int existing = g.find_leaf_node(name);
    weight_nodes.push_back(existing >= 0 ? existing : g.leaf(name));
  }

  if (std::holds_alternative<LinearExtractor>(f)) return g.affine(weight_nodes[0], x_node);
  const auto& mlp = std::get<MlpExtractor>(f);
  int z = g.affine(weight_nodes[0], x_node);
  for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
    z = g.activation(z, mlp.activation, mlp.leaky_alpha);
    z = g.affine(weight_nodes[l], z);
  }
  return z;
}

void bind_weights(const FeatureExtractor& f, Graph::Bindings& b, const Graph& g,
                  std::vector<Tensor>& storage) {
  const auto names = weight_leaf_names(f);
  storage.clear();
  storage.reserve(names.size());
  if (const auto* lin = std::get_if<LinearExtractor>(&f)) {
    storage.push_back(Tensor::matrix(lin->weight));
  } else {
    for (const auto& w : std::get<MlpExtractor>(f).layers) storage.push_back(Tensor::matrix(w));
  }
  for (std::size_t i = 0; i < names.size(); ++i) b.set(g.leaf_index(names[i]), storage[i]);
}

std::string to_string(ActKind a) {
  switch (a) {
    case ActKind::Relu:
      return "relu";
    case ActKind::Tanh:
      return "tanh";
    case ActKind::LeakyRelu:
      return "leaky_relu";
  }
  return "relu";
}

ActKind act_kind_from_string(const std::string& s) {
  if (s == "relu") return ActKind::Relu;
  if (s == "tanh") return ActKind::Tanh;
  if (s == "leaky_relu") return ActKind::LeakyRelu;
  throw ConfigError("unknown activation: " + s);
}

std::string to_string(ConstraintKind c) {
  return c == ConstraintKind::Frobenius ? "frobenius" : "one_inf";
}

ConstraintKind constraint_kind_from_string(const std::string& s) {
  if (s == "frobenius") return ConstraintKind::Frobenius;
  if (s == "one_inf") return ConstraintKind::OneInf;
  throw ConfigError("unknown constraint: " + s);
}

}  // namespace acl
