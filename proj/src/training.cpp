#include "acl/training.hpp"

#include <cmath>

namespace acl {

void TrainConfig::validate() const {
  require(lambda >= 0.0, "TrainConfig: lambda must be >= 0");
  require(lr > 0.0, "TrainConfig: lr must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0, 1)");
  require(weight_decay >= 0.0, "TrainConfig: weight_decay must be >= 0");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(iterations >= 0, "TrainConfig: iterations must be >= 0");
  require(log_interval >= 1, "TrainConfig: log_interval must be >= 1");
}

double frobenius_regularizer(const FeatureExtractor& f) {
  double total = 0.0;
  if (const auto* lin = std::get_if<LinearExtractor>(&f)) {
    total = frobenius_norm(lin->weight);
  } else {
    for (const auto& w : std::get<MlpExtractor>(f).layers) total += frobenius_norm(w);
  }
  return total;
}

namespace {

std::vector<Matrix>& layers_of(FeatureExtractor& f, std::vector<Matrix>& linear_storage) {
  if (auto* mlp = std::get_if<MlpExtractor>(&f)) return mlp->layers;
  linear_storage.clear();
  linear_storage.push_back(std::get<LinearExtractor>(f).weight);
  return linear_storage;
}

}  // namespace

TupleGradient::TupleGradient(const FeatureExtractor& prototype, const LossSpec& loss,
                             ContrastiveBatch::Mode mode, int slots)
    : loss_(loss), mode_(mode), slots_(slots) {
  require(slots >= 1, "TupleGradient: slots must be >= 1");
  const int x_node = graph_.leaf("x");
  const int fx = append_forward_graph(graph_, prototype, x_node);
  x_idx_ = graph_.leaf_index("x");
  for (const auto& name : weight_leaf_names(prototype))
    weight_leaf_idx_.push_back(graph_.leaf_index(name));

  auto forward_leaf = [&](const std::string& name, std::vector<int>& idx_out) {
    const int node = graph_.leaf(name);
    idx_out.push_back(graph_.leaf_index(name));
    return append_forward_graph(graph_, prototype, node);
  };

  int out = -1;
  if (mode == ContrastiveBatch::Mode::Pair) {
    const int fp = forward_leaf("xp", pos_idx_);
    std::vector<int> scores;
    for (int i = 0; i < slots; ++i) {
      const int fn = forward_leaf("xn" + std::to_string(i), neg_idx_);
      scores.push_back(graph_.dot(fx, graph_.sub(fp, fn)));
    }
    const int packed = graph_.pack(scores);
    out = loss.kind == LossKind::Hinge ? graph_.hinge_reduce(packed)
                                       : graph_.logistic_reduce(packed);
  } else {
    std::vector<int> fps, fns;
    for (int j = 0; j < slots; ++j) fps.push_back(forward_leaf("xp" + std::to_string(j), pos_idx_));
    for (int j = 0; j < slots; ++j) fns.push_back(forward_leaf("xn" + std::to_string(j), neg_idx_));
    auto mean_of = [&](const std::vector<int>& nodes) {
      int acc = nodes[0];
      for (std::size_t j = 1; j < nodes.size(); ++j) acc = graph_.add(acc, nodes[j]);
      return graph_.scale(acc, 1.0 / static_cast<double>(nodes.size()));
    };
    const int score = graph_.dot(fx, graph_.sub(mean_of(fps), mean_of(fns)));
    const int packed = graph_.pack({score});
    out = loss.kind == LossKind::Hinge ? graph_.hinge_reduce(packed)
                                       : graph_.logistic_reduce(packed);
  }
  graph_.set_output(out);
}

double TupleGradient::run(const FeatureExtractor& f, const Vector& anchor,
                          const Matrix& positives, const Matrix& negatives, bool with_grad,
                          double scale, std::vector<Matrix>* grad_accum) {
  require(positives.rows() == static_cast<Eigen::Index>(pos_idx_.size()),
          "TupleGradient: wrong number of positives");
  require(negatives.rows() == static_cast<Eigen::Index>(neg_idx_.size()),
          "TupleGradient: wrong number of negatives");

  Graph::Bindings b(graph_);
  std::vector<Tensor> weights;
  bind_weights(f, b, graph_, weights);
  const Tensor tx = Tensor::vector(anchor);
  b.set(x_idx_, tx);
  std::vector<Tensor> rows;
  rows.reserve(pos_idx_.size() + neg_idx_.size());
  for (std::size_t j = 0; j < pos_idx_.size(); ++j) {
    rows.push_back(Tensor::vector(positives.row(static_cast<Eigen::Index>(j)).transpose()));
    b.set(pos_idx_[j], rows.back());
  }
  for (std::size_t j = 0; j < neg_idx_.size(); ++j) {
    rows.push_back(Tensor::vector(negatives.row(static_cast<Eigen::Index>(j)).transpose()));
    b.set(neg_idx_[j], rows.back());
  }

  if (!with_grad) return graph_.evaluate(b, ws_);

  std::vector<Tensor> grads;
  graph_.gradient(b, weight_leaf_idx_, grads, ws_);
  for (std::size_t l = 0; l < grads.size(); ++l) (*grad_accum)[l] += scale * grads[l].mat();
  return ws_.values[graph_.output()].scalar_value();
}

double TupleGradient::accumulate(const FeatureExtractor& f, const Vector& anchor,
                                 const Matrix& positives, const Matrix& negatives, double scale,
                                 std::vector<Matrix>& grad_accum) {
  return run(f, anchor, positives, negatives, true, scale, &grad_accum);
}

double TupleGradient::loss_only(const FeatureExtractor& f, const Vector& anchor,
                                const Matrix& positives, const Matrix& negatives) {
  return run(f, anchor, positives, negatives, false, 0.0, nullptr);
}

namespace {

Matrix tuple_rows(const std::vector<Matrix>& slots, std::size_t row) {
  Matrix out(static_cast<Eigen::Index>(slots.size()), slots[0].cols());
  for (std::size_t j = 0; j < slots.size(); ++j)
    out.row(static_cast<Eigen::Index>(j)) = slots[j].row(static_cast<Eigen::Index>(row));
  return out;
}

// Difference features for the anchor attack: one row per negative (pair) or a
// single mean difference row (block). Only the anchor is perturbed.
Matrix attack_rows(const FeatureExtractor& f, const ContrastiveBatch& data, std::size_t row) {
  if (data.mode == ContrastiveBatch::Mode::Pair) {
    const Vector fp = forward(f, data.positives[0].row(static_cast<Eigen::Index>(row)).transpose());
    Matrix d(data.slots, fp.size());
    for (int i = 0; i < data.slots; ++i)
      d.row(i) = (fp - forward(f, data.negatives[static_cast<std::size_t>(i)]
                                      .row(static_cast<Eigen::Index>(row))
                                      .transpose()))
                     .transpose();
    return d;
  }
  Matrix d(1, output_dim(f));
  Vector mean_pos = Vector::Zero(output_dim(f));
  Vector mean_neg = Vector::Zero(output_dim(f));
  for (int j = 0; j < data.slots; ++j) {
    mean_pos += forward(f, data.positives[static_cast<std::size_t>(j)]
                               .row(static_cast<Eigen::Index>(row))
                               .transpose());
    mean_neg += forward(f, data.negatives[static_cast<std::size_t>(j)]
                               .row(static_cast<Eigen::Index>(row))
                               .transpose());
  }
  d.row(0) = ((mean_pos - mean_neg) / static_cast<double>(data.slots)).transpose();
  return d;
}

}  // namespace

std::pair<FeatureExtractor, TrainReport> aerm_train(const TrainConfig& config,
                                                    FeatureExtractor model,
                                                    const ContrastiveBatch& data) {
  config.validate();
  data.check_consistent();
  require(input_dim(model) == data.dim(), "aerm_train: model/data dimension mismatch");

  TrainReport report;
  if (config.iterations == 0) return {std::move(model), report};

  Rng rng(config.seed);
  const int attack_k = data.mode == ContrastiveBatch::Mode::Pair ? data.slots : 1;
  ScoreAttack attacker(model, config.loss, attack_k);
  TupleGradient objective(model, config.loss, data.mode, data.slots);

  std::vector<Matrix> linear_storage;
  std::vector<Matrix>& weights = layers_of(model, linear_storage);
  const bool is_linear = std::holds_alternative<LinearExtractor>(model);

  std::vector<Matrix> velocity, grad;
  for (const auto& w : weights) {
    velocity.push_back(Matrix::Zero(w.rows(), w.cols()));
    grad.push_back(Matrix::Zero(w.rows(), w.cols()));
  }

  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
  for (int t = 0; t < config.iterations; ++t) {
    for (const auto& w : weights)
      if (!w.allFinite())
        throw std::runtime_error("aerm_train: non-finite loss at iteration " + std::to_string(t));
    for (auto& g : grad) g.setZero();
    double batch_risk = 0.0;

    for (int b = 0; b < config.batch_size; ++b) {
      const std::size_t row = rng.uniform_index(data.size());
      const Vector x = data.anchors.row(static_cast<Eigen::Index>(row)).transpose();
      const Matrix d = attack_rows(model, data, row);
      const Vector x_adv = attacker.run(config.attack, x, d, &rng);
      const Matrix pos = data.mode == ContrastiveBatch::Mode::Pair
                             ? Matrix(data.positives[0].row(static_cast<Eigen::Index>(row)))
                             : tuple_rows(data.positives, row);
      const Matrix neg = tuple_rows(data.negatives, row);
      batch_risk += inv_batch * objective.accumulate(model, x_adv, pos, neg, inv_batch, grad);
    }

    if (!std::isfinite(batch_risk))
      throw std::runtime_error("aerm_train: non-finite loss at iteration " + std::to_string(t));

    double reg_value = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const double fro = frobenius_norm(weights[l]);
      reg_value += fro;
      if (config.lambda > 0.0 && fro > 0.0) grad[l] += (config.lambda / fro) * weights[l];
      if (config.weight_decay > 0.0) grad[l] += config.weight_decay * weights[l];
    }

    if (t % config.log_interval == 0) {
      report.iteration.push_back(t);
      report.risk.push_back(batch_risk);
      report.regularizer.push_back(reg_value);
      report.layer_norms.push_back(constrained_norms(model));
    }

    for (std::size_t l = 0; l < weights.size(); ++l) {
      velocity[l] = config.momentum * velocity[l] + grad[l];
      weights[l] -= config.lr * velocity[l];
    }
    if (is_linear) std::get<LinearExtractor>(model).weight = weights[0];
    if (config.project_each_step) {
      model = project_to_budget(std::move(model));
      if (is_linear) weights[0] = std::get<LinearExtractor>(model).weight;
    }
  }

  return {std::move(model), report};
}

double empirical_surrogate_risk(const FeatureExtractor& model, const ContrastiveBatch& data,
                                const AttackSpec& attack, const LossSpec& loss,
                                std::uint64_t attack_seed) {
  data.check_consistent();
  const int attack_k = data.mode == ContrastiveBatch::Mode::Pair ? data.slots : 1;
  ScoreAttack attacker(model, loss, attack_k);
  TupleGradient objective(model, loss, data.mode, data.slots);
  Rng rng(attack_seed);

  double total = 0.0;
  for (std::size_t row = 0; row < data.size(); ++row) {
    const Vector x = data.anchors.row(static_cast<Eigen::Index>(row)).transpose();
    const Matrix d = attack_rows(model, data, row);
    const Vector x_adv = attacker.run(attack, x, d, &rng);
    const Matrix pos = data.mode == ContrastiveBatch::Mode::Pair
                           ? Matrix(data.positives[0].row(static_cast<Eigen::Index>(row)))
                           : tuple_rows(data.positives, row);
    const Matrix neg = tuple_rows(data.negatives, row);
    total += objective.loss_only(model, x_adv, pos, neg);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace acl
