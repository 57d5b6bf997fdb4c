#include "acl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace acl {

RiskEstimate mc_estimate(const std::string& kind, const std::vector<double>& samples) {
  require(samples.size() >= 2, "mc_estimate: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  return {kind, mean, std::sqrt(var / n), samples.size()};
}

MeanClassifier fit_mean_classifier(const FeatureExtractor& f, const SupervisedTaskSet& data) {
  MeanClassifier head;
  head.class_order = data.task;
  head.rows = Matrix::Zero(static_cast<Eigen::Index>(data.task.size()), output_dim(f));
  std::vector<std::size_t> counts(data.task.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto it = std::find(data.task.begin(), data.task.end(), data.labels[i]);
    require(it != data.task.end(), "fit_mean_classifier: label outside task");
    const auto row = static_cast<Eigen::Index>(it - data.task.begin());
    head.rows.row(row) +=
        forward(f, data.points.row(static_cast<Eigen::Index>(i)).transpose()).transpose();
    ++counts[static_cast<std::size_t>(row)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    require(counts[c] > 0, "fit_mean_classifier: empty class in task");
    head.rows.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  return head;
}

MeanClassifier fit_trained_head(const FeatureExtractor& f, const SupervisedTaskSet& data,
                                const LossSpec& loss, int steps, double lr) {
  MeanClassifier head = fit_mean_classifier(f, data);  // warm start at the mean rows
  const Eigen::Index n_cls = head.rows.rows();
  Matrix feats(static_cast<Eigen::Index>(data.size()), output_dim(f));
  std::vector<Eigen::Index> label_row(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    feats.row(static_cast<Eigen::Index>(i)) =
        forward(f, data.points.row(static_cast<Eigen::Index>(i)).transpose()).transpose();
    const auto it = std::find(data.task.begin(), data.task.end(), data.labels[i]);
    label_row[i] = static_cast<Eigen::Index>(it - data.task.begin());
  }

  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (int t = 0; t < steps; ++t) {
    Matrix grad = Matrix::Zero(n_cls, head.rows.cols());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector z = feats.row(static_cast<Eigen::Index>(i)).transpose();
      const Eigen::Index c = label_row[i];
      const Vector scores = head.rows * z;
      Vector margins(n_cls - 1);
      std::vector<Eigen::Index> others;
      for (Eigen::Index j = 0; j < n_cls; ++j)
        if (j != c) {
          margins[static_cast<Eigen::Index>(others.size())] = scores[c] - scores[j];
          others.push_back(j);
        }
      if (loss.kind == LossKind::Hinge) {
        Eigen::Index worst = 0;
        for (Eigen::Index j = 1; j < margins.size(); ++j)
          if (margins[j] < margins[worst]) worst = j;
        if (1.0 - margins[worst] > 0.0) {
          grad.row(c) -= inv_n * z.transpose();
          grad.row(others[static_cast<std::size_t>(worst)]) += inv_n * z.transpose();
        }
      } else {
        double shift = 0.0;
        for (Eigen::Index j = 0; j < margins.size(); ++j) shift = std::max(shift, -margins[j]);
        double denom = std::exp(-shift);
        for (Eigen::Index j = 0; j < margins.size(); ++j) denom += std::exp(-margins[j] - shift);
        for (Eigen::Index j = 0; j < margins.size(); ++j) {
          const double wj = std::exp(-margins[j] - shift) / denom / std::log(2.0);
          grad.row(c) -= inv_n * wj * z.transpose();
          grad.row(others[static_cast<std::size_t>(j)]) += inv_n * wj * z.transpose();
        }
      }
    }
    head.rows -= lr * grad;
  }
  return head;
}

namespace {

// Margin difference rows (row_c - row_{c'}) for c' != c, in task order.
Matrix margin_rows(const MeanClassifier& head, Eigen::Index c) {
  const Eigen::Index n_cls = head.rows.rows();
  Matrix d(n_cls - 1, head.rows.cols());
  Eigen::Index out = 0;
  for (Eigen::Index j = 0; j < n_cls; ++j)
    if (j != c) d.row(out++) = head.rows.row(c) - head.rows.row(j);
  return d;
}

}  // namespace

SupervisedEval supervised_risk(const FeatureExtractor& f, const MeanClassifier& head,
                               const SupervisedTaskSet& points, const LossSpec& loss,
                               const std::optional<AttackSpec>& attack) {
  require(points.size() >= 2, "supervised_risk: need at least 2 points");
  const Eigen::Index n_cls = head.rows.rows();
  require(n_cls >= 2, "supervised_risk: need at least 2 classes");

  ScoreAttack engine(f, loss, static_cast<int>(n_cls - 1));
  std::vector<double> losses;
  losses.reserve(points.size());
  std::vector<double> correct;
  correct.reserve(points.size());

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto it = std::find(head.class_order.begin(), head.class_order.end(), points.labels[i]);
    require(it != head.class_order.end(), "supervised_risk: label outside classifier");
    const auto c = static_cast<Eigen::Index>(it - head.class_order.begin());
    const Matrix d = margin_rows(head, c);
    Vector x = points.points.row(static_cast<Eigen::Index>(i)).transpose();
    if (attack && attack->epsilon > 0.0) x = engine.run(*attack, x, d);

    const Vector z = forward(f, x);
    const Vector scores = head.rows * z;
    Vector margins(n_cls - 1);
    Eigen::Index out = 0;
    for (Eigen::Index j = 0; j < n_cls; ++j)
      if (j != c) margins[out++] = scores[c] - scores[j];
    losses.push_back(acl::loss(loss, margins));

    Eigen::Index argmax = 0;
    for (Eigen::Index j = 1; j < n_cls; ++j)
      if (scores[j] > scores[argmax]) argmax = j;
    correct.push_back(argmax == c ? 1.0 : 0.0);
  }

  SupervisedEval eval;
  const std::string kind = attack && attack->epsilon > 0.0 ? "Lsup_mu_adv" : "Lsup";
  eval.risk = mc_estimate(kind, losses);
  const RiskEstimate acc = mc_estimate("accuracy", correct);
  eval.accuracy = acc.value;
  eval.accuracy_stderr = acc.stderr_;
  return eval;
}

RiskEstimate unsup_risk(const FeatureExtractor& f, const LatentClassModel& model, int slots,
                        bool block, const LossSpec& loss,
                        const std::optional<AttackSpec>& attack, std::size_t n_mc,
                        std::uint64_t seed) {
  require(n_mc >= 100, "unsup_risk: n_mc must be >= 100");
  const ContrastiveBatch batch = block ? sample_blocks(model, n_mc, slots, seed)
                                       : sample_pairs(model, n_mc, slots, seed);
  ScoreAttack engine(f, loss, block ? 1 : slots);
  Rng attack_rng(Rng::derive(seed, 0x41545441));  // only consumed by random starts

  std::vector<double> losses;
  losses.reserve(n_mc);
  const Eigen::Index n = output_dim(f);
  for (std::size_t row = 0; row < n_mc; ++row) {
    Matrix d;
    if (!block) {
      const Vector fp = forward(f, batch.positives[0].row(static_cast<Eigen::Index>(row)).transpose());
      d.resize(slots, n);
      for (int i = 0; i < slots; ++i)
        d.row(i) = (fp - forward(f, batch.negatives[static_cast<std::size_t>(i)]
                                        .row(static_cast<Eigen::Index>(row))
                                        .transpose()))
                       .transpose();
    } else {
      Vector mean_pos = Vector::Zero(n), mean_neg = Vector::Zero(n);
      for (int j = 0; j < slots; ++j) {
        mean_pos += forward(f, batch.positives[static_cast<std::size_t>(j)]
                                   .row(static_cast<Eigen::Index>(row))
                                   .transpose());
        mean_neg += forward(f, batch.negatives[static_cast<std::size_t>(j)]
                                   .row(static_cast<Eigen::Index>(row))
                                   .transpose());
      }
      d.resize(1, n);
      d.row(0) = ((mean_pos - mean_neg) / static_cast<double>(slots)).transpose();
    }
    Vector x = batch.anchors.row(static_cast<Eigen::Index>(row)).transpose();
    if (attack && attack->epsilon > 0.0) x = engine.run(*attack, x, d, &attack_rng);
    const Vector fx = forward(f, x);
    losses.push_back(acl::loss(loss, d * fx));
  }

  std::string kind;
  if (attack && attack->epsilon > 0.0)
    kind = block ? "Lsun_block_adv" : "Lsun_adv";
  else
    kind = block ? "Lun_block" : "Lun";
  return mc_estimate(kind, losses);
}

std::vector<int> sample_distinct_task(const LatentClassModel& model, int k, Rng& rng) {
  require(model.num_classes() >= static_cast<std::size_t>(k) + 1,
          "sample_distinct_task: too few classes");
  for (std::size_t attempt = 0; attempt < kTaskRejectionCap; ++attempt) {
    std::vector<int> classes(static_cast<std::size_t>(k) + 1);
    for (auto& c : classes) c = rng.categorical(model.rho);
    std::set<int> distinct(classes.begin(), classes.end());
    if (distinct.size() == classes.size()) return classes;
  }
  throw PreconditionError("sample_distinct_task: rejection cap exceeded");
}

RiskEstimate avg_adv_sup_risk_mu(const FeatureExtractor& f, const LatentClassModel& model, int k,
                                 const LossSpec& loss, const std::optional<AttackSpec>& attack,
                                 std::size_t n_tasks, std::size_t n_fit_per_class,
                                 std::size_t n_eval, std::uint64_t seed, TaskSampling sampling) {
  require(n_tasks >= 2, "avg_adv_sup_risk_mu: need at least 2 tasks");
  if (sampling == TaskSampling::AllDistinct)
    require(model.num_classes() >= static_cast<std::size_t>(k) + 1,
            "avg_adv_sup_risk_mu: too few classes for distinct tasks");

  std::vector<double> task_risks;
  task_risks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    Rng rng(Rng::derive(seed, t));
    std::vector<int> task;
    if (sampling == TaskSampling::AllDistinct) {
      task = sample_distinct_task(model, k, rng);
      std::sort(task.begin(), task.end());
    } else {
      // Conditioned tuple, collapsed to its distinct classes.
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt >= kTaskRejectionCap)
          throw PreconditionError("avg_adv_sup_risk_mu: rejection cap exceeded");
        const int cpos = rng.categorical(model.rho);
        std::vector<int> negs(static_cast<std::size_t>(k));
        bool ok = true;
        for (auto& c : negs) {
          c = rng.categorical(model.rho);
          if (c == cpos) ok = false;
        }
        if (!ok) continue;
        std::set<int> distinct(negs.begin(), negs.end());
        distinct.insert(cpos);
        task.assign(distinct.begin(), distinct.end());
        break;
      }
    }

    // Fresh labeled samples: exactly n_fit per class for the head, then D_T
    // uniform evaluation points.
    SupervisedTaskSet fit_set;
    fit_set.task = task;
    fit_set.dist = Vector::Constant(static_cast<Eigen::Index>(task.size()),
                                    1.0 / static_cast<double>(task.size()));
    fit_set.points.resize(static_cast<Eigen::Index>(task.size() * n_fit_per_class), model.dim());
    fit_set.labels.resize(task.size() * n_fit_per_class);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < task.size(); ++c)
      for (std::size_t i = 0; i < n_fit_per_class; ++i) {
        fit_set.labels[static_cast<std::size_t>(row)] = task[c];
        fit_set.points.row(row) = model.sample_point(task[c], rng).transpose();
        ++row;
      }
    const MeanClassifier head = fit_mean_classifier(f, fit_set);

    SupervisedTaskSet eval_set = sample_points_for_task(model, task, TaskDistPolicy::Uniform,
                                                        n_eval, Rng::derive(seed, t ^ 0xE7A1));
    const SupervisedEval eval = supervised_risk(f, head, eval_set, loss, attack);
    task_risks.push_back(eval.risk.value);
  }
  RiskEstimate est = mc_estimate(
      sampling == TaskSampling::AllDistinct ? "avg_sup_adv" : "script_sup_adv", task_risks);
  return est;
}

}  // namespace acl
