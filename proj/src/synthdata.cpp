#include "acl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace acl {

void LatentClassModel::validate() const {
  require(!classes.empty(), "LatentClassModel: no classes");
  require(rho.size() == static_cast<Eigen::Index>(classes.size()),
          "LatentClassModel: rho size mismatch");
  require(rho.minCoeff() >= 0.0, "LatentClassModel: negative class probability");
  require(std::abs(rho.sum() - 1.0) <= 1e-12, "LatentClassModel: rho must sum to 1");
  const Eigen::Index m = classes.front().mean.size();
  for (const auto& c : classes) {
    require(c.mean.size() == m, "LatentClassModel: inconsistent dimensions");
    require(c.stddev >= 0.0, "LatentClassModel: negative stddev");
  }
  if (clamp_box) require(*clamp_box > 0.0, "LatentClassModel: clamp box must be positive");
}

Vector LatentClassModel::sample_point(int c, Rng& rng) const {
  const ClassSpec& spec = classes[static_cast<std::size_t>(c)];
  Vector x = spec.mean;
  if (spec.stddev > 0.0)
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += spec.stddev * rng.normal();
  if (clamp_box) {
    const double r = *clamp_box;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], -r, r);
  }
  return x;
}

double LatentClassModel::tau() const { return rho.squaredNorm(); }

double LatentClassModel::tau_k(int k) const {
  require(k >= 1, "tau_k: k must be >= 1");
  double miss = 0.0;
  for (Eigen::Index c = 0; c < rho.size(); ++c)
    miss += rho[c] * std::pow(1.0 - rho[c], static_cast<double>(k));
  return 1.0 - miss;
}

LatentClassModel make_gaussian_model(int num_classes, Eigen::Index dim, double mean_radius,
                                     double stddev, std::optional<double> clamp_box,
                                     std::uint64_t seed) {
  require(num_classes >= 1 && dim >= 1, "make_gaussian_model: bad sizes");
  Rng rng(seed);
  LatentClassModel model;
  model.rho = Vector::Constant(num_classes, 1.0 / num_classes);
  model.clamp_box = clamp_box;
  for (int c = 0; c < num_classes; ++c) {
    Vector direction = rng.normal_vector(dim);
    const double n = direction.norm();
    if (n > 0.0) direction /= n;
    model.classes.push_back({mean_radius * direction, stddev});
  }
  return model;
}

void ContrastiveBatch::check_consistent() const {
  const Eigen::Index m = anchors.cols();
  const Eigen::Index rows = anchors.rows();
  for (const auto& p : positives) require(p.rows() == rows && p.cols() == m, "batch: bad positives");
  for (const auto& n : negatives) require(n.rows() == rows && n.cols() == m, "batch: bad negatives");
  require(anchor_class.size() == static_cast<std::size_t>(rows), "batch: missing provenance");
  require(negative_class.size() == static_cast<std::size_t>(rows), "batch: missing provenance");
  if (mode == Mode::Pair) {
    require(positives.size() == 1, "batch: pair mode expects a single positive slot");
    require(static_cast<int>(negatives.size()) == slots, "batch: negative slots mismatch");
  } else {
    require(static_cast<int>(positives.size()) == slots &&
                static_cast<int>(negatives.size()) == slots,
            "batch: block slots mismatch");
  }
}

ContrastiveBatch sample_pairs(const LatentClassModel& model, std::size_t M, int k,
                              std::uint64_t seed) {
  model.validate();
  require(M >= 1 && k >= 1, "sample_pairs: need M >= 1, k >= 1");
  Rng rng(seed);
  const Eigen::Index m = model.dim();

  ContrastiveBatch batch;
  batch.mode = ContrastiveBatch::Mode::Pair;
  batch.slots = k;
  batch.anchors.resize(M, m);
  batch.positives.assign(1, Matrix(M, m));
  batch.negatives.assign(k, Matrix(M, m));
  batch.anchor_class.resize(M);
  batch.negative_class.assign(M, std::vector<int>(k));

  for (std::size_t row = 0; row < M; ++row) {
    const int cpos = rng.categorical(model.rho);
    batch.anchor_class[row] = cpos;
    batch.anchors.row(row) = model.sample_point(cpos, rng).transpose();
    batch.positives[0].row(row) = model.sample_point(cpos, rng).transpose();
    for (int i = 0; i < k; ++i) {
      const int cneg = rng.categorical(model.rho);
      batch.negative_class[row][static_cast<std::size_t>(i)] = cneg;
      batch.negatives[static_cast<std::size_t>(i)].row(row) =
          model.sample_point(cneg, rng).transpose();
    }
  }
  return batch;
}

ContrastiveBatch sample_blocks(const LatentClassModel& model, std::size_t M, int b,
                               std::uint64_t seed) {
  model.validate();
  require(M >= 1 && b >= 1, "sample_blocks: need M >= 1, b >= 1");
  Rng rng(seed);
  const Eigen::Index m = model.dim();

  ContrastiveBatch batch;
  batch.mode = ContrastiveBatch::Mode::Block;
  batch.slots = b;
  batch.anchors.resize(M, m);
  batch.positives.assign(b, Matrix(M, m));
  batch.negatives.assign(b, Matrix(M, m));
  batch.anchor_class.resize(M);
  batch.negative_class.assign(M, std::vector<int>(1));

  for (std::size_t row = 0; row < M; ++row) {
    const int cpos = rng.categorical(model.rho);
    batch.anchor_class[row] = cpos;
    batch.anchors.row(row) = model.sample_point(cpos, rng).transpose();
    for (int j = 0; j < b; ++j)
      batch.positives[static_cast<std::size_t>(j)].row(row) =
          model.sample_point(cpos, rng).transpose();
    const int cneg = rng.categorical(model.rho);
    batch.negative_class[row][0] = cneg;
    for (int j = 0; j < b; ++j)
      batch.negatives[static_cast<std::size_t>(j)].row(row) =
          model.sample_point(cneg, rng).transpose();
  }
  return batch;
}

namespace {

std::vector<int> draw_conditioned_task(const LatentClassModel& model, int k, Rng& rng) {
  for (std::size_t attempt = 0; attempt < kTaskRejectionCap; ++attempt) {
    const int cpos = rng.categorical(model.rho);
    std::vector<int> negs(static_cast<std::size_t>(k));
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      negs[static_cast<std::size_t>(i)] = rng.categorical(model.rho);
      if (negs[static_cast<std::size_t>(i)] == cpos) ok = false;
    }
    if (!ok) continue;
    std::set<int> distinct(negs.begin(), negs.end());
    distinct.insert(cpos);
    return std::vector<int>(distinct.begin(), distinct.end());
  }
  throw PreconditionError("sample_task: rejection cap exceeded (pathological rho)");
}

Vector task_distribution(const LatentClassModel& model, const std::vector<int>& task,
                         TaskDistPolicy policy) {
  Vector dist(static_cast<Eigen::Index>(task.size()));
  if (policy == TaskDistPolicy::Uniform) {
    dist.setConstant(1.0 / static_cast<double>(task.size()));
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < task.size(); ++i) total += model.rho[task[i]];
    for (std::size_t i = 0; i < task.size(); ++i)
      dist[static_cast<Eigen::Index>(i)] = model.rho[task[i]] / total;
  }
  return dist;
}

}  // namespace

SupervisedTaskSet sample_points_for_task(const LatentClassModel& model,
                                         const std::vector<int>& task, TaskDistPolicy policy,
                                         std::size_t N, std::uint64_t seed) {
  model.validate();
  require(!task.empty(), "sample_points_for_task: empty task");
  Rng rng(seed);
  SupervisedTaskSet out;
  out.task = task;
  out.dist = task_distribution(model, task, policy);
  out.points.resize(N, model.dim());
  out.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const int local = rng.categorical(out.dist);
    const int c = task[static_cast<std::size_t>(local)];
    out.labels[i] = c;
    out.points.row(static_cast<Eigen::Index>(i)) = model.sample_point(c, rng).transpose();
  }
  return out;
}

SupervisedTaskSet sample_task(const LatentClassModel& model, int k, TaskDistPolicy policy,
                              std::size_t N, std::uint64_t seed) {
  model.validate();
  require(model.num_classes() >= 2, "sample_task: need at least 2 classes");
  require(k >= 1, "sample_task: k must be >= 1");
  Rng rng(seed);
  const std::vector<int> task = draw_conditioned_task(model, k, rng);
  SupervisedTaskSet out;
  out.task = task;
  out.dist = task_distribution(model, task, policy);
  out.points.resize(N, model.dim());
  out.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const int local = rng.categorical(out.dist);
    const int c = task[static_cast<std::size_t>(local)];
    out.labels[i] = c;
    out.points.row(static_cast<Eigen::Index>(i)) = model.sample_point(c, rng).transpose();
  }
  return out;
}

}  // namespace acl
