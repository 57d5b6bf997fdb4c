// Acceptance suite. Each criterion runs standalone (`acceptance N`) or as part
// of the full set (`acceptance`), prints one PASS/FAIL line, and the process
// exits non-zero if any requested criterion fails.
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>

#include "acl/evaluation.hpp"
#include "acl/experiment.hpp"
#include "test_oracles.hpp"

using namespace acl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

bool close12(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------- criterion 1
Outcome loss_axioms() {
  Outcome out;
  double worst = kInf;
  for (LossKind kind : {LossKind::Hinge, LossKind::Logistic}) {
    const auto report = check_assumption1(LossSpec{kind}, 10000, 8, 20240801);
    worst = std::min(worst, report.worst_margin);
    if (!report.pass) out.pass = false;
  }

  Rng rng(414243);
  double worst_mono = kInf, worst_convex = kInf;
  for (int t = 0; t < 10000; ++t) {
    const LossSpec spec{t % 2 == 0 ? LossKind::Hinge : LossKind::Logistic};
    const int d = 1 + static_cast<int>(rng.uniform_index(6));
    Vector u(d), v(d), w(d);
    for (int i = 0; i < d; ++i) {
      u[i] = rng.uniform(-4, 4);
      v[i] = u[i] + rng.uniform(0, 2);
      w[i] = rng.uniform(-4, 4);
    }
    worst_mono = std::min(worst_mono, loss(spec, u) - loss(spec, v));
    const double lam = rng.uniform();
    worst_convex = std::min(worst_convex, lam * loss(spec, u) + (1 - lam) * loss(spec, w) -
                                              loss(spec, Vector(lam * u + (1 - lam) * w)));
  }
  if (worst_mono < -1e-12 || worst_convex < -1e-10) out.pass = false;
  std::ostringstream ss;
  ss << "worst partition margin " << worst << ", worst monotonicity slack " << worst_mono
     << ", worst convexity slack " << worst_convex;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 2
// Random 3-layer MLP + contrastive loss, gradients vs central differences.
struct GradInstance {
  Graph graph;
  std::map<std::string, Tensor> bindings;
  std::vector<std::string> wrt;
  std::vector<Eigen::Index> rows, cols;

  GradInstance(int m, int h, int n, int k, LossKind kind, Rng& rng) {
    const int x = graph.leaf("x");
    const int w1 = graph.leaf("W1");
    const int w2 = graph.leaf("W2");
    const int w3 = graph.leaf("W3");
    auto net = [&](int input) {
      int z = graph.affine(w1, input);
      z = graph.activation(z, ActKind::Relu);
      z = graph.affine(w2, z);
      z = graph.activation(z, ActKind::Relu);
      return graph.affine(w3, z);
    };
    const int fx = net(x);
    const int fp = net(graph.leaf("xp"));
    std::vector<int> scores;
    for (int i = 0; i < k; ++i)
      scores.push_back(graph.dot(fx, graph.sub(fp, net(graph.leaf("xn" + std::to_string(i))))));
    const int packed = graph.pack(scores);
    graph.set_output(kind == LossKind::Hinge ? graph.hinge_reduce(packed)
                                             : graph.logistic_reduce(packed));
    bindings["x"] = Tensor::vector(rng.normal_vector(m));
    bindings["xp"] = Tensor::vector(rng.normal_vector(m));
    for (int i = 0; i < k; ++i)
      bindings["xn" + std::to_string(i)] = Tensor::vector(rng.normal_vector(m));
    bindings["W1"] = Tensor::matrix(0.6 * rng.uniform_matrix(h, m, -1, 1));
    bindings["W2"] = Tensor::matrix(0.6 * rng.uniform_matrix(h, h, -1, 1));
    bindings["W3"] = Tensor::matrix(0.6 * rng.uniform_matrix(n, h, -1, 1));
    wrt = {"W1", "W2", "W3", "x", "xp"};
    for (const auto& name : wrt) {
      rows.push_back(bindings[name].mat().rows());
      cols.push_back(bindings[name].mat().cols());
    }
  }

  double kink_margin() const {
    double margin = kInf;
    auto feats = [&](const Tensor& input) {
      Vector z = bindings.at("W1").mat() * input.mat().col(0);
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        margin = std::min(margin, std::abs(z[i]));
        z[i] = std::max(0.0, z[i]);
      }
      Vector z2 = bindings.at("W2").mat() * z;
      for (Eigen::Index i = 0; i < z2.size(); ++i) {
        margin = std::min(margin, std::abs(z2[i]));
        z2[i] = std::max(0.0, z2[i]);
      }
      return Vector(bindings.at("W3").mat() * z2);
    };
    const Vector fx = feats(bindings.at("x"));
    const Vector fp = feats(bindings.at("xp"));
    std::vector<double> scores;
    for (const auto& [name, value] : bindings)
      if (name.rfind("xn", 0) == 0) scores.push_back(fx.dot(fp - feats(value)));
    std::sort(scores.begin(), scores.end());
    margin = std::min(margin, std::abs(1.0 - scores[0]));
    if (scores.size() > 1) margin = std::min(margin, scores[1] - scores[0]);
    return margin;
  }

  Vector flatten() const {
    std::vector<double> v;
    for (const auto& name : wrt) {
      const Matrix& m = bindings.at(name).mat();
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    }
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  double eval_at(const Vector& theta) const {
    std::map<std::string, Tensor> b = bindings;
    Eigen::Index idx = 0;
    for (std::size_t w = 0; w < wrt.size(); ++w) {
      Matrix m(rows[w], cols[w]);
      for (Eigen::Index i = 0; i < rows[w]; ++i)
        for (Eigen::Index j = 0; j < cols[w]; ++j) m(i, j) = theta[idx++];
      b[wrt[w]] = wrt[w][0] == 'W' ? Tensor::matrix(m) : Tensor::vector(m.col(0));
    }
    return graph.evaluate(b);
  }
};

Outcome gradient_correctness() {
  Outcome out;
  Rng rng(777);
  int accepted = 0, attempts = 0;
  double worst_rel = 0.0;
  while (accepted < 100 && attempts < 2000) {
    ++attempts;
    const LossKind kind = attempts % 2 == 0 ? LossKind::Hinge : LossKind::Logistic;
    GradInstance inst(3, 4, 3, 2, kind, rng);
    if (inst.kink_margin() <= 1e-3) continue;
    ++accepted;

    const Vector theta = inst.flatten();
    const Vector fd = oracle::finite_difference(
        [&](const Vector& t) { return inst.eval_at(t); }, theta, 1e-5);
    const auto grads = inst.graph.gradient(inst.bindings, inst.wrt);
    Eigen::Index idx = 0;
    for (const auto& name : inst.wrt) {
      const Matrix& gm = grads.at(name).mat();
      for (Eigen::Index i = 0; i < gm.rows(); ++i)
        for (Eigen::Index j = 0; j < gm.cols(); ++j) {
          const double ref = fd[idx++];
          const double rel = std::abs(gm(i, j) - ref) /
                             std::max({1.0, std::abs(gm(i, j)), std::abs(ref)});
          worst_rel = std::max(worst_rel, rel);
        }
    }
  }
  out.pass = accepted == 100 && worst_rel < 1e-5;
  std::ostringstream ss;
  ss << accepted << " instances, worst relative error " << worst_rel;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 3
Outcome exact_adversary_vs_pgd() {
  Outcome out;
  Rng rng(3501);
  const LossSpec logistic{LossKind::Logistic};
  double worst_ratio = 1.0, worst_dom = 0.0;
  int instances = 0;
  for (int t = 0; t < 50; ++t) {
    LinearExtractor lin;
    lin.weight = rng.uniform_matrix(3, 6, -1, 1);
    lin.p = 2.0;
    lin.budget = 1.5;
    const FeatureExtractor f = project_to_budget(FeatureExtractor{lin});
    const Vector x = rng.normal_vector(6);
    const Vector pos = rng.normal_vector(6);
    Matrix negs(1, 6);
    negs.row(0) = rng.normal_vector(6).transpose();

    for (double r : {2.0, kInf}) {
      AttackSpec exact;
      exact.method = AttackMethod::ExactLinear;
      exact.p = r;
      exact.epsilon = 0.25;
      AttackSpec pgd = exact;
      pgd.method = AttackMethod::Pgd;
      pgd.steps = 50;

      ScoreAttack engine(f, logistic, 1);
      const Vector fp = forward(f, pos);
      const Vector fn = forward(f, negs.row(0).transpose());
      Matrix d(1, fp.size());
      d.row(0) = (fp - fn).transpose();
      const Vector adv_exact = engine.run(exact, x, d);
      const Vector adv_pgd = engine.run(pgd, x, d);
      const double loss_exact = engine.loss_at(adv_exact, d);
      const double loss_pgd = engine.loss_at(adv_pgd, d);
      worst_dom = std::max(worst_dom, loss_pgd - loss_exact);
      worst_ratio = std::min(worst_ratio, loss_pgd / loss_exact);
      ++instances;
    }
  }
  out.pass = instances == 100 && worst_ratio >= 0.99 && worst_dom <= 1e-9;
  std::ostringstream ss;
  ss << instances << " instances, min pgd/exact ratio " << worst_ratio
     << ", max pgd-exact excess " << worst_dom;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 4
Outcome lemma11_chain() {
  Outcome out;
  const LatentClassModel model = make_gaussian_model(2, 8, 1.5, 0.5, std::nullopt, 404);
  const double tau = model.tau();  // 0.5 for uniform rho over 2 classes
  const LossSpec hinge{LossKind::Hinge};
  AttackSpec attack;
  attack.method = AttackMethod::ExactLinear;
  attack.p = kInf;
  attack.epsilon = 0.1;
  const std::size_t n_mc = 20000;

  double worst_slack = kInf;
  int passed = 0;
  for (int t = 0; t < 20; ++t) {
    LinearExtractor proto;
    proto.weight = Matrix::Zero(4, 8);
    proto.p = 2.0;
    proto.budget = 1.5;
    const FeatureExtractor f =
        random_like(FeatureExtractor{proto}, 4000 + static_cast<std::uint64_t>(t));
    const auto& lin = std::get<LinearExtractor>(f);

    // Population mean classifier: rows are W mu_c (exact for linear maps on
    // unclamped Gaussians).
    MeanClassifier head;
    head.class_order = {0, 1};
    head.rows = Matrix(2, 4);
    head.rows.row(0) = (lin.weight * model.classes[0].mean).transpose();
    head.rows.row(1) = (lin.weight * model.classes[1].mean).transpose();

    const SupervisedTaskSet points = sample_points_for_task(
        model, {0, 1}, TaskDistPolicy::Uniform, n_mc, Rng::derive(4100, t));
    const SupervisedEval lhs = supervised_risk(f, head, points, hinge, attack);

    const RiskEstimate lsun =
        unsup_risk(f, model, 1, false, hinge, attack, n_mc, Rng::derive(4200, t));

    const double rhs = theorem2_certificate(lsun.value, 0.0, tau, hinge);
    const double combined =
        std::sqrt(lhs.risk.stderr_ * lhs.risk.stderr_ +
                  std::pow(lsun.stderr_ / (1.0 - tau), 2.0));
    const double slack = rhs + 3.0 * combined - lhs.risk.value;
    worst_slack = std::min(worst_slack, slack);
    if (slack >= 0.0) ++passed;
  }
  out.pass = passed == 20;
  std::ostringstream ss;
  ss << passed << "/20 extractors, worst slack " << worst_slack;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 5
Outcome theorem3_ordering() {
  Outcome out;
  const LatentClassModel model = make_gaussian_model(4, 8, 1.5, 0.5, std::nullopt, 505);
  const LossSpec hinge{LossKind::Hinge};
  AttackSpec attack;
  attack.method = AttackMethod::ExactLinear;
  attack.p = kInf;
  attack.epsilon = 0.1;

  double worst_slack = kInf;
  bool all_pass = true;
  for (int t = 0; t < 20; ++t) {
    LinearExtractor proto;
    proto.weight = Matrix::Zero(4, 8);
    proto.p = 2.0;
    proto.budget = 1.5;
    const FeatureExtractor f =
        random_like(FeatureExtractor{proto}, 5000 + static_cast<std::uint64_t>(t));
    ScoreAttack engine(f, hinge, 1);

    for (int b : {2, 4, 8}) {
      const std::size_t n_blocks = 1500;
      const auto blocks =
          sample_blocks(model, n_blocks, b, Rng::derive(5100 + t, static_cast<std::uint64_t>(b)));
      std::vector<double> block_losses, pair_losses;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Vector x = blocks.anchors.row(static_cast<Eigen::Index>(i)).transpose();
        Vector mean_d = Vector::Zero(output_dim(f));
        double pair_avg = 0.0;
        for (int j = 0; j < b; ++j) {
          const Vector fp =
              forward(f, blocks.positives[static_cast<std::size_t>(j)]
                             .row(static_cast<Eigen::Index>(i))
                             .transpose());
          const Vector fn =
              forward(f, blocks.negatives[static_cast<std::size_t>(j)]
                             .row(static_cast<Eigen::Index>(i))
                             .transpose());
          Matrix d(1, output_dim(f));
          d.row(0) = (fp - fn).transpose();
          const Vector adv = engine.run(attack, x, d);
          pair_avg += loss(hinge, d * forward(f, adv)) / static_cast<double>(b);
          mean_d += (fp - fn) / static_cast<double>(b);
        }
        Matrix d(1, output_dim(f));
        d.row(0) = mean_d.transpose();
        const Vector adv = engine.run(attack, x, d);
        block_losses.push_back(loss(hinge, d * forward(f, adv)));
        pair_losses.push_back(pair_avg);
      }
      const RiskEstimate be = mc_estimate("block", block_losses);
      const RiskEstimate pe = mc_estimate("pair", pair_losses);
      const double slack = pe.value + 3.0 * std::hypot(be.stderr_, pe.stderr_) - be.value;
      worst_slack = std::min(worst_slack, slack);
      if (slack < 0.0) all_pass = false;
    }
  }
  out.pass = all_pass;
  std::ostringstream ss;
  ss << "20 extractors x b in {2,4,8}, worst slack " << worst_slack;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 6
Outcome inequality3() {
  Outcome out;
  const LatentClassModel model = make_gaussian_model(4, 8, 1.5, 0.5, std::nullopt, 606);
  const LossSpec hinge{LossKind::Hinge};
  const int k = 2;
  AttackSpec attack;
  attack.method = AttackMethod::ExactLinear;
  attack.p = kInf;
  attack.epsilon = 0.1;

  const auto constants = finite_class_constants(model, k, hinge);
  const auto ref = oracle::enumerate_constants(model.rho, k, false);
  if (!close12(constants.p_distinct, ref.p_distinct)) {
    out.pass = false;
    out.detail = "p_distinct disagrees with the independent enumeration";
    return out;
  }

  double worst_slack = kInf;
  int passed = 0;
  for (int t = 0; t < 10; ++t) {
    LinearExtractor proto;
    proto.weight = Matrix::Zero(4, 8);
    proto.p = 2.0;
    proto.budget = 1.5;
    const FeatureExtractor f =
        random_like(FeatureExtractor{proto}, 6000 + static_cast<std::uint64_t>(t));

    const RiskEstimate distinct = avg_adv_sup_risk_mu(
        f, model, k, hinge, attack, 250, 50, 120, Rng::derive(6100, t), TaskSampling::AllDistinct);
    const RiskEstimate collapsed = avg_adv_sup_risk_mu(
        f, model, k, hinge, attack, 250, 50, 120, Rng::derive(6200, t), TaskSampling::Collapsed);

    const double lhs = constants.p_distinct * distinct.value;
    const double combined = std::hypot(constants.p_distinct * distinct.stderr_,
                                       collapsed.stderr_);
    const double slack = collapsed.value + 3.0 * combined - lhs;
    worst_slack = std::min(worst_slack, slack);
    if (slack >= 0.0) ++passed;
  }
  out.pass = passed == 10;
  std::ostringstream ss;
  ss << passed << "/10 extractors, p_distinct " << constants.p_distinct << ", worst slack "
     << worst_slack;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- criterion 7
Outcome bound_soundness() {
  Outcome out;
  const LatentClassModel model = make_gaussian_model(3, 6, 1.2, 0.4, 2.0, 707);
  const LossSpec hinge{LossKind::Hinge};
  RademacherConfig rc;
  rc.n_sigma = 6;
  rc.n_restarts = 2;
  rc.ascent_steps = 12;
  rc.ascent_lr = 0.05;

  double worst_gap = kInf;
  bool all_pass = true;
  std::ostringstream detail;

  auto check_instance = [&](const FeatureExtractor& proto, const AttackSpec& attack,
                            double analytic_g, const ContrastiveBatch& batch,
                            std::uint64_t seed) {
    const RiskEstimate est = empirical_rademacher(proto, batch, hinge, attack, rc, seed);
    const double gap = analytic_g - est.value;
    worst_gap = std::min(worst_gap, gap);
    if (est.value > analytic_g) all_pass = false;
  };

  for (int t = 0; t < 10; ++t) {
    const auto batch = sample_pairs(model, 32, 1, Rng::derive(7100, t));

    // Thm 5 family: linear extractors under the exact l_inf attack
    LinearExtractor lin;
    lin.weight = Matrix::Zero(4, 6);
    lin.p = 2.0;
    lin.budget = 1.5;
    AttackSpec exact;
    exact.method = AttackMethod::ExactLinear;
    exact.p = kInf;
    exact.epsilon = 0.1;
    const DataNorms norms_lin = compute_data_norms(batch, lin.p, exact.p);
    const BoundReport lin_report =
        linear_bound_report(norms_lin, lin.budget, exact.epsilon, hinge, 0.05);
    check_instance(FeatureExtractor{lin}, exact, lin_report.eta * lin_report.rademacher_bound,
                   batch, Rng::derive(7200, t));

    // Thm 6 family: Frobenius MLPs under PGD
    MlpExtractor fro;
    fro.layers = {Matrix::Zero(5, 6), Matrix::Zero(4, 5), Matrix::Zero(3, 4)};
    fro.budgets = {1.5, 1.5, 1.5};
    fro.constraint = ConstraintKind::Frobenius;
    AttackSpec pgd;
    pgd.method = AttackMethod::Pgd;
    pgd.p = kInf;
    pgd.epsilon = 0.1;
    pgd.steps = 10;
    const DataNorms norms_mlp = compute_data_norms(batch, pgd.p, pgd.p);
    const BoundReport fro_report = mlp_bound_frobenius(fro, norms_mlp, pgd.epsilon, hinge, 0.05);
    check_instance(FeatureExtractor{fro}, pgd, fro_report.eta * fro_report.rademacher_bound,
                   batch, Rng::derive(7300, t));

    // Thm 7 family: l_{1,inf} MLPs under PGD
    MlpExtractor oneinf = fro;
    oneinf.constraint = ConstraintKind::OneInf;
    const BoundReport one_report = mlp_bound_oneinf(oneinf, norms_mlp, pgd.epsilon, hinge, 0.05);
    check_instance(FeatureExtractor{oneinf}, pgd, one_report.eta * one_report.rademacher_bound,
                   batch, Rng::derive(7400, t));
  }
  out.pass = all_pass;
  detail << "30 instances (10 per theorem), min analytic - empirical gap " << worst_gap;
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- criterion 8
Outcome formula_parity() {
  Outcome out;
  Rng rng(808);
  bool all = true;
  auto inv = [](double q) { return std::isinf(q) ? 0.0 : 1.0 / q; };
  auto conj = [](double q) { return q == 1.0 ? kInf : (std::isinf(q) ? 1.0 : q / (q - 1.0)); };

  for (int t = 0; t < 50 && all; ++t) {
    const double choices[] = {1.0, 2.0, kInf};
    const double p = choices[rng.uniform_index(3)];
    const double r = choices[rng.uniform_index(3)];
    const std::size_t m = 2 + rng.uniform_index(6);
    const std::size_t M = 4 + rng.uniform_index(60);
    const double eps = rng.uniform(0.0, 0.5);
    const double delta = rng.uniform(0.01, 0.5);
    const double X = rng.uniform(0.5, 2.0), Xp = rng.uniform(0.5, 2.0),
                 Xn = rng.uniform(0.5, 2.0);

    DataNorms n;
    n.p = p;
    n.r = r;
    n.m = m;
    n.M = M;
    n.X_pinf = X;
    n.Xpos_pinf = Xp;
    n.Xneg_pinf = Xn;
    n.P = std::max({X, Xp, Xn});
    n.Pstar = rng.uniform(0.5, 2.0);
    n.Rstar = rng.uniform(0.5, 2.0);

    // s(p, q, n)
    {
      const double s_ref = std::pow(double(m), std::abs(inv(p) - inv(r)));
      all = all && close12(s_factor(p, r, m), s_ref);
    }

    // Thm 5 + AG_M
    {
      const double w = rng.uniform(0.2, 2.0);
      const BoundReport rep = linear_bound_report(n, w, eps, LossSpec{LossKind::Hinge}, delta);
      const double s_pp = std::pow(double(m), std::abs(inv(conj(p)) - inv(p)));
      const double s_rp = std::pow(double(m), std::abs(inv(conj(r)) - inv(p)));
      const double rs_ref = 256.0 * double(m) * s_pp * w * w * std::sqrt(double(M)) *
                            (n.P * n.Pstar + eps * n.Rstar * s_rp);
      const double score = 2.0 * s_pp * w * w * (n.P * n.Pstar + eps * n.Rstar * s_rp);
      const double B_ref = 1.0 + score;  // hinge bound over [-score, score]
      const double ag_ref = 2.0 * (1.0 * rs_ref) / double(M) +
                            3.0 * B_ref * std::sqrt(std::log(4.0 / delta) / double(M)) +
                            B_ref * std::sqrt(std::log(2.0 / delta) / (2.0 * double(M)));
      all = all && close12(rep.rademacher_bound, rs_ref) && close12(rep.B, B_ref) &&
            close12(rep.ag_m, ag_ref);
    }

    // Thm 6 components
    {
      MlpExtractor mlp;
      const Eigen::Index h1 = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
      const Eigen::Index h2 = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
      mlp.layers = {Matrix::Zero(h1, static_cast<Eigen::Index>(m)), Matrix::Zero(h2, h1)};
      mlp.budgets = {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
      mlp.constraint = ConstraintKind::Frobenius;
      const BoundReport rep = mlp_bound_frobenius(mlp, n, eps, LossSpec{LossKind::Hinge}, delta);
      const double prod = mlp.budgets[0] * mlp.budgets[1];
      const double mfac = std::max(1.0, std::pow(double(m), 0.5 - inv(p)));
      const double bxe = prod * mfac * (X + eps);
      const double K_ref = 2.0 * bxe * (prod * mfac * Xp + prod * mfac * Xn);
      const double sum_hh = double(h1) * double(m) + double(h2) * double(h1);
      const double rs_ref =
          64.0 * std::sqrt(2.0) * std::sqrt(sum_hh) * std::sqrt(2.0) * K_ref * std::sqrt(double(M));
      const double B_ref = 1.0 + K_ref / 2.0;
      const double ag_ref = 2.0 * rs_ref / double(M) +
                            3.0 * B_ref * std::sqrt(std::log(4.0 / delta) / double(M)) +
                            B_ref * std::sqrt(std::log(2.0 / delta) / (2.0 * double(M)));
      all = all && close12(rep.components.at("K"), K_ref) &&
            close12(rep.components.at("B_X_eps_F"), bxe) &&
            close12(rep.rademacher_bound, rs_ref) && close12(rep.ag_m, ag_ref);
    }

    // Thm 7 components
    {
      MlpExtractor mlp;
      const Eigen::Index h1 = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
      const Eigen::Index h2 = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
      mlp.layers = {Matrix::Zero(h1, static_cast<Eigen::Index>(m)), Matrix::Zero(h2, h1)};
      mlp.budgets = {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
      mlp.constraint = ConstraintKind::OneInf;
      const BoundReport rep = mlp_bound_oneinf(mlp, n, eps, LossSpec{LossKind::Hinge}, delta);
      const double prod = mlp.budgets[0] * mlp.budgets[1];
      const double prod_h = double(h1) * mlp.budgets[0] * double(h2) * mlp.budgets[1];
      const double mfac = std::pow(double(m), 1.0 - inv(p));
      const double K0_ref = 2.0 * (prod * (X + eps)) * (prod_h * mfac * Xp + prod_h * mfac * Xn);
      const double K1_ref =
          K0_ref / 2.0 + prod_h * mfac * (X + eps) * (prod * Xp + prod * Xn);
      const double sum_hh = double(h1) * double(m) + double(h2) * double(h1);
      const double rs_ref = 64.0 * std::sqrt(2.0) * std::sqrt(sum_hh) *
                            std::sqrt(2.0 * K0_ref * K1_ref) * std::sqrt(double(M));
      all = all && close12(rep.components.at("K0"), K0_ref) &&
            close12(rep.components.at("K1"), K1_ref) && close12(rep.rademacher_bound, rs_ref);
    }

    // alpha(rho), beta against the recursive enumeration
    {
      const int C = 2 + static_cast<int>(rng.uniform_index(3));
      const int k = 1 + static_cast<int>(rng.uniform_index(2));
      Vector rho(C);
      for (int c = 0; c < C; ++c) rho[c] = 0.3 + rng.uniform();
      rho /= rho.sum();
      rho[C - 1] += 1.0 - rho.sum();
      LatentClassModel small;
      small.rho = rho;
      for (int c = 0; c < C; ++c) small.classes.push_back({Vector::Zero(2), 0.1});
      const auto fc = finite_class_constants(small, k, LossSpec{LossKind::Logistic});
      const auto ref = oracle::enumerate_constants(rho, k, true);
      all = all && close12(fc.alpha_rho, ref.alpha_rho) && close12(fc.beta, ref.beta) &&
            close12(fc.tau_k, ref.tau_k) && close12(fc.p_distinct, ref.p_distinct);
    }
  }
  out.pass = all;
  out.detail = all ? "all components match to 1e-12 on 50 parameter sets"
                   : "component mismatch beyond 1e-12";
  return out;
}

// ---------------------------------------------------------------- criterion 9
Outcome norm_lemma_suite() {
  Outcome out;
  Rng rng(909);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Vector x = rng.normal_vector(n);
    const double ps[] = {1.0, 1.5, 2.0, 4.0, kInf};
    const double p1 = ps[rng.uniform_index(5)];
    const double p2 = ps[rng.uniform_index(5)];
    const double lo = std::min(p1, p2), hi = std::max(p1, p2);
    // ||x||_{hi} <= ||x||_{lo} <= n^{1/lo - 1/hi} ||x||_{hi}
    if (lp_norm(x, hi) > lp_norm(x, lo) * (1.0 + 1e-12)) ++violations;
    if (lp_norm(x, lo) > std::pow(double(n), inv_exponent(lo) - inv_exponent(hi)) *
                             lp_norm(x, hi) * (1.0 + 1e-12))
      ++violations;
  }
  for (int t = 0; t < 1000; ++t) {
    const int m = 1 + static_cast<int>(rng.uniform_index(7));
    const int n = 1 + static_cast<int>(rng.uniform_index(7));
    const Matrix a = rng.uniform_matrix(m, n, -2, 2);
    const Vector b = rng.normal_vector(n);
    const Vector ab = a * b;
    if (ab.norm() > frobenius_norm(a) * b.norm() * (1.0 + 1e-12)) ++violations;
    if (lp_norm(ab, kInf) > one_inf_norm(a) * lp_norm(b, kInf) * (1.0 + 1e-12)) ++violations;
    if (lp_norm(ab, 1.0) > double(m) * one_inf_norm(a) * lp_norm(b, 1.0) * (1.0 + 1e-12))
      ++violations;
  }
  out.pass = violations == 0;
  std::ostringstream ss;
  ss << violations << " violations over 2000 random instances";
  out.detail = ss.str();
  return out;
}

// --------------------------------------------------------------- criterion 10
ExperimentConfig default_sweep_config() {
  Json j;
  j["seed"] = 1;
  j["generator"] = {{"classes", 10}, {"dim", 16},        {"mean_radius", 2.0},
                    {"stddev", 0.8}, {"clamp_box", 4.0}, {"seed", 7}};
  j["model"] = {{"kind", "mlp"},
                {"widths", {16, 24, 24, 12}},
                {"activation", "relu"},
                {"constraint", "frobenius"},
                {"budgets", {3.0, 3.0, 3.0}}};
  j["train"] = {{"lambda", 0.0},
                {"lr", 0.02},
                {"momentum", 0.9},
                {"weight_decay", 5e-4},
                {"batch_size", 32},
                {"iterations", 2000},
                {"attack",
                 {{"method", "pgd"}, {"p", "inf"}, {"epsilon", 0.1}, {"steps", 5}}},
                {"loss", {{"kind", "hinge"}}}};
  j["data"] = {{"M", 1024}, {"k", 1}};
  j["eval"] = {{"n_fit_per_class", 200},
               {"n_eval", 2500},
               {"attacks",
                Json::array({{{"method", "pgd"}, {"p", "inf"}, {"epsilon", 0.05}, {"steps", 10}},
                             {{"method", "pgd"}, {"p", "inf"}, {"epsilon", 0.1}, {"steps", 10}}})}};
  j["lambda_list"] = {0.0, 0.002, 0.05, 0.2};
  j["b_list"] = {1, 2, 4, 8};
  return experiment_config_from_json(j);
}

Outcome qualitative_sweeps() {
  Outcome out;
  const ExperimentConfig base = default_sweep_config();
  const std::vector<std::uint64_t> seeds = {11, 22, 33, 44, 55};
  const std::size_t n_eps = base.eval.attacks.size();

  // All (seed, sweep-point) runs, fanned out over a small worker pool.
  struct Job {
    std::uint64_t seed;
    double lambda;
    int b;  // 0 means pair mode (lambda sweep)
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : seeds) {
    for (double lambda : base.lambda_list) jobs.push_back({seed, lambda, 0});
    for (int b : base.b_list) jobs.push_back({seed, 0.0, b});
  }
  std::vector<RunMetrics> results(jobs.size());
  const std::size_t width = std::max(2u, std::thread::hardware_concurrency());
  std::size_t next = 0;
  while (next < jobs.size()) {
    const std::size_t begin = next;
    const std::size_t end = std::min(jobs.size(), begin + width);
    std::vector<std::future<RunMetrics>> futs;
    for (std::size_t i = begin; i < end; ++i)
      futs.push_back(std::async(std::launch::async, [&base, &jobs, i] {
        return run_single(base, jobs[i].lambda, jobs[i].b, jobs[i].seed);
      }));
    for (std::size_t i = begin; i < end; ++i) results[i] = futs[i - begin].get();
    next = end;
  }

  // seed-averaged adversarial accuracy per lambda / per b, per eval attack
  const std::size_t n_lambda = base.lambda_list.size();
  const std::size_t n_b = base.b_list.size();
  std::vector<std::vector<double>> lambda_acc(n_lambda, std::vector<double>(n_eps, 0.0));
  std::vector<std::vector<double>> b_acc(n_b, std::vector<double>(n_eps, 0.0));
  std::size_t idx = 0;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t l = 0; l < n_lambda; ++l) {
      for (std::size_t a = 0; a < n_eps; ++a)
        lambda_acc[l][a] += results[idx].adv_accuracy[a] / seeds.size();
      ++idx;
    }
    for (std::size_t bi = 0; bi < n_b; ++bi) {
      for (std::size_t a = 0; a < n_eps; ++a)
        b_acc[bi][a] += results[idx].adv_accuracy[a] / seeds.size();
      ++idx;
    }
  }

  bool lambda_ok = true;
  std::ostringstream detail;
  for (std::size_t a = 0; a < n_eps; ++a) {
    double best = -1.0;
    for (std::size_t l = 0; l < n_lambda; ++l) best = std::max(best, lambda_acc[l][a]);
    detail << "eps=" << base.eval.attacks[a].epsilon << ": lambda0 adv-acc " << lambda_acc[0][a]
           << ", best " << best << "; ";
    if (best < lambda_acc[0][a]) lambda_ok = false;
  }

  std::vector<double> bs, mean_acc;
  for (std::size_t bi = 0; bi < n_b; ++bi) {
    bs.push_back(static_cast<double>(base.b_list[bi]));
    double acc = 0.0;
    for (std::size_t a = 0; a < n_eps; ++a) acc += b_acc[bi][a] / static_cast<double>(n_eps);
    mean_acc.push_back(acc);
  }
  const double rho = spearman(bs, mean_acc);
  detail << "block adv-acc by b:";
  for (double v : mean_acc) detail << " " << v;
  detail << ", spearman " << rho;

  out.pass = lambda_ok && rho >= 0.0;
  out.detail = detail.str();
  return out;
}

// --------------------------------------------------------------- criterion 11
Outcome determinism() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "acl_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Json j;
  j["seed"] = 9;
  j["generator"] = {{"classes", 3}, {"dim", 6}, {"mean_radius", 1.5}, {"stddev", 0.4},
                    {"clamp_box", 3.0}};
  j["model"] = {{"kind", "mlp"},
                {"widths", {6, 8, 4}},
                {"constraint", "frobenius"},
                {"budgets", {2.0, 2.0}}};
  j["train"] = {{"lambda", 0.01},
                {"lr", 0.01},
                {"momentum", 0.9},
                {"batch_size", 8},
                {"iterations", 20},
                {"attack",
                 {{"method", "pgd"}, {"p", "inf"}, {"epsilon", 0.05}, {"steps", 3}}}};
  j["data"] = {{"M", 64}, {"k", 1}};
  j["eval"] = {{"n_fit_per_class", 20},
               {"n_eval", 100},
               {"attacks",
                Json::array({{{"method", "pgd"}, {"p", "inf"}, {"epsilon", 0.05}, {"steps", 3}}})}};
  j["lambda_list"] = {0.0, 0.01};
  j["b_list"] = {1, 2};
  const std::string config = (dir / "config.json").string();
  write_text_file(config, j.dump(2));

  const std::string cli = ACL_CLI_BIN;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  auto same = [&](const std::string& a, const std::string& b) {
    return read_text_file(a) == read_text_file(b);
  };

  struct Stage {
    std::string name;
    std::string args;
    std::vector<std::string> files;
  };
  const std::string model_a = (dir / "a" / "model.json").string();
  std::vector<Stage> stages = {
      {"gen-data", "gen-data --config " + config, {"batch.csv", "batch.json"}},
      {"train", "train --config " + config, {"model.json", "train_report.csv"}},
      {"eval", "eval --config " + config + " --model " + model_a, {"eval.json"}},
      {"attack-eval", "attack-eval --config " + config + " --model " + model_a,
       {"attack_eval.json"}},
      {"bounds", "bounds --config " + config + " --model " + model_a, {"bounds.json"}},
      {"sweep-regularizer", "sweep-regularizer --config " + config,
       {"sweep_regularizer.csv"}},
      {"sweep-block", "sweep-block --config " + config, {"sweep_block.csv"}},
      {"rademacher", "rademacher --config " + config + " --n-sigma 3 --n-restarts 1",
       {"rademacher.json"}},
  };

  bool all_same = true;
  std::ostringstream detail;
  for (const auto& stage : stages) {
    const std::string out_a = (dir / "a").string();
    const std::string out_b = (dir / "b").string();
    if (run(stage.args + " --out " + out_a) != 0 || run(stage.args + " --out " + out_b) != 0) {
      all_same = false;
      detail << stage.name << " failed to run; ";
      continue;
    }
    for (const auto& file : stage.files) {
      if (!same(out_a + "/" + file, out_b + "/" + file)) {
        all_same = false;
        detail << stage.name << "/" << file << " differs; ";
      }
    }
  }
  // library-level double check: training twice is bit-identical
  {
    const auto model = make_gaussian_model(3, 6, 1.5, 0.4, 3.0, 9);
    const auto data = sample_pairs(model, 64, 1, 77);
    MlpExtractor proto;
    proto.layers = {Matrix::Zero(8, 6), Matrix::Zero(4, 8)};
    proto.budgets = {2.0, 2.0};
    const FeatureExtractor init = random_like(FeatureExtractor{proto}, 5);
    TrainConfig tc;
    tc.lr = 0.01;
    tc.momentum = 0.9;
    tc.batch_size = 8;
    tc.iterations = 15;
    tc.seed = 3;
    tc.attack.method = AttackMethod::Pgd;
    tc.attack.p = kInf;
    tc.attack.epsilon = 0.05;
    tc.attack.steps = 3;
    const auto [m1, r1] = aerm_train(tc, init, data);
    const auto [m2, r2] = aerm_train(tc, init, data);
    const auto w1 = std::get<MlpExtractor>(m1).layers;
    const auto w2 = std::get<MlpExtractor>(m2).layers;
    for (std::size_t l = 0; l < w1.size(); ++l)
      if ((w1[l] - w2[l]).cwiseAbs().maxCoeff() != 0.0) all_same = false;
  }
  out.pass = all_same;
  out.detail = all_same ? "all pipeline stages byte-identical across two runs" : detail.str();
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "loss axioms (partition inequalities, convexity, monotonicity)", loss_axioms},
      {2, "gradient correctness vs central finite differences", gradient_correctness},
      {3, "exact linear adversary vs PGD(50)", exact_adversary_vs_pgd},
      {4, "supervised-risk chain for the mean classifier (k = 1)", lemma11_chain},
      {5, "block risk never exceeds the pair risk at fixed f", theorem3_ordering},
      {6, "distinct-task risk bound via p_distinct (k = 2)", inequality3},
      {7, "empirical Rademacher lower estimate below analytic bounds", bound_soundness},
      {8, "bound formula parity with straight-line recomputation", formula_parity},
      {9, "norm inequality suite", norm_lemma_suite},
      {10, "qualitative regularizer and block-size sweeps", qualitative_sweeps},
      {11, "byte-identical reproducibility of every pipeline stage", determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> requested;
  for (int i = 1; i < argc; ++i) requested.push_back(std::atoi(argv[i]));
  if (requested.empty())
    for (const auto& c : criteria()) requested.push_back(c.id);

  bool all_pass = true;
  for (int id : requested) {
    const auto it =
        std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return c.id == id; });
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const Outcome outcome = it->run();
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << it->name
              << " — " << outcome.detail << "\n";
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
