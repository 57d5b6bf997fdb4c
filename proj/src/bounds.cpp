#include "acl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace acl {

namespace {

double max_row_norm(const Matrix& rows, double p) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    best = std::max(best, lp_norm(rows.row(i).transpose(), p));
  return best;
}

double max_row_norm(const std::vector<Matrix>& slots, double p) {
  double best = 0.0;
  for (const auto& m : slots) best = std::max(best, max_row_norm(m, p));
  return best;
}

}  // namespace

DataNorms compute_data_norms(const ContrastiveBatch& batch, double p, double r) {
  batch.check_consistent();
  const double pstar = conjugate_exponent(p);
  const double rstar = conjugate_exponent(r);
  DataNorms n;
  n.p = p;
  n.r = r;
  n.m = static_cast<std::size_t>(batch.dim());
  n.M = batch.size();
  n.X_pinf = max_row_norm(batch.anchors, p);
  n.Xpos_pinf = max_row_norm(batch.positives, p);
  n.Xneg_pinf = max_row_norm(batch.negatives, p);
  n.P = std::max({n.X_pinf, n.Xpos_pinf, n.Xneg_pinf});
  n.Pstar = std::max({max_row_norm(batch.anchors, pstar), max_row_norm(batch.positives, pstar),
                      max_row_norm(batch.negatives, pstar)});
  n.Rstar = std::max({max_row_norm(batch.anchors, rstar), max_row_norm(batch.positives, rstar),
                      max_row_norm(batch.negatives, rstar)});
  return n;
}

double linear_bound(const DataNorms& norms, double w, double p, double r, double epsilon,
                    std::size_t M, std::size_t m) {
  require(p >= 1.0 && r >= 1.0, "linear_bound: norm indices must be >= 1");
  require(epsilon >= 0.0, "linear_bound: epsilon must be >= 0");
  const double s_pp = dimension_factor(conjugate_exponent(p), p, m);
  const double s_rp = dimension_factor(conjugate_exponent(r), p, m);
  return 256.0 * static_cast<double>(m) * s_pp * w * w * std::sqrt(static_cast<double>(M)) *
         (norms.P * norms.Pstar + epsilon * norms.Rstar * s_rp);
}

BoundReport linear_bound_report(const DataNorms& norms, double w, double epsilon,
                                const LossSpec& loss, double delta) {
  require(epsilon >= 0.0, "linear_bound_report: epsilon must be >= 0");
  const double s_pp = dimension_factor(conjugate_exponent(norms.p), norms.p, norms.m);
  const double s_rp = dimension_factor(conjugate_exponent(norms.r), norms.p, norms.m);
  const double attack_term = epsilon * norms.Rstar * s_rp;
  const double rs_h = 256.0 * static_cast<double>(norms.m) * s_pp * w * w *
                      std::sqrt(static_cast<double>(norms.M)) *
                      (norms.P * norms.Pstar + attack_term);

  BoundReport report;
  report.rademacher_bound = rs_h;
  report.M = norms.M;
  report.delta = delta;
  report.eta = lipschitz_constant(loss);
  const double score_bound = 2.0 * s_pp * w * w * (norms.P * norms.Pstar + attack_term);
  report.B = effective_bound(loss, -score_bound, score_bound, 1);
  report.ag_m = ag_m(report.eta * rs_h, report.B, delta, norms.M);
  report.components = {{"P", norms.P},
                       {"Pstar", norms.Pstar},
                       {"Rstar", norms.Rstar},
                       {"s_pstar_p_m", s_pp},
                       {"s_rstar_p_m", s_rp},
                       {"w", w},
                       {"epsilon", epsilon},
                       {"m", static_cast<double>(norms.m)},
                       {"M", static_cast<double>(norms.M)},
                       {"score_bound", score_bound},
                       {"rs_h", rs_h}};
  return report;
}

namespace {

double sum_layer_products(const std::vector<Eigen::Index>& widths) {
  double sum = 0.0;
  for (std::size_t l = 1; l < widths.size(); ++l)
    sum += static_cast<double>(widths[l]) * static_cast<double>(widths[l - 1]);
  return sum;
}

}  // namespace

BoundReport mlp_bound_frobenius(const MlpExtractor& extractor, const DataNorms& norms,
                                double epsilon, const LossSpec& loss, double delta) {
  require(extractor.constraint == ConstraintKind::Frobenius,
          "mlp_bound_frobenius: extractor is not Frobenius-constrained");
  require(extractor.budgets.size() == extractor.layers.size(),
          "mlp_bound_frobenius: missing budgets");
  require(epsilon >= 0.0, "mlp_bound_frobenius: epsilon must be >= 0");

  const double L = extractor.activation_lipschitz();
  const int d = extractor.depth();
  const double m = static_cast<double>(norms.m);
  double prod_budgets = 1.0;
  for (double b : extractor.budgets) prod_budgets *= b;
  const double l_factor = std::pow(L, d - 1);
  const double m_factor = std::max(1.0, std::pow(m, 0.5 - inv_exponent(norms.p)));
  const double base = l_factor * prod_budgets * m_factor;

  const double b_x_eps = base * (norms.X_pinf + epsilon);
  const double b_x = base * norms.X_pinf;
  const double b_pos = base * norms.Xpos_pinf;
  const double b_neg = base * norms.Xneg_pinf;
  const double K = 2.0 * b_x_eps * (b_pos + b_neg);
  const double sum_hh = sum_layer_products(extractor.widths());
  const double rs_h = 64.0 * std::sqrt(2.0) * std::sqrt(sum_hh) * std::sqrt(double(d)) * K *
                      std::sqrt(static_cast<double>(norms.M));

  BoundReport report;
  report.rademacher_bound = rs_h;
  report.M = norms.M;
  report.delta = delta;
  report.eta = lipschitz_constant(loss);
  report.B = effective_bound(loss, -K / 2.0, K / 2.0, 1);
  report.ag_m = ag_m(report.eta * rs_h, report.B, delta, norms.M);
  report.components = {{"B_X_eps_F", b_x_eps}, {"B_X_F", b_x},
                       {"B_Xpos_F", b_pos},    {"B_Xneg_F", b_neg},
                       {"K", K},               {"sum_hl_hl1", sum_hh},
                       {"d", double(d)},       {"L", L},
                       {"epsilon", epsilon},   {"rs_h", rs_h}};
  return report;
}

BoundReport mlp_bound_oneinf(const MlpExtractor& extractor, const DataNorms& norms,
                             double epsilon, const LossSpec& loss, double delta) {
  require(extractor.constraint == ConstraintKind::OneInf,
          "mlp_bound_oneinf: extractor is not l_{1,inf}-constrained");
  require(extractor.budgets.size() == extractor.layers.size(),
          "mlp_bound_oneinf: missing budgets");
  require(epsilon >= 0.0, "mlp_bound_oneinf: epsilon must be >= 0");

  const double L = extractor.activation_lipschitz();
  const int d = extractor.depth();
  const double m = static_cast<double>(norms.m);
  const auto widths = extractor.widths();
  double prod_budgets = 1.0, prod_h_budgets = 1.0;
  for (int l = 0; l < d; ++l) {
    prod_budgets *= extractor.budgets[static_cast<std::size_t>(l)];
    prod_h_budgets *= static_cast<double>(widths[static_cast<std::size_t>(l) + 1]) *
                      extractor.budgets[static_cast<std::size_t>(l)];
  }
  const double l_factor = std::pow(L, d - 1);
  const double m_factor = std::pow(m, 1.0 - inv_exponent(norms.p));

  const double b1inf_x_eps = l_factor * prod_budgets * (norms.X_pinf + epsilon);
  const double b1inf_x = l_factor * prod_budgets * norms.X_pinf;
  const double b1inf_pos = l_factor * prod_budgets * norms.Xpos_pinf;
  const double b1inf_neg = l_factor * prod_budgets * norms.Xneg_pinf;
  const double bprime_x_eps = l_factor * prod_h_budgets * m_factor * (norms.X_pinf + epsilon);
  const double bprime_x = l_factor * prod_h_budgets * m_factor * norms.X_pinf;
  const double bprime_pos = l_factor * prod_h_budgets * m_factor * norms.Xpos_pinf;
  const double bprime_neg = l_factor * prod_h_budgets * m_factor * norms.Xneg_pinf;

  const double K0 = 2.0 * b1inf_x_eps * (bprime_pos + bprime_neg);
  const double K1 = K0 / 2.0 + bprime_x_eps * (b1inf_pos + b1inf_neg);
  const double sum_hh = sum_layer_products(widths);
  const double rs_h = 64.0 * std::sqrt(2.0) * std::sqrt(sum_hh) *
                      std::sqrt(double(d) * K0 * K1) * std::sqrt(static_cast<double>(norms.M));

  BoundReport report;
  report.rademacher_bound = rs_h;
  report.M = norms.M;
  report.delta = delta;
  report.eta = lipschitz_constant(loss);
  report.B = effective_bound(loss, -K0 / 2.0, K0 / 2.0, 1);
  report.ag_m = ag_m(report.eta * rs_h, report.B, delta, norms.M);
  report.components = {{"B1inf_X_eps", b1inf_x_eps}, {"B1inf_X", b1inf_x},
                       {"B1inf_Xpos", b1inf_pos},    {"B1inf_Xneg", b1inf_neg},
                       {"Bprime_X_eps", bprime_x_eps}, {"Bprime_X", bprime_x},
                       {"Bprime_Xpos", bprime_pos},  {"Bprime_Xneg", bprime_neg},
                       {"K0", K0},                   {"K1", K1},
                       {"sum_hl_hl1", sum_hh},       {"d", double(d)},
                       {"epsilon", epsilon},         {"rs_h", rs_h}};
  return report;
}

double ag_m(double rademacher_g, double B, double delta, std::size_t M) {
  require(delta > 0.0 && delta < 1.0, "ag_m: delta must be in (0, 1)");
  require(M >= 1, "ag_m: M must be >= 1");
  const double dm = static_cast<double>(M);
  return 2.0 * rademacher_g / dm + 3.0 * B * std::sqrt(std::log(4.0 / delta) / dm) +
         B * std::sqrt(std::log(2.0 / delta) / (2.0 * dm));
}

double theorem2_certificate(double lsun_value, double ag_m_value, double tau,
                            const LossSpec& loss) {
  require(tau < 1.0, "theorem2_certificate: tau must be < 1");
  return (lsun_value - tau * loss_at_zero(loss, 1)) / (1.0 - tau) + ag_m_value / (1.0 - tau);
}

FiniteClassConstants finite_class_constants(const LatentClassModel& model, int k,
                                            const LossSpec& loss) {
  model.validate();
  require(k >= 1, "finite_class_constants: k must be >= 1");
  const std::size_t C = model.num_classes();
  for (std::size_t c = 0; c < C; ++c)
    require(model.rho[static_cast<Eigen::Index>(c)] > 0.0,
            "finite_class_constants: all classes need positive probability");
  double tuple_count = std::pow(static_cast<double>(C), k + 1);
  require(tuple_count <= static_cast<double>(kEnumerationGuard),
          "finite_class_constants: enumeration guard exceeded");

  // Odometer over (c+, c1-, ..., ck-).
  std::vector<int> tuple(static_cast<std::size_t>(k) + 1, 0);
  double tau_k = 0.0;
  double p_valid = 0.0;       // P[all negatives differ from c+]
  double p_valid_distinct = 0.0;
  double collision_zero_loss = 0.0;  // E[l_{|I+|}(0) 1{I+ != empty}]

  struct TaskAcc {
    double weight = 0.0;
    std::map<int, double> positive_weight;
  };
  std::map<std::vector<int>, TaskAcc> tasks;

  while (true) {
    double prob = 1.0;
    for (int c : tuple) prob *= model.rho[c];

    const int cpos = tuple[0];
    int collisions = 0;
    bool distinct = true;
    for (int i = 1; i <= k; ++i) {
      if (tuple[static_cast<std::size_t>(i)] == cpos) ++collisions;
      for (int j = 1; j < i; ++j)
        if (tuple[static_cast<std::size_t>(i)] == tuple[static_cast<std::size_t>(j)])
          distinct = false;
    }
    if (collisions > 0) {
      tau_k += prob;
      collision_zero_loss += prob * loss_at_zero(loss, collisions);
    } else {
      p_valid += prob;
      if (distinct) p_valid_distinct += prob;
      std::vector<int> task(tuple.begin(), tuple.end());
      std::sort(task.begin(), task.end());
      task.erase(std::unique(task.begin(), task.end()), task.end());
      TaskAcc& acc = tasks[task];
      acc.weight += prob;
      acc.positive_weight[cpos] += prob;
    }

    int pos = k;
    while (pos >= 0) {
      if (++tuple[static_cast<std::size_t>(pos)] < static_cast<int>(C)) break;
      tuple[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  FiniteClassConstants out;
  out.tau_k = tau_k;
  require(p_valid > 0.0, "finite_class_constants: conditioning event has zero probability");
  out.p_distinct = p_valid_distinct / p_valid;

  double worst_ratio = 0.0;
  for (const auto& [task, acc] : tasks) {
    FiniteClassConstants::TaskRow row;
    row.classes = task;
    row.p_max = 1.0 / static_cast<double>(task.size());  // D_T uniform
    double min_plus = kInf;
    for (int c : task) {
      const auto it = acc.positive_weight.find(c);
      const double w = it == acc.positive_weight.end() ? 0.0 : it->second;
      min_plus = std::min(min_plus, w / acc.weight);
    }
    row.rho_min_plus = min_plus;
    require(min_plus > 0.0, "finite_class_constants: degenerate rho+(T)");
    worst_ratio = std::max(worst_ratio, row.p_max / row.rho_min_plus);
    out.tasks.push_back(std::move(row));
  }
  require(tau_k < 1.0, "finite_class_constants: tau_k must be < 1");
  out.alpha_rho = worst_ratio / (1.0 - tau_k);
  out.beta = tau_k > 0.0 ? out.alpha_rho * collision_zero_loss : 0.0;
  // collision_zero_loss already integrates the indicator, so
  // beta = alpha * tau_k * E[l(0)|I+ != empty] = alpha * collision_zero_loss.
  return out;
}

RiskEstimate empirical_rademacher(const FeatureExtractor& prototype,
                                  const ContrastiveBatch& batch, const LossSpec& loss,
                                  const AttackSpec& attack, const RademacherConfig& config,
                                  std::uint64_t seed) {
  batch.check_consistent();
  require(config.n_sigma >= 2, "empirical_rademacher: need at least 2 sigma draws");
  require(config.n_restarts >= 1, "empirical_rademacher: need at least 1 restart");
  const std::size_t M = batch.size();
  const int attack_k = batch.mode == ContrastiveBatch::Mode::Pair ? batch.slots : 1;

  // Correlation <sigma, g_f> with g_f the attacked per-tuple loss; gradient
  // w.r.t. the weights is taken at the attacked anchors (Danskin-style).
  auto correlation = [&](const FeatureExtractor& f, const std::vector<int>& sigma,
                         ScoreAttack& attacker, TupleGradient& objective, bool with_grad,
                         std::vector<Matrix>* grad) {
    double total = 0.0;
    for (std::size_t row = 0; row < M; ++row) {
      const Vector x = batch.anchors.row(static_cast<Eigen::Index>(row)).transpose();
      Matrix d;
      const Eigen::Index n = output_dim(f);
      if (batch.mode == ContrastiveBatch::Mode::Pair) {
        const Vector fp =
            forward(f, batch.positives[0].row(static_cast<Eigen::Index>(row)).transpose());
        d.resize(batch.slots, n);
        for (int i = 0; i < batch.slots; ++i)
          d.row(i) = (fp - forward(f, batch.negatives[static_cast<std::size_t>(i)]
                                          .row(static_cast<Eigen::Index>(row))
                                          .transpose()))
                         .transpose();
      } else {
        Vector mean_pos = Vector::Zero(n), mean_neg = Vector::Zero(n);
        for (int j = 0; j < batch.slots; ++j) {
          mean_pos += forward(f, batch.positives[static_cast<std::size_t>(j)]
                                     .row(static_cast<Eigen::Index>(row))
                                     .transpose());
          mean_neg += forward(f, batch.negatives[static_cast<std::size_t>(j)]
                                     .row(static_cast<Eigen::Index>(row))
                                     .transpose());
        }
        d.resize(1, n);
        d.row(0) = ((mean_pos - mean_neg) / static_cast<double>(batch.slots)).transpose();
      }
      const Vector x_adv = attacker.run(attack, x, d);
      const double sgn = static_cast<double>(sigma[row]);
      Matrix pos(batch.mode == ContrastiveBatch::Mode::Pair ? 1 : batch.slots, batch.dim());
      if (batch.mode == ContrastiveBatch::Mode::Pair) {
        pos.row(0) = batch.positives[0].row(static_cast<Eigen::Index>(row));
      } else {
        for (int j = 0; j < batch.slots; ++j)
          pos.row(j) = batch.positives[static_cast<std::size_t>(j)].row(
              static_cast<Eigen::Index>(row));
      }
      Matrix neg(batch.slots, batch.dim());
      for (int j = 0; j < batch.slots; ++j)
        neg.row(j) =
            batch.negatives[static_cast<std::size_t>(j)].row(static_cast<Eigen::Index>(row));
      if (with_grad)
        total += sgn * objective.accumulate(f, x_adv, pos, neg, sgn, *grad);
      else
        total += sgn * objective.loss_only(f, x_adv, pos, neg);
    }
    return total;
  };

  std::vector<double> per_sigma;
  per_sigma.reserve(static_cast<std::size_t>(config.n_sigma));
  for (int s = 0; s < config.n_sigma; ++s) {
    Rng sigma_rng(Rng::derive(seed, static_cast<std::uint64_t>(s)));
    std::vector<int> sigma(M);
    for (auto& v : sigma) v = sigma_rng.rademacher();

    double best = -kInf;
    for (int restart = 0; restart < config.n_restarts; ++restart) {
      FeatureExtractor f =
          config.resample_hypotheses
              ? random_like(prototype, Rng::derive(seed, 0x9000 + 131 * s + restart))
              : prototype;
      ScoreAttack attacker(f, loss, attack_k);
      TupleGradient objective(f, loss, batch.mode, batch.slots);

      best = std::max(best, correlation(f, sigma, attacker, objective, false, nullptr));
      std::vector<Matrix> linear_storage;
      for (int step = 0; step < config.ascent_steps; ++step) {
        std::vector<Matrix> grad;
        if (auto* lin = std::get_if<LinearExtractor>(&f)) {
          grad.push_back(Matrix::Zero(lin->weight.rows(), lin->weight.cols()));
        } else {
          for (const auto& w : std::get<MlpExtractor>(f).layers)
            grad.push_back(Matrix::Zero(w.rows(), w.cols()));
        }
        correlation(f, sigma, attacker, objective, true, &grad);
        if (auto* lin = std::get_if<LinearExtractor>(&f)) {
          lin->weight += config.ascent_lr * grad[0];
        } else {
          auto& mlp = std::get<MlpExtractor>(f);
          for (std::size_t l = 0; l < mlp.layers.size(); ++l)
            mlp.layers[l] += config.ascent_lr * grad[l];
        }
        f = project_to_budget(std::move(f));
        best = std::max(best, correlation(f, sigma, attacker, objective, false, nullptr));
      }
    }
    per_sigma.push_back(best);
  }
  return mc_estimate("rademacher_lower", per_sigma);
}

}  // namespace acl
