#pragma once

#include <map>

#include "acl/evaluation.hpp"
#include "acl/training.hpp"

namespace acl {

// Row-norm summaries of a contrastive batch used by the complexity bounds:
// P, P* and R* are the maxima over anchors / positives / negatives of the
// row p-, p*- and r*-norms.
struct DataNorms {
  double P = 0.0, Pstar = 0.0, Rstar = 0.0;
  double X_pinf = 0.0, Xpos_pinf = 0.0, Xneg_pinf = 0.0;
  std::size_t m = 0, M = 0;
  double p = 2.0, r = 2.0;
};

DataNorms compute_data_norms(const ContrastiveBatch& batch, double p, double r);

struct BoundReport {
  double rademacher_bound = 0.0;  // upper bound on R_S(H)
  double ag_m = 0.0;
  std::map<std::string, double> components;
  std::string constants_provenance = "appendix-explicit";
  double eta = 0.0;
  double B = 0.0;
  double delta = 0.0;
  std::size_t M = 0;
};

// Linear class under the l_r attack:
//   R_S(H) <= 256 m s(p*,p,m) w^2 sqrt(M) (P P* + eps R* s(r*,p,m))
double linear_bound(const DataNorms& norms, double w, double p, double r, double epsilon,
                    std::size_t M, std::size_t m);
BoundReport linear_bound_report(const DataNorms& norms, double w, double epsilon,
                                const LossSpec& loss, double delta);

// Frobenius-constrained MLP under the l_p attack:
//   R_S(H) <= 64 sqrt(2) sqrt(sum_l h_l h_{l-1}) sqrt(d) K sqrt(M),
//   K = 2 B^F_{X,eps} (B^F_{X+} + B^F_{X-}).
BoundReport mlp_bound_frobenius(const MlpExtractor& extractor, const DataNorms& norms,
                                double epsilon, const LossSpec& loss, double delta);

// l_{1,inf}-constrained MLP under the l_p attack:
//   R_S(H) <= 64 sqrt(2) sqrt(sum_l h_l h_{l-1}) sqrt(d K0 K1) sqrt(M).
BoundReport mlp_bound_oneinf(const MlpExtractor& extractor, const DataNorms& norms,
                             double epsilon, const LossSpec& loss, double delta);

// Proof-explicit deviation term:
//   AG_M = 2 R_S(G)/M + 3 B sqrt(ln(4/delta)/M) + B sqrt(ln(2/delta)/(2M)).
double ag_m(double rademacher_g, double B, double delta, std::size_t M);

// RHS of the k = 1 supervised-risk certificate:
//   (L~sun - tau l(0)) / (1 - tau) + AG_M / (1 - tau).
double theorem2_certificate(double lsun_value, double ag_m_value, double tau,
                            const LossSpec& loss);

// Exact enumeration over C^{k+1} tuples of the finite-class constants.
struct FiniteClassConstants {
  double tau_k = 0.0;
  double p_distinct = 0.0;
  double alpha_rho = 0.0;
  double beta = 0.0;
  struct TaskRow {
    std::vector<int> classes;
    double p_max = 0.0;        // max_c D_T(c), D_T uniform
    double rho_min_plus = 0.0; // min_c rho+(T)(c)
  };
  std::vector<TaskRow> tasks;
};

inline constexpr std::size_t kEnumerationGuard = 10000000;

FiniteClassConstants finite_class_constants(const LatentClassModel& model, int k,
                                            const LossSpec& loss);

// Monte-Carlo lower estimate of R_S(G) = E_sigma sup_f <sigma, (g_f)|S>.
// The inner sup is approximated from below by the best of `n_restarts`
// random feasible models, each refined with projected gradient ascent on
// <sigma, g_f>; the reported value never claims to exceed the true sup.
struct RademacherConfig {
  int n_sigma = 20;
  int n_restarts = 5;
  int ascent_steps = 100;
  double ascent_lr = 0.05;
  bool resample_hypotheses = true;  // false: evaluate the prototype only
};

RiskEstimate empirical_rademacher(const FeatureExtractor& prototype,
                                  const ContrastiveBatch& batch, const LossSpec& loss,
                                  const AttackSpec& attack, const RademacherConfig& config,
                                  std::uint64_t seed);

}  // namespace acl
