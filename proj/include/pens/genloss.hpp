#ifndef PENS_GENLOSS_HPP
#define PENS_GENLOSS_HPP

#include "pens/core.hpp"
#include "pens/pclass.hpp"

#include <cstdint>
#include <vector>

namespace pens {

/// Isotropic Gaussian equivalent of a rule premise.
struct WidthTransform {
  Vector center;
  double width = 0.0;
};

/// c = u and v = sqrt(2) det(Sigma)^{1/(2n)}.
WidthTransform width_transform(const FuzzyRule& rule);

struct SsmTerm {
  Vector center;
  double width = 0.0;
  double magnitude = 0.0;  // g_i
  double mean_s = 0.0;     // E(s_i)
  double var_s = 0.0;      // Var(s_i)
  double phi = 0.0;
  double nu = 0.0;
  double varsigma = 0.0;
  bool clamped = false;
};

struct SsmTerms {
  std::vector<SsmTerm> rules;
  double e_sq = 0.0;
  bool clamped = false;
};

/// Per-rule terms and the stochastic sensitivity E_SQ((dy)^2).
///
/// `moments` describe the inputs in the premise coordinates. `mask`, when
/// non-empty, zeroes masked features of the mean used in the consequent
/// magnitude g_i.
SsmTerms sensitivity_terms(const RuleBase& expert, const Moments& moments, double q,
                           const Vector& mask = Vector(), double exp_ceiling = 1e12);

inline double stochastic_sensitivity(const RuleBase& expert, const Moments& moments, double q,
                                     const Vector& mask = Vector(), double exp_ceiling = 1e12) {
  return sensitivity_terms(expert, moments, q, mask, exp_ceiling).e_sq;
}

struct GenErrorEstimate {
  double r_emp = 0.0;
  double e_sq = 0.0;
  double a = 1.0;
  double b_max = 0.0;
  double epsilon = 0.0;
  double r_sm = 0.0;
};

/// (sqrt(r_emp) + sqrt(e_sq) + A)^2 + B sqrt(ln(1/eta) / (2P)).
double localized_bound(double r_emp, double e_sq, double a, double b_max, std::size_t p, double eta);

/// Chunk inputs for a generalization estimate: premise inputs plus regressors.
struct EvalSample {
  Vector x;
  Vector xe;
  int label = 0;
};

/// R_SM(Q) of `expert` on a chunk. `b_max` is the expert's running maximum
/// per-sample MSE and is raised in place.
GenErrorEstimate localized_gen_error(const RuleBase& expert, const std::vector<EvalSample>& chunk,
                                     const Moments& chunk_moments, double q, double eta, double& b_max,
                                     const Vector& mask = Vector(), double exp_ceiling = 1e12);

/// Running count/mean/variance of an expert's R_SM across chunks.
class GenErrorHistory {
 public:
  void push(double v);
  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ ? m2_ / static_cast<double>(count_) : 0.0; }
  double stddev() const;

  void restore(std::uint64_t count, double mean, double m2) {
    count_ = count;
    mean_ = mean;
    m2_ = m2;
  }
  double m2() const { return m2_; }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Three-sigma test of `current` against the history (needs >= 5 entries),
/// then records `current`.
bool gen_prune_decision(GenErrorHistory& hist, double current, PruneDirection dir = PruneDirection::kLarge);

}  // namespace pens

#endif  // PENS_GENLOSS_HPP
