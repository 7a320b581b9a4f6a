#ifndef PENS_PCLASS_HPP
#define PENS_PCLASS_HPP

#include "pens/core.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace pens {

/// Raised when inference is requested from a learner with no rules.
class UntrainedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// One first-order TSK rule with a multivariate Gaussian premise.
///
/// `consequent` is (n+1) x O with row 0 the intercept. `rls_cov` is the
/// per-rule recursive least squares covariance over the regressor [1, x].
struct FuzzyRule {
  Vector center;
  Matrix inv_cov;
  long support = 1;
  Matrix consequent;
  Matrix rls_cov;
  double density = 0.0;

  Eigen::Index dim() const { return center.size(); }
  /// log det(inv_cov); throws DataError if the precision is not positive definite.
  double log_det_precision() const;
  /// log of the volume proxy det(Sigma)^{1/2}.
  double log_volume() const { return -0.5 * log_det_precision(); }
};

struct RuleBase {
  std::vector<FuzzyRule> rules;
  std::vector<FuzzyRule> reserve;
  long skipped_updates = 0;

  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }
};

/// Weighted sums for recursive density estimation.
struct DensityAccumulators {
  double weight = 0.0;
  Vector sum;
  double sq_sum = 0.0;

  void push(const Vector& x, double w);
  /// Inverse multiquadric of the weighted mean squared distance from z to the data.
  double density(const Vector& z) const;
};

struct LearnerParams {
  double g_ds = 0.05;
  double rho_vol = 0.3;
  double theta_ers = 0.1;
  double theta_pp = 0.1;
  double gamma_decay = 1e-4;
  double omega_init = 1e5;
  double k_ov = 0.5;
  double init_width = 0.5;
  double min_width = 0.05;
  std::size_t reserve_limit = 64;

  static LearnerParams from(const EnsembleConfig& cfg);
};

/// Mahalanobis form (x-u)' inv_cov (x-u).
template <typename DerivedX, typename DerivedU, typename DerivedP>
typename DerivedX::Scalar mahalanobis_sq(const Eigen::MatrixBase<DerivedX>& x,
                                         const Eigen::MatrixBase<DerivedU>& u,
                                         const Eigen::MatrixBase<DerivedP>& inv_cov) {
  const auto d = (x - u).eval();
  return d.dot(inv_cov * d);
}

/// Rank-one update of a precision matrix for Sigma <- (1-a) Sigma + a e e'.
template <typename Derived, typename DerivedE>
void rank_one_precision_update(Eigen::MatrixBase<Derived>& inv_cov, const Eigen::MatrixBase<DerivedE>& e,
                               typename Derived::Scalar a) {
  using Scalar = typename Derived::Scalar;
  const auto pe = (inv_cov * e).eval();
  const Scalar q = e.dot(pe);
  const Scalar denom = (Scalar(1) - a) + a * q;
  inv_cov = (inv_cov - (a / denom) * pe * pe.transpose()) / (Scalar(1) - a);
}

/// Firing strength exp(-d^2/2) in (0, 1].
double fire(const FuzzyRule& rule, const Vector& x);
double log_fire(const FuzzyRule& rule, const Vector& x);

/// Normalized firing strengths of all active rules (underflow safe).
Vector normalized_firing(const RuleBase& rb, const Vector& x);

/// Regressor [1, x].
Vector extend(const Vector& x);

struct Inference {
  Vector scores;
  int label = 0;
};

/// Weighted consequent output. `xe` is the consequent regressor (leading 1).
Inference infer(const RuleBase& rb, const Vector& x, const Vector& xe);
inline Inference infer(const RuleBase& rb, const Vector& x) { return infer(rb, x, extend(x)); }

/// argmax_i phi_i(x) N_i, ties to the lowest index.
std::size_t winning_rule(const RuleBase& rb, const Vector& x);

struct DatumSignificance {
  double ds = 0.0;
  bool grow = false;
};

/// Candidate rule widths for a rule grown at x (per axis standard deviations).
Vector candidate_widths(const RuleBase& rb, const Vector& x, const Vector& ranges, const LearnerParams& params);

DatumSignificance datum_significance(const RuleBase& rb, const Vector& x, const Vector& err,
                                     const Vector& ranges, const LearnerParams& params);

struct DataQuality {
  double density = 0.0;
  bool novelty = false;
};

DataQuality data_quality(const DensityAccumulators& acc, const RuleBase& rb, const Vector& x);

/// True when the winner's geometric-mean width stays within rho times the
/// geometric-mean feature range (constant features excluded).
bool volume_guard(const RuleBase& rb, std::size_t win, const Vector& ranges, double rho_vol);

/// Appends a rule centred at x. Consequent copied from `winner` when given.
void grow_rule(RuleBase& rb, const Vector& x, std::optional<std::size_t> winner, const Vector& ranges,
               const LearnerParams& params, int classes);

/// Sequential ML update of the winner's centre and precision. Returns false
/// (rule untouched) if the update produced non-finite values.
bool update_premise(FuzzyRule& rule, const Vector& x);

/// Fuzzily weighted RLS step with weight decay on one rule.
void fwgrls_update(FuzzyRule& rule, const Vector& xe, const Vector& target, double lambda, double gamma_decay);

/// Moves rules with low premise-volume x consequent-norm significance to the reserve.
std::size_t ers_prune(RuleBase& rb, double theta_ers, std::size_t reserve_limit = 64);

struct PplusResult {
  std::size_t pruned = 0;
  std::size_t recalled = 0;
};

/// Refreshes densities of all rules, prunes stale active rules, recalls reserve rules.
PplusResult pplus_step(RuleBase& rb, const DensityAccumulators& acc, const Vector& x, double theta_pp,
                       std::size_t reserve_limit = 64);

Vector one_hot(int label, int classes);

/// pClass local learner: rule base plus the running statistics it needs.
class PClass {
 public:
  PClass() = default;
  PClass(int inputs, int classes, LearnerParams params);

  /// One training step. `x` feeds the premise, `xe` the consequents.
  void train_sample(const Vector& x, const Vector& xe, int label);
  void train_sample(const Vector& x, int label) { train_sample(x, extend(x), label); }

  Inference predict(const Vector& x, const Vector& xe) const { return infer(rules_, x, xe); }
  Inference predict(const Vector& x) const { return infer(rules_, x); }

  /// ERS pass; call once per training chunk.
  std::size_t prune_insignificant() { return ers_prune(rules_, params_.theta_ers, params_.reserve_limit); }

  const RuleBase& rules() const { return rules_; }
  RuleBase& rules() { return rules_; }
  const DensityAccumulators& accumulators() const { return acc_; }
  DensityAccumulators& accumulators() { return acc_; }
  const Moments& input_stats() const { return inputs_; }
  Moments& input_stats() { return inputs_; }
  const LearnerParams& params() const { return params_; }
  int inputs() const { return n_; }
  int classes() const { return classes_; }

 private:
  int n_ = 0;
  int classes_ = 0;
  LearnerParams params_;
  RuleBase rules_;
  DensityAccumulators acc_;
  Moments inputs_;
};

}  // namespace pens

#endif  // PENS_PCLASS_HPP
