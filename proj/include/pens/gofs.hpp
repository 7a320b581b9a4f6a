#ifndef PENS_GOFS_HPP
#define PENS_GOFS_HPP

#include "pens/core.hpp"
#include "pens/pclass.hpp"

#include <vector>

namespace pens {

/// Crisp 0/1 feature selection of a fixed budget.
class FeatureMask {
 public:
  FeatureMask() = default;
  /// All features selected.
  static FeatureMask all(Eigen::Index n);
  /// Exactly the given indices; throws ConfigError on out-of-range or duplicate entries.
  static FeatureMask of(Eigen::Index n, std::vector<int> selected);
  /// The `budget` largest scores, ties to the lower index.
  static FeatureMask top(const Vector& scores, int budget);

  const std::vector<int>& selected() const { return selected_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index dim() const { return weights_.size(); }
  std::size_t size() const { return selected_.size(); }
  bool contains(int j) const { return weights_(j) != 0.0; }

  bool operator==(const FeatureMask& other) const { return selected_ == other.selected_ && dim() == other.dim(); }

 private:
  std::vector<int> selected_;
  Vector weights_;
};

/// Keeps selected entries of z, zeroes the rest.
Vector apply_mask(const FeatureMask& mask, const Vector& z);

/// Pooled rule bases of all experts, treated as one rule set.
using RulePool = std::vector<RuleBase*>;
using ConstRulePool = std::vector<const RuleBase*>;

/// Normalized absolute consequent weight per input (intercept excluded);
/// uniform when all weights vanish.
Vector feature_contributions(const ConstRulePool& pool, Eigen::Index n);

/// Pooled Frobenius norm of all consequents.
double pooled_norm(const ConstRulePool& pool);

struct GofsState {
  double alpha = 0.2;
  double chi = 0.01;
  int budget = 1;
  Vector kappa;
  FeatureMask mask;
  bool initialized = false;
};

/// One online feature-selection step.
///
/// Correct prediction: decay all consequents by (1 - alpha chi). Wrong
/// prediction: decay plus a gradient step on the pooled squared error, using
/// the unmasked regressor `xe_full` so deselected features keep receiving
/// evidence, then projection onto the L2 ball of radius 1/sqrt(chi) and a new
/// top-B mask. `x` is the premise input and `xe_model` the regressor the
/// experts actually use.
void gofs_step(GofsState& state, const RulePool& pool, const Vector& x, const Vector& xe_model,
               const Vector& xe_full, const Vector& target, bool correct);

}  // namespace pens

#endif  // PENS_GOFS_HPP
