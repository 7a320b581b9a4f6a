#include "pens/gofs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pens {

FeatureMask FeatureMask::all(Eigen::Index n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return of(n, std::move(idx));
}

FeatureMask FeatureMask::of(Eigen::Index n, std::vector<int> selected) {
  FeatureMask m;
  m.weights_ = Vector::Zero(n);
  std::sort(selected.begin(), selected.end());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const int j = selected[i];
    if (j < 0 || j >= n || (i > 0 && selected[i - 1] == j)) throw ConfigError("feature mask: invalid index");
    m.weights_(j) = 1.0;
  }
  m.selected_ = std::move(selected);
  return m;
}

FeatureMask FeatureMask::top(const Vector& scores, int budget) {
  const auto n = scores.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores(a) > scores(b); });
  const auto b = static_cast<std::size_t>(std::clamp<Eigen::Index>(budget, 0, n));
  order.resize(b);
  return of(n, std::move(order));
}

Vector apply_mask(const FeatureMask& mask, const Vector& z) {
  if (mask.dim() != z.size()) throw DataError("apply_mask: dimension mismatch");
  return z.cwiseProduct(mask.weights());
}

Vector feature_contributions(const ConstRulePool& pool, Eigen::Index n) {
  Vector acc = Vector::Zero(n);
  for (const RuleBase* rb : pool) {
    for (const auto& r : rb->rules) acc += r.consequent.bottomRows(n).cwiseAbs().rowwise().sum();
  }
  const double total = acc.sum();
  if (!(total > 0.0)) return Vector::Constant(n, 1.0 / static_cast<double>(n));
  return acc / total;
}

double pooled_norm(const ConstRulePool& pool) {
  double sq = 0.0;
  for (const RuleBase* rb : pool) {
    for (const auto& r : rb->rules) sq += r.consequent.squaredNorm();
  }
  return std::sqrt(sq);
}

void gofs_step(GofsState& state, const RulePool& pool, const Vector& x, const Vector& xe_model,
               const Vector& xe_full, const Vector& target, bool correct) {
  const double shrink = 1.0 - state.alpha * state.chi;
  if (correct) {
    for (RuleBase* rb : pool) {
      for (auto& r : rb->rules) r.consequent *= shrink;
    }
    return;
  }

  std::vector<FuzzyRule*> rules;
  for (RuleBase* rb : pool) {
    for (auto& r : rb->rules) rules.push_back(&r);
  }
  if (rules.empty()) return;

  Vector lf(static_cast<Eigen::Index>(rules.size()));
  for (std::size_t i = 0; i < rules.size(); ++i) lf(static_cast<Eigen::Index>(i)) = log_fire(*rules[i], x);
  Vector lambda = (lf.array() - lf.maxCoeff()).exp();
  lambda /= lambda.sum();

  Vector score = Vector::Zero(target.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    score.noalias() += lambda(static_cast<Eigen::Index>(i)) * (rules[i]->consequent.transpose() * xe_model);
  }
  const Vector err = target - score;

  double sq = 0.0;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    Matrix& w = rules[i]->consequent;
    w = shrink * w + state.alpha * lambda(static_cast<Eigen::Index>(i)) * xe_full * err.transpose();
    sq += w.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double radius = 1.0 / std::sqrt(state.chi);
  if (norm > radius) {
    const double f = radius / norm;
    for (FuzzyRule* r : rules) r->consequent *= f;
  }

  ConstRulePool view(pool.begin(), pool.end());
  state.kappa = feature_contributions(view, xe_full.size() - 1);
  state.mask = FeatureMask::top(state.kappa, state.budget);
  state.initialized = true;
}

}  // namespace pens
