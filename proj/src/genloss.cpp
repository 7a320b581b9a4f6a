#include "pens/genloss.hpp"

#include <algorithm>
#include <cmath>

namespace pens {

WidthTransform width_transform(const FuzzyRule& rule) {
  const double log_det = rule.log_det_precision();
  WidthTransform out;
  out.center = rule.center;
  out.width = std::sqrt(2.0) * std::exp(-log_det / (2.0 * static_cast<double>(rule.dim())));
  if (!(out.width > 0.0) || !std::isfinite(out.width)) throw DataError("width transform: degenerate rule");
  return out;
}

SsmTerms sensitivity_terms(const RuleBase& expert, const Moments& moments, double q, const Vector& mask,
                           double exp_ceiling) {
  SsmTerms out;
  const Eigen::Index n = moments.dim();
  const Eigen::ArrayXd mu = moments.mean();
  const Eigen::ArrayXd var = moments.variance();
  const Eigen::ArrayXd c3 = moments.central3();
  const Eigen::ArrayXd c4 = moments.central4();

  Vector mean_x = mu.matrix();
  if (mask.size() == n) mean_x = mean_x.cwiseProduct(mask);
  const Vector mean_xe = extend(mean_x);

  double sum_nu = 0.0;
  double sum_varsigma = 0.0;
  const double log_ceiling = std::log(exp_ceiling);
  for (const auto& rule : expert.rules) {
    SsmTerm t;
    const WidthTransform wt = width_transform(rule);
    t.center = wt.center;
    t.width = wt.width;
    const Eigen::ArrayXd d = mu - rule.center.array();
    t.mean_s = (var + d.square()).sum();
    t.var_s = std::max(0.0, (c4 - var.square() + 4.0 * var * d.square() + 4.0 * c3 * d).sum());
    t.magnitude = (rule.consequent.transpose() * mean_xe).norm();
    const double v2 = t.width * t.width;
    const double v4 = v2 * v2;
    double expo = t.var_s / (2.0 * v4) - t.mean_s / v2;
    if (expo > log_ceiling) {
      expo = log_ceiling;
      t.clamped = true;
      out.clamped = true;
    }
    t.phi = t.magnitude * std::exp(expo);
    t.nu = t.phi * t.mean_s / v4;
    t.varsigma = t.phi / v4;
    sum_nu += t.nu;
    sum_varsigma += t.varsigma;
    out.rules.push_back(std::move(t));
  }
  const double q2 = q * q;
  out.e_sq = q2 / 3.0 * sum_nu + 0.2 * q2 * q2 * static_cast<double>(n) / 9.0 * sum_varsigma;
  return out;
}

double localized_bound(double r_emp, double e_sq, double a, double b_max, std::size_t p, double eta) {
  const double eps = b_max * std::sqrt(std::log(1.0 / eta) / (2.0 * static_cast<double>(p)));
  const double root = std::sqrt(std::max(0.0, r_emp)) + std::sqrt(std::max(0.0, e_sq)) + a;
  return root * root + eps;
}

GenErrorEstimate localized_gen_error(const RuleBase& expert, const std::vector<EvalSample>& chunk,
                                     const Moments& chunk_moments, double q, double eta, double& b_max,
                                     const Vector& mask, double exp_ceiling) {
  if (chunk.empty()) throw DataError("localized generalization error: empty chunk");
  GenErrorEstimate est;
  double total = 0.0;
  for (const auto& s : chunk) {
    const Inference inf = infer(expert, s.x, s.xe);
    const Vector t = one_hot(s.label, static_cast<int>(inf.scores.size()));
    const double se = (inf.scores - t).squaredNorm() / static_cast<double>(inf.scores.size());
    total += se;
    b_max = std::max(b_max, se);
  }
  est.r_emp = total / static_cast<double>(chunk.size());
  est.e_sq = stochastic_sensitivity(expert, chunk_moments, q, mask, exp_ceiling);
  est.a = 1.0;
  est.b_max = b_max;
  est.epsilon = b_max * std::sqrt(std::log(1.0 / eta) / (2.0 * static_cast<double>(chunk.size())));
  est.r_sm = localized_bound(est.r_emp, est.e_sq, est.a, b_max, chunk.size(), eta);
  return est;
}

void GenErrorHistory::push(double v) {
  ++count_;
  const double delta = v - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (v - mean_);
}

double GenErrorHistory::stddev() const { return std::sqrt(std::max(0.0, variance())); }

bool gen_prune_decision(GenErrorHistory& hist, double current, PruneDirection dir) {
  bool prune = false;
  if (hist.count() >= 5) {
    const double band = 3.0 * hist.stddev();
    prune = dir == PruneDirection::kLarge ? current > hist.mean() + band : current < hist.mean() - band;
  }
  hist.push(current);
  return prune;
}

}  // namespace pens
