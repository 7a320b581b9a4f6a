#include "pens/pclass.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace pens {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_volumes_sum(const RuleBase& rb) {
  std::vector<double> lv;
  lv.reserve(rb.rules.size());
  for (const auto& r : rb.rules) lv.push_back(r.log_volume());
  return log_sum_exp(lv);
}

std::size_t nearest_rule(const RuleBase& rb, const Vector& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    const double d = (x - rb.rules[i].center).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void enforce_reserve_limit(RuleBase& rb, std::size_t limit) {
  while (rb.reserve.size() > limit) {
    auto it = std::min_element(rb.reserve.begin(), rb.reserve.end(),
                               [](const FuzzyRule& a, const FuzzyRule& b) { return a.density < b.density; });
    rb.reserve.erase(it);
  }
}

}  // namespace

double FuzzyRule::log_det_precision() const {
  Eigen::LLT<Matrix> llt(inv_cov);
  if (llt.info() != Eigen::Success) throw DataError("rule precision matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void DensityAccumulators::push(const Vector& x, double w) {
  if (sum.size() == 0) sum = Vector::Zero(x.size());
  weight += w;
  sum += w * x;
  sq_sum += w * x.squaredNorm();
}

double DensityAccumulators::density(const Vector& z) const {
  if (weight <= 0.0) return 1.0;
  const double msd = std::max(0.0, z.squaredNorm() - 2.0 * z.dot(sum) / weight + sq_sum / weight);
  return 1.0 / std::sqrt(1.0 + msd);
}

LearnerParams LearnerParams::from(const EnsembleConfig& cfg) {
  LearnerParams p;
  p.g_ds = cfg.g_ds;
  p.rho_vol = cfg.rho_vol;
  p.theta_ers = cfg.theta_ers;
  p.theta_pp = cfg.theta_pp;
  p.gamma_decay = cfg.gamma_decay;
  p.omega_init = cfg.omega_init;
  p.k_ov = cfg.k_ov;
  p.init_width = cfg.init_width;
  p.min_width = cfg.min_width;
  return p;
}

double log_fire(const FuzzyRule& rule, const Vector& x) {
  return -0.5 * mahalanobis_sq(x, rule.center, rule.inv_cov);
}

double fire(const FuzzyRule& rule, const Vector& x) { return std::exp(log_fire(rule, x)); }

Vector normalized_firing(const RuleBase& rb, const Vector& x) {
  const auto r = static_cast<Eigen::Index>(rb.rules.size());
  Vector lf(r);
  for (Eigen::Index i = 0; i < r; ++i) lf(i) = log_fire(rb.rules[static_cast<std::size_t>(i)], x);
  if (r == 0) return lf;
  const double m = lf.maxCoeff();
  Vector w = (lf.array() - m).exp();
  return w / w.sum();
}

Vector extend(const Vector& x) {
  Vector xe(x.size() + 1);
  xe(0) = 1.0;
  xe.tail(x.size()) = x;
  return xe;
}

Vector one_hot(int label, int classes) {
  Vector t = Vector::Zero(classes);
  t(label) = 1.0;
  return t;
}

Inference infer(const RuleBase& rb, const Vector& x, const Vector& xe) {
  if (rb.rules.empty()) throw UntrainedError("untrained expert: rule base is empty");
  const Vector lambda = normalized_firing(rb, x);
  Vector scores = Vector::Zero(rb.rules.front().consequent.cols());
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    scores.noalias() += lambda(static_cast<Eigen::Index>(i)) * (rb.rules[i].consequent.transpose() * xe);
  }
  Inference out;
  out.scores = scores;
  Eigen::Index best = 0;
  for (Eigen::Index o = 1; o < scores.size(); ++o) {
    if (scores(o) > scores(best)) best = o;
  }
  out.label = static_cast<int>(best);
  return out;
}

std::size_t winning_rule(const RuleBase& rb, const Vector& x) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    const double s = log_fire(rb.rules[i], x) + std::log(static_cast<double>(rb.rules[i].support));
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

Vector candidate_widths(const RuleBase& rb, const Vector& x, const Vector& ranges, const LearnerParams& params) {
  Vector sigma(x.size());
  if (rb.rules.empty()) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      sigma(j) = ranges.size() == x.size() && ranges(j) > 0.0 ? 0.1 * ranges(j) : params.init_width;
    }
  } else {
    const double dist = (x - rb.rules[nearest_rule(rb, x)].center).norm();
    sigma.setConstant(params.k_ov * dist);
  }
  return sigma.cwiseMax(params.min_width);
}

DatumSignificance datum_significance(const RuleBase& rb, const Vector& x, const Vector& err,
                                     const Vector& ranges, const LearnerParams& params) {
  DatumSignificance out;
  const double e = err.norm();
  if (e == 0.0) return out;
  const double log_cand = candidate_widths(rb, x, ranges, params).array().log().sum();
  const double log_total = log_sum_exp({log_cand, log_volumes_sum(rb)});
  out.ds = e * std::exp(log_cand - log_total);
  out.grow = out.ds >= params.g_ds;
  return out;
}

DataQuality data_quality(const DensityAccumulators& acc, const RuleBase& rb, const Vector& x) {
  DataQuality out;
  out.density = acc.density(x);
  if (rb.rules.empty()) {
    out.novelty = true;
    return out;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : rb.rules) {
    const double d = acc.density(r.center);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  out.novelty = out.density > hi || out.density < lo;
  return out;
}

bool volume_guard(const RuleBase& rb, std::size_t win, const Vector& ranges, double rho_vol) {
  const auto& rule = rb.rules.at(win);
  double log_range = 0.0;
  int live = 0;
  for (Eigen::Index j = 0; j < ranges.size(); ++j) {
    if (ranges(j) > 0.0) {
      log_range += std::log(ranges(j));
      ++live;
    }
  }
  if (live == 0) return true;
  const double log_width = -rule.log_det_precision() / (2.0 * static_cast<double>(rule.dim()));
  return log_width <= std::log(rho_vol) + log_range / live;
}

void grow_rule(RuleBase& rb, const Vector& x, std::optional<std::size_t> winner, const Vector& ranges,
               const LearnerParams& params, int classes) {
  const Vector sigma = candidate_widths(rb, x, ranges, params);
  FuzzyRule r;
  r.center = x;
  r.inv_cov = sigma.array().square().inverse().matrix().asDiagonal();
  r.support = 1;
  if (winner && *winner < rb.rules.size()) {
    r.consequent = rb.rules[*winner].consequent;
  } else {
    r.consequent = Matrix::Zero(x.size() + 1, classes);
  }
  r.rls_cov = params.omega_init * Matrix::Identity(x.size() + 1, x.size() + 1);
  rb.rules.push_back(std::move(r));
}

bool update_premise(FuzzyRule& rule, const Vector& x) {
  const long n_new = rule.support + 1;
  const double a = 1.0 / static_cast<double>(n_new);
  const Vector center = rule.center + (x - rule.center) * a;
  const Vector e = x - center;
  Matrix inv = rule.inv_cov;
  rank_one_precision_update(inv, e, a);
  inv = 0.5 * (inv + inv.transpose()).eval();
  if (!inv.allFinite() || !center.allFinite()) {
    std::clog << "pens: premise update skipped (non-finite intermediate)\n";
    return false;
  }
  rule.support = n_new;
  rule.center = center;
  rule.inv_cov = std::move(inv);
  return true;
}

void fwgrls_update(FuzzyRule& rule, const Vector& xe, const Vector& target, double lambda, double gamma_decay) {
  if (!(lambda > 0.0)) return;
  const Vector px = rule.rls_cov * xe;
  const double denom = 1.0 / lambda + xe.dot(px);
  const Vector gain = px / denom;
  const Vector residual = target - rule.consequent.transpose() * xe;
  rule.consequent = (1.0 - gamma_decay) * rule.consequent + gain * residual.transpose();
  rule.rls_cov -= gain * px.transpose();
  rule.rls_cov = 0.5 * (rule.rls_cov + rule.rls_cov.transpose()).eval();
}

std::size_t ers_prune(RuleBase& rb, double theta_ers, std::size_t reserve_limit) {
  if (rb.rules.size() <= 1) return 0;
  const double log_total = log_volumes_sum(rb);
  std::vector<double> score(rb.rules.size());
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    score[i] = std::exp(rb.rules[i].log_volume() - log_total) * rb.rules[i].consequent.norm();
  }
  const double cut = theta_ers * *std::max_element(score.begin(), score.end());
  std::vector<FuzzyRule> keep;
  std::size_t pruned = 0;
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    if (score[i] < cut) {
      rb.reserve.push_back(std::move(rb.rules[i]));
      ++pruned;
    } else {
      keep.push_back(std::move(rb.rules[i]));
    }
  }
  rb.rules = std::move(keep);
  enforce_reserve_limit(rb, reserve_limit);
  return pruned;
}

PplusResult pplus_step(RuleBase& rb, const DensityAccumulators& acc, const Vector& x, double theta_pp,
                       std::size_t reserve_limit) {
  PplusResult out;
  for (auto& r : rb.rules) r.density = acc.density(r.center);
  for (auto& r : rb.reserve) r.density = acc.density(r.center);

  if (rb.rules.size() > 1) {
    double top = 0.0;
    for (const auto& r : rb.rules) top = std::max(top, r.density);
    std::vector<FuzzyRule> keep;
    for (auto& r : rb.rules) {
      if (r.density < theta_pp * top) {
        rb.reserve.push_back(std::move(r));
        ++out.pruned;
      } else {
        keep.push_back(std::move(r));
      }
    }
    rb.rules = std::move(keep);
  }

  if (!rb.reserve.empty()) {
    const double dx = acc.density(x);
    double top = 0.0;
    for (const auto& r : rb.rules) top = std::max(top, r.density);
    std::vector<FuzzyRule> stay;
    for (auto& r : rb.reserve) {
      if (r.density > top && r.density > dx) {
        rb.rules.push_back(std::move(r));
        ++out.recalled;
      } else {
        stay.push_back(std::move(r));
      }
    }
    rb.reserve = std::move(stay);
  }
  enforce_reserve_limit(rb, reserve_limit);
  return out;
}

PClass::PClass(int inputs, int classes, LearnerParams params)
    : n_(inputs), classes_(classes), params_(params), inputs_(inputs) {
  acc_.sum = Vector::Zero(inputs);
}

void PClass::train_sample(const Vector& x, const Vector& xe, int label) {
  if (x.size() != n_ || xe.size() != n_ + 1) throw DataError("pclass: input dimension mismatch");
  if (label < 0 || label >= classes_) throw DataError("pclass: label out of range");
  inputs_.push(x);
  const Vector ranges = inputs_.range().matrix();
  const Vector target = one_hot(label, classes_);

  if (rules_.empty()) {
    acc_.push(x, 1.0);
    grow_rule(rules_, x, std::nullopt, ranges, params_, classes_);
  } else {
    double w = 0.0;
    for (const auto& r : rules_.rules) w = std::max(w, fire(r, x));
    acc_.push(x, w);

    const Inference inf = infer(rules_, x, xe);
    const Vector err = target - inf.scores;
    const DatumSignificance ds = datum_significance(rules_, x, err, ranges, params_);
    const DataQuality dq = data_quality(acc_, rules_, x);
    const std::size_t win = winning_rule(rules_, x);

    if (ds.grow && dq.novelty) {
      grow_rule(rules_, x, win, ranges, params_, classes_);
    } else {
      FuzzyRule backup = rules_.rules[win];
      if (!update_premise(rules_.rules[win], x)) {
        ++rules_.skipped_updates;
      } else if (!volume_guard(rules_, win, ranges, params_.rho_vol)) {
        rules_.rules[win] = std::move(backup);
        grow_rule(rules_, x, win, ranges, params_, classes_);
      }
    }
  }

  const Vector lambda = normalized_firing(rules_, x);
  for (std::size_t i = 0; i < rules_.rules.size(); ++i) {
    fwgrls_update(rules_.rules[i], xe, target, lambda(static_cast<Eigen::Index>(i)), params_.gamma_decay);
  }
  pplus_step(rules_, acc_, x, params_.theta_pp, params_.reserve_limit);
}

}  // namespace pens
