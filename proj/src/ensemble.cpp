#include "pens/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace pens {

VoteResult vote_predict(const std::vector<LocalExpert>& experts, const Vector& x, const Vector& xe, int classes) {
  if (experts.empty()) throw UntrainedError("untrained ensemble: no local experts");
  VoteResult out;
  out.votes = Vector::Zero(classes);
  out.local.reserve(experts.size());
  out.scores.reserve(experts.size());
  for (const auto& e : experts) {
    Inference inf = e.learner.predict(x, xe);
    out.votes(inf.label) += e.weight;
    out.local.push_back(inf.label);
    out.scores.push_back(std::move(inf.scores));
  }
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < out.votes.size(); ++c) {
    if (out.votes(c) > out.votes(best)) best = c;
  }
  out.label = static_cast<int>(best);
  return out;
}

void update_weights(std::vector<LocalExpert>& experts, const std::vector<int>& local, int truth, double p) {
  for (std::size_t i = 0; i < experts.size(); ++i) {
    auto& w = experts[i].weight;
    w = local[i] == truth ? std::min(w * (2.0 - p), 1.0) : w * p;
  }
}

namespace {

void normalize(std::vector<LocalExpert>& experts) {
  double total = 0.0;
  for (const auto& e : experts) total += e.weight;
  if (total > 0.0) {
    for (auto& e : experts) e.weight /= total;
  } else if (!experts.empty()) {
    for (auto& e : experts) e.weight = 1.0 / static_cast<double>(experts.size());
  }
}

}  // namespace

std::size_t normalize_and_prune(std::vector<LocalExpert>& experts, double theta) {
  if (experts.empty()) return 0;
  normalize(experts);
  if (experts.size() == 1) return 0;
  const auto before = experts.size();
  const auto best = std::max_element(experts.begin(), experts.end(), [](const LocalExpert& a, const LocalExpert& b) {
                      return a.weight < b.weight;
                    }) - experts.begin();
  std::vector<LocalExpert> keep;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    // The heaviest expert stays even if every weight falls below theta.
    if (experts[i].weight >= theta || static_cast<std::ptrdiff_t>(i) == best) keep.push_back(std::move(experts[i]));
  }
  experts = std::move(keep);
  if (experts.size() != before) normalize(experts);
  return before - experts.size();
}

Pensemble::Pensemble(EnsembleConfig cfg)
    : cfg_(cfg),
      params_(LearnerParams::from(cfg)),
      monitor_(cfg.alpha_w, cfg.alpha_d),
      moments_(cfg.inputs) {
  cfg_.validate();
  gofs_.alpha = cfg_.gofs_alpha;
  gofs_.chi = cfg_.gofs_chi;
  gofs_.budget = cfg_.effective_budget();
  gofs_.kappa = Vector::Constant(cfg_.inputs, 1.0 / cfg_.inputs);
  gofs_.mask = FeatureMask::all(cfg_.inputs);
}

Vector Pensemble::regressor_input(const Vector& z) const {
  return gofs_.initialized ? apply_mask(gofs_.mask, z) : z;
}

std::pair<Vector, Vector> Pensemble::prepare(const Vector& raw) const {
  const Vector z = standardize(moments_, raw);
  return {z, extend(regressor_input(z))};
}

RulePool Pensemble::pool() {
  RulePool p;
  for (auto& e : experts_) p.push_back(&e.learner.rules());
  return p;
}

void Pensemble::train_expert(LocalExpert& e, const std::vector<EvalSample>& buf) {
  for (const auto& s : buf) e.learner.train_sample(s.x, s.xe, s.label);
  e.learner.prune_insignificant();
}

VoteResult Pensemble::predict_detail(const Vector& x) const {
  if (x.size() != cfg_.inputs) throw DataError("predict: dimension mismatch");
  const auto [z, xe] = prepare(x);
  return vote_predict(experts_, z, xe, cfg_.classes);
}

std::size_t Pensemble::total_rules() const {
  std::size_t r = 0;
  for (const auto& e : experts_) r += e.learner.rules().size();
  return r;
}

std::size_t Pensemble::parameter_count() const {
  const auto n = static_cast<std::size_t>(cfg_.inputs);
  const auto o = static_cast<std::size_t>(cfg_.classes);
  return total_rules() * (n + n * (n + 1) / 2 + (n + 1) * o);
}

std::vector<int> Pensemble::active_features() const {
  if (!gofs_.initialized) return FeatureMask::all(cfg_.inputs).selected();
  return gofs_.mask.selected();
}

ChunkReport Pensemble::process_chunk(const DataChunk& chunk) {
  const auto start = std::chrono::steady_clock::now();
  chunk.validate(cfg_.inputs, cfg_.classes);

  ChunkReport rep;
  rep.chunk = chunks_seen_;
  rep.samples = chunk.size();

  std::vector<EvalSample> buf;
  buf.reserve(chunk.size());
  Moments chunk_moments(cfg_.inputs);

  if (experts_.empty()) {
    for (const auto& s : chunk.samples) {
      moments_.push(s.x);
      const Vector z = standardize(moments_, s.x);
      chunk_moments.push(z);
      buf.push_back({z, extend(regressor_input(z)), s.label});
    }
    LocalExpert e;
    e.learner = PClass(cfg_.inputs, cfg_.classes, params_);
    e.weight = 1.0;
    e.born_at = chunks_seen_;
    experts_.push_back(std::move(e));
    train_expert(experts_.back(), buf);
    rep.expert_added = true;
    rep.trained_expert = 0;
    rep.accuracy = std::numeric_limits<double>::quiet_NaN();

    ConstRulePool view;
    for (const auto& ex : experts_) view.push_back(&ex.learner.rules());
    gofs_.kappa = feature_contributions(view, cfg_.inputs);
    gofs_.mask = FeatureMask::top(gofs_.kappa, gofs_.budget);
    gofs_.initialized = true;

    auto& first = experts_.back();
    const auto est = localized_gen_error(first.learner.rules(), buf, chunk_moments, cfg_.q, cfg_.eta, first.b_max,
                                         Vector(), cfg_.exp_ceiling);
    first.genhist.push(est.r_sm);
  } else {
    for (auto& e : experts_) {
      e.mse = 0.0;
      e.mse_count = 0;
    }
    std::size_t correct_count = 0;
    const double inv_o = 1.0 / static_cast<double>(cfg_.classes);
    for (const auto& s : chunk.samples) {
      moments_.push(s.x);
      const Vector z = standardize(moments_, s.x);
      const Vector xe = extend(regressor_input(z));
      const Vector target = one_hot(s.label, cfg_.classes);

      VoteResult vote = vote_predict(experts_, z, xe, cfg_.classes);
      for (std::size_t i = 0; i < experts_.size(); ++i) {
        auto& e = experts_[i];
        const double se = (vote.scores[i] - target).squaredNorm() * inv_o;
        ++e.mse_count;
        e.mse += (se - e.mse) / static_cast<double>(e.mse_count);
      }
      const bool correct = vote.label == s.label;
      if (correct) ++correct_count;

      update_weights(experts_, vote.local, s.label, cfg_.p);
      rep.pruned_by_weight += normalize_and_prune(experts_, cfg_.theta);

      auto rules = pool();
      gofs_step(gofs_, rules, z, xe, extend(z), target, correct);

      const DriftState st = monitor_.observe(correct ? 0.0 : 1.0);
      if (st == DriftState::kDrift) ++rep.drift_signals;

      chunk_moments.push(z);
      buf.push_back({z, xe, s.label});
    }
    rep.accuracy = static_cast<double>(correct_count) / static_cast<double>(chunk.size());

    // Generalization-based pruning.
    std::vector<double> bound(experts_.size());
    std::vector<bool> drop(experts_.size(), false);
    for (std::size_t i = 0; i < experts_.size(); ++i) {
      auto& e = experts_[i];
      const auto est = localized_gen_error(e.learner.rules(), buf, chunk_moments, cfg_.q, cfg_.eta, e.b_max,
                                           gofs_.mask.weights(), cfg_.exp_ceiling);
      bound[i] = est.r_sm;
      drop[i] = gen_prune_decision(e.genhist, est.r_sm, cfg_.prune_direction);
    }
    if (std::all_of(drop.begin(), drop.end(), [](bool d) { return d; })) {
      const auto keep = std::min_element(bound.begin(), bound.end()) - bound.begin();
      drop[static_cast<std::size_t>(keep)] = false;
    }
    std::vector<LocalExpert> survivors;
    for (std::size_t i = 0; i < experts_.size(); ++i) {
      if (drop[i]) {
        ++rep.pruned_by_generalization;
      } else {
        survivors.push_back(std::move(experts_[i]));
      }
    }
    experts_ = std::move(survivors);
    if (rep.pruned_by_generalization > 0) normalize_and_prune(experts_, 0.0);

    rep.state = rep.drift_signals > 0 ? DriftState::kDrift : monitor_.state();
    switch (rep.state) {
      case DriftState::kDrift: {
        LocalExpert e;
        e.learner = PClass(cfg_.inputs, cfg_.classes, params_);
        e.weight = 1.0;
        e.born_at = chunks_seen_;
        experts_.push_back(std::move(e));
        normalize_and_prune(experts_, 0.0);
        train_expert(experts_.back(), buf);
        rep.expert_added = true;
        rep.trained_expert = static_cast<int>(experts_.size()) - 1;
        break;
      }
      case DriftState::kStable: {
        std::size_t win = 0;
        for (std::size_t i = 1; i < experts_.size(); ++i) {
          if (experts_[i].mse < experts_[win].mse) win = i;
        }
        train_expert(experts_[win], buf);
        rep.trained_expert = static_cast<int>(win);
        break;
      }
      case DriftState::kWarning:
        break;
    }
  }

  ++chunks_seen_;
  rep.experts = experts_.size();
  rep.rules = total_rules();
  rep.parameters = parameter_count();
  rep.mask = active_features();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace pens
