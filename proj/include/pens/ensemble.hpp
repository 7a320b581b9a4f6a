#ifndef PENS_ENSEMBLE_HPP
#define PENS_ENSEMBLE_HPP

#include "pens/core.hpp"
#include "pens/drift.hpp"
#include "pens/genloss.hpp"
#include "pens/gofs.hpp"
#include "pens/pclass.hpp"

#include <cstdint>
#include <vector>

namespace pens {

struct LocalExpert {
  PClass learner;
  double weight = 1.0;  // voting weight beta
  double mse = 0.0;     // running MSE over the current chunk
  std::uint64_t mse_count = 0;
  GenErrorHistory genhist;
  double b_max = 0.0;
  std::uint64_t born_at = 0;
};

struct VoteResult {
  int label = 0;
  std::vector<int> local;             // per-expert predicted class
  std::vector<Vector> scores;         // per-expert score vectors
  Vector votes;                       // accumulated weight per class
};

/// Weighted majority vote; ties go to the lowest class index.
VoteResult vote_predict(const std::vector<LocalExpert>& experts, const Vector& x, const Vector& xe, int classes);

/// Penalty beta*p for wrong experts, reward min(beta*(2-p), 1) for correct ones.
void update_weights(std::vector<LocalExpert>& experts, const std::vector<int>& local, int truth, double p);

/// Normalizes weights to sum 1 and removes experts below theta (never the
/// last one), renormalizing afterwards. Returns the number removed.
std::size_t normalize_and_prune(std::vector<LocalExpert>& experts, double theta);

struct ChunkReport {
  std::uint64_t chunk = 0;
  std::size_t samples = 0;
  double accuracy = 0.0;  // prequential; NaN on the bootstrap chunk
  std::size_t experts = 0;
  std::size_t rules = 0;
  std::size_t parameters = 0;
  DriftState state = DriftState::kStable;
  std::size_t drift_signals = 0;
  std::size_t pruned_by_weight = 0;
  std::size_t pruned_by_generalization = 0;
  bool expert_added = false;
  int trained_expert = -1;
  std::vector<int> mask;
  double seconds = 0.0;
};

/// Evolving ensemble of pClass experts.
class Pensemble {
 public:
  Pensemble() = default;
  explicit Pensemble(EnsembleConfig cfg);

  /// Consumes one chunk: per-sample voting, weight dynamics, feature
  /// selection and drift monitoring, then chunk-level pruning and training.
  ChunkReport process_chunk(const DataChunk& chunk);

  /// Predict-only pass; leaves all state untouched.
  VoteResult predict_detail(const Vector& x) const;
  int predict(const Vector& x) const { return predict_detail(x).label; }

  const EnsembleConfig& config() const { return cfg_; }
  const std::vector<LocalExpert>& experts() const { return experts_; }
  std::vector<LocalExpert>& experts() { return experts_; }
  const DriftMonitor& monitor() const { return monitor_; }
  DriftMonitor& monitor() { return monitor_; }
  const GofsState& gofs() const { return gofs_; }
  GofsState& gofs() { return gofs_; }
  const Moments& moments() const { return moments_; }
  Moments& moments() { return moments_; }
  std::uint64_t chunks_seen() const { return chunks_seen_; }
  void set_chunks_seen(std::uint64_t c) { chunks_seen_ = c; }

  std::size_t total_rules() const;
  /// Sum over rules of n + n(n+1)/2 + (n+1) O.
  std::size_t parameter_count() const;
  /// Features currently feeding the consequents.
  std::vector<int> active_features() const;

  /// Premise input and consequent regressor for a raw sample.
  std::pair<Vector, Vector> prepare(const Vector& raw) const;

 private:
  Vector regressor_input(const Vector& z) const;
  RulePool pool();
  void train_expert(LocalExpert& e, const std::vector<EvalSample>& buf);

  EnsembleConfig cfg_;
  LearnerParams params_;
  std::vector<LocalExpert> experts_;
  DriftMonitor monitor_;
  GofsState gofs_;
  Moments moments_;
  std::uint64_t chunks_seen_ = 0;
};

}  // namespace pens

#endif  // PENS_ENSEMBLE_HPP
