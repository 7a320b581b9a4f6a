#include "pens/drift.hpp"

#include "pens/core.hpp"

namespace pens {

const char* to_string(DriftState s) {
  switch (s) {
    case DriftState::kStable: return "stable";
    case DriftState::kWarning: return "warning";
    case DriftState::kDrift: return "drift";
  }
  return "unknown";
}

DriftMonitor::DriftMonitor(double alpha_w, double alpha_d, double lo, double hi)
    : alpha_w_(alpha_w), alpha_d_(alpha_d), lo_(lo), hi_(hi) {
  if (!(alpha_w > 0.0 && alpha_w <= 1.0) || !(alpha_d > 0.0 && alpha_d <= 1.0)) {
    throw ConfigError("drift monitor: confidences must lie in (0,1]");
  }
  if (!(hi >= lo)) throw ConfigError("drift monitor: upper bound below lower bound");
}

void DriftMonitor::reset() {
  total_n_ = cut_n_ = post_n_ = 0;
  total_sum_ = cut_sum_ = post_sum_ = 0.0;
}

DriftState DriftMonitor::observe(double x) {
  if (!(x >= lo_ && x <= hi_)) throw DataError("drift monitor: observation outside [a, b]");

  ++total_n_;
  total_sum_ += x;

  bool move_cut = cut_n_ == 0;
  if (!move_cut) {
    const double z_upper = total_mean() + hoeffding_single(total_n_, lo_, hi_, alpha_d_);
    const double x_upper = cut_mean() + hoeffding_single(cut_n_, lo_, hi_, alpha_d_);
    move_cut = z_upper <= x_upper;
  }
  if (move_cut) {
    cut_n_ = total_n_;
    cut_sum_ = total_sum_;
    post_n_ = 0;
    post_sum_ = 0.0;
  } else {
    ++post_n_;
    post_sum_ += x;
  }

  state_ = DriftState::kStable;
  if (post_n_ > 0) {
    // Full-history mean minus cut mean equals post/(cut+post) times the
    // post-minus-cut gap; the two-sample slack bounds exactly this difference.
    const double rise = total_mean() - cut_mean();
    if (rise >= hoeffding_epsilon(cut_n_, post_n_, lo_, hi_, alpha_d_)) {
      state_ = DriftState::kDrift;
    } else if (rise >= hoeffding_epsilon(cut_n_, post_n_, lo_, hi_, alpha_w_)) {
      state_ = DriftState::kWarning;
    }
  }
  if (state_ == DriftState::kDrift) reset();
  return state_;
}

void DriftMonitor::restore(std::uint64_t total_n, double total_sum, std::uint64_t cut_n, double cut_sum,
                           std::uint64_t post_n, double post_sum, DriftState state) {
  if (post_n + cut_n != total_n) throw DataError("drift monitor: inconsistent counts");
  total_n_ = total_n;
  total_sum_ = total_sum;
  cut_n_ = cut_n;
  cut_sum_ = cut_sum;
  post_n_ = post_n;
  post_sum_ = post_sum;
  state_ = state;
}

}  // namespace pens
