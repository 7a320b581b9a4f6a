#ifndef PENS_DRIFT_HPP
#define PENS_DRIFT_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pens {

enum class DriftState { kStable, kWarning, kDrift };

const char* to_string(DriftState s);

/// Two-sample Hoeffding slack (b-a) sqrt(m / (2 cut (m+cut)) ln(1/alpha)).
template <typename Scalar>
Scalar hoeffding_epsilon(std::uint64_t cut, std::uint64_t m, Scalar a, Scalar b, Scalar alpha) {
  if (cut == 0 || m == 0) throw std::domain_error("hoeffding_epsilon: insufficient data");
  const Scalar c = static_cast<Scalar>(cut);
  const Scalar k = static_cast<Scalar>(m);
  return (b - a) * std::sqrt(k / (Scalar(2) * c * (k + c)) * std::log(Scalar(1) / alpha));
}

/// Single-mean Hoeffding slack (b-a) sqrt(ln(1/alpha) / (2k)).
template <typename Scalar>
Scalar hoeffding_single(std::uint64_t k, Scalar a, Scalar b, Scalar alpha) {
  if (k == 0) throw std::domain_error("hoeffding_single: insufficient data");
  return (b - a) * std::sqrt(std::log(Scalar(1) / alpha) / (Scalar(2) * static_cast<Scalar>(k)));
}

/// Hoeffding-bound drift detector over a bounded per-sample metric.
///
/// Keeps the full-history mean, the mean up to the current cut point, and the
/// mean after it. The cut point moves forward whenever the full-history upper
/// bound does not exceed the cut upper bound. A rise of the post-cut level is
/// tested through the full-history mean against the cut mean with the
/// two-sample slack.
class DriftMonitor {
 public:
  DriftMonitor() = default;
  DriftMonitor(double alpha_w, double alpha_d, double lo = 0.0, double hi = 1.0);

  DriftState observe(double x);
  void reset();

  DriftState state() const { return state_; }
  std::uint64_t total_n() const { return total_n_; }
  double total_sum() const { return total_sum_; }
  std::uint64_t cut_n() const { return cut_n_; }
  double cut_sum() const { return cut_sum_; }
  std::uint64_t post_n() const { return post_n_; }
  double post_sum() const { return post_sum_; }
  double alpha_w() const { return alpha_w_; }
  double alpha_d() const { return alpha_d_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }

  double total_mean() const { return total_n_ ? total_sum_ / static_cast<double>(total_n_) : 0.0; }
  double cut_mean() const { return cut_n_ ? cut_sum_ / static_cast<double>(cut_n_) : 0.0; }
  double post_mean() const { return post_n_ ? post_sum_ / static_cast<double>(post_n_) : 0.0; }

  /// Restores a serialized state.
  void restore(std::uint64_t total_n, double total_sum, std::uint64_t cut_n, double cut_sum,
               std::uint64_t post_n, double post_sum, DriftState state);

 private:
  double alpha_w_ = 0.005;
  double alpha_d_ = 0.001;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::uint64_t total_n_ = 0;
  double total_sum_ = 0.0;
  std::uint64_t cut_n_ = 0;
  double cut_sum_ = 0.0;
  std::uint64_t post_n_ = 0;
  double post_sum_ = 0.0;
  DriftState state_ = DriftState::kStable;
};

}  // namespace pens

#endif  // PENS_DRIFT_HPP
