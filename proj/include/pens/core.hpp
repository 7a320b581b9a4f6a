#ifndef PENS_CORE_HPP
#define PENS_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid configuration or parameter value (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledSample {
  Vector x;
  int label = 0;
};

struct DataChunk {
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  Eigen::Index dim() const { return samples.empty() ? 0 : samples.front().x.size(); }

  /// Throws DataError unless every sample has `n` finite features and a label below `classes`.
  void validate(Eigen::Index n, int classes) const;
};

/// Running per-feature mean, 2nd..4th central moment sums, and range.
///
/// Single-pass update of the higher moments (Terriberry / Pebay form). `m2`,
/// `m3`, `m4` hold the sums of centred powers; divide by `count` for the
/// population moments.
template <typename Scalar>
class FeatureMoments {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  FeatureMoments() = default;
  explicit FeatureMoments(Eigen::Index n)
      : mean_(Array::Zero(n)),
        m2_(Array::Zero(n)),
        m3_(Array::Zero(n)),
        m4_(Array::Zero(n)),
        min_(Array::Constant(n, std::numeric_limits<Scalar>::infinity())),
        max_(Array::Constant(n, -std::numeric_limits<Scalar>::infinity())) {}

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& x) {
    if (x.size() != dim()) {
      throw DataError("feature moments: expected " + std::to_string(dim()) + " features, got " +
                      std::to_string(x.size()));
    }
    const Array v = x.derived().array().template cast<Scalar>();
    if (!v.isFinite().all()) throw DataError("feature moments: non-finite input");

    const Scalar n1 = static_cast<Scalar>(count_);
    ++count_;
    const Scalar n = static_cast<Scalar>(count_);
    const Array delta = v - mean_;
    const Array delta_n = delta / n;
    const Array delta_n2 = delta_n * delta_n;
    const Array term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - Scalar(3) * n + Scalar(3)) + Scalar(6) * delta_n2 * m2_ -
           Scalar(4) * delta_n * m3_;
    m3_ += term1 * delta_n * (n - Scalar(2)) - Scalar(3) * delta_n * m2_;
    m2_ += term1;
    // Guard against tiny negative drift from cancellation.
    m2_ = m2_.max(Scalar(0));
    m4_ = m4_.max(Scalar(0));
    min_ = min_.min(v);
    max_ = max_.max(v);
  }

  Eigen::Index dim() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }

  const Array& mean() const { return mean_; }
  const Array& m2() const { return m2_; }
  const Array& m3() const { return m3_; }
  const Array& m4() const { return m4_; }
  const Array& min() const { return min_; }
  const Array& max() const { return max_; }

  Array variance() const { return count_ ? Array(m2_ / Scalar(count_)) : Array::Zero(dim()); }
  Array stddev() const { return variance().sqrt(); }
  Array central3() const { return count_ ? Array(m3_ / Scalar(count_)) : Array::Zero(dim()); }
  Array central4() const { return count_ ? Array(m4_ / Scalar(count_)) : Array::Zero(dim()); }
  /// max - min per feature; zero before the first sample.
  Array range() const { return count_ ? Array(max_ - min_) : Array::Zero(dim()); }

  /// Restores a serialized state verbatim.
  static FeatureMoments from_state(std::uint64_t count, Array mean, Array m2, Array m3, Array m4,
                                   Array min, Array max) {
    FeatureMoments m;
    m.count_ = count;
    m.mean_ = std::move(mean);
    m.m2_ = std::move(m2);
    m.m3_ = std::move(m3);
    m.m4_ = std::move(m4);
    m.min_ = std::move(min);
    m.max_ = std::move(max);
    return m;
  }

 private:
  std::uint64_t count_ = 0;
  Array mean_, m2_, m3_, m4_, min_, max_;
};

using Moments = FeatureMoments<double>;

template <typename Scalar, typename Derived>
FeatureMoments<Scalar> update_moments(FeatureMoments<Scalar> m, const Eigen::MatrixBase<Derived>& x) {
  m.push(x);
  return m;
}

/// z_j = (x_j - mean_j) / sd_j, with z_j = 0 on zero-variance features.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> standardize(const FeatureMoments<Scalar>& m,
                                                     const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != m.dim()) throw DataError("standardize: dimension mismatch");
  const auto sd = m.stddev();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    z(j) = sd(j) > Scalar(0) ? (Scalar(x(j)) - m.mean()(j)) / sd(j) : Scalar(0);
  }
  return z;
}

/// Direction of the generalization-error pruning test.
enum class PruneDirection { kLarge, kSmall };

struct EnsembleConfig {
  int inputs = 0;   // n
  int classes = 2;  // O

  double p = 0.1;          // decreasing factor
  double theta = 0.01;     // weight-prune threshold
  double alpha_w = 0.005;  // warning confidence
  double alpha_d = 0.001;  // drift confidence
  double eta = 0.05;       // generalization confidence
  double q = 1.0;          // neighbourhood radius
  PruneDirection prune_direction = PruneDirection::kLarge;

  double gofs_alpha = 0.2;
  double gofs_chi = 0.01;
  int budget = 0;  // B; 0 means all features

  double g_ds = 0.05;
  double rho_vol = 0.3;
  double theta_ers = 0.1;
  double theta_pp = 0.1;
  double gamma_decay = 1e-4;
  double omega_init = 1e5;
  double k_ov = 0.5;
  double init_width = 0.5;   // first-rule width when no range is known yet
  double min_width = 0.05;   // floor on any initial rule width
  double exp_ceiling = 1e12; // clamp for the sensitivity exponential

  std::uint64_t seed = 0;

  int effective_budget() const { return budget <= 0 || budget > inputs ? inputs : budget; }

  /// Throws ConfigError when any range is violated.
  void validate() const;
};

/// Sets one configuration key from text ("p", "alpha_d", ...). Throws ConfigError on unknown keys.
void set_config_value(EnsembleConfig& cfg, const std::string& key, const std::string& value);

/// Parses a double, throwing ConfigError naming `what` on failure.
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

}  // namespace pens

#endif  // PENS_CORE_HPP
