#ifndef PENS_STREAMS_HPP
#define PENS_STREAMS_HPP

#include "pens/core.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pens {

enum class StreamKind { kSea, kHyperplane, kGaussian, kLine, kSin, kSinh };

StreamKind parse_stream_kind(const std::string& name);
const char* to_string(StreamKind kind);

/// Synthetic stream definition.
///
/// `concepts` hold one parameter vector per concept, cycled in order at each
/// change point and blended linearly over `drift_duration` samples:
///   sea         (theta)                       label 1 iff x0 + x1 <= theta
///   hyperplane  (w_1..w_n, w0)                label 1 iff w.x >= w0
///   gaussian    (mean_0 (n), mean_1 (n), sd_0, sd_1)
///   line/sin/sinh (a, b)                      label 1 iff y > a f(x) + b
struct StreamSpec {
  StreamKind kind = StreamKind::kSea;
  int inputs = 3;
  int classes = 2;
  std::vector<std::uint64_t> change_points;
  std::uint64_t drift_duration = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<Vector> concepts;

  /// Throws ConfigError on inconsistent dimensions.
  void validate() const;
};

/// Default stream of a kind; change points every `period` samples up to `horizon`.
StreamSpec default_stream(StreamKind kind, std::uint64_t horizon, std::uint64_t seed = 0);

/// Regenerates change points every `period` samples up to `horizon`.
void set_period(StreamSpec& spec, std::uint64_t period, std::uint64_t horizon);

/// Applies a "stream.*" style key (noise, period, duration, inputs, seed).
void set_stream_value(StreamSpec& spec, const std::string& key, const std::string& value, std::uint64_t horizon);

/// Pull-based single-consumer sample source.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual std::optional<LabeledSample> next() = 0;
  virtual int inputs() const = 0;
  virtual int classes() const = 0;

  /// Up to `count` samples; fewer only when the source is exhausted.
  DataChunk take(std::size_t count);
};

/// Portable RNG: mt19937_64 with hand-rolled uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

class SyntheticStream : public StreamSource {
 public:
  explicit SyntheticStream(StreamSpec spec);

  std::optional<LabeledSample> next() override;
  int inputs() const override { return spec_.inputs; }
  int classes() const override { return spec_.classes; }

  /// Concept parameters in effect at sample index t.
  Vector concept_at(std::uint64_t t) const;
  /// Noise-free label of x under the concept parameters.
  int label_of(const Vector& x, const Vector& params) const;
  std::uint64_t position() const { return t_; }
  const StreamSpec& spec() const { return spec_; }

 private:
  StreamSpec spec_;
  Rng rng_;
  std::uint64_t t_ = 0;
};

/// `count` samples from a fresh generator.
DataChunk generate(const StreamSpec& spec, std::size_t count);

struct CsvSchema {
  /// Class names in index order. Empty: integer labels, or categorical labels
  /// mapped in order of first appearance.
  std::vector<std::string> labels;
  /// Reject labels outside `labels`.
  bool strict = false;
};

/// CSV rows in file order. The header is kept; the last column is the label.
class CsvStream : public StreamSource {
 public:
  CsvStream(std::vector<std::string> header, std::vector<LabeledSample> rows, std::vector<std::string> labels);

  std::optional<LabeledSample> next() override;
  int inputs() const override { return static_cast<int>(header_.size()) - 1; }
  int classes() const override { return static_cast<int>(labels_.size()); }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<LabeledSample> rows_;
  std::vector<std::string> labels_;
  std::size_t pos_ = 0;
};

/// Parses the whole file up front; throws DataError naming the line on bad input.
std::unique_ptr<CsvStream> load_csv(const std::string& path, const CsvSchema& schema = {});

/// Writes samples with a header f1..fn,class and 17 significant digits.
void write_csv(const std::string& path, const DataChunk& chunk);

}  // namespace pens

#endif  // PENS_STREAMS_HPP
