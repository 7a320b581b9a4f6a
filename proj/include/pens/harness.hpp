#ifndef PENS_HARNESS_HPP
#define PENS_HARNESS_HPP

#include "pens/ensemble.hpp"
#include "pens/streams.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pens {

/// One experiment: TS stamps of TRS training then TES test samples.
struct RunConfig {
  std::optional<StreamSpec> stream;  // synthetic source, or
  std::string csv_path;              // CSV source
  CsvSchema csv_schema;
  std::size_t stamps = 1;
  std::size_t train = 250;
  std::size_t test = 250;
  EnsembleConfig ensemble;
  std::string out;        // metrics CSV; summary JSON goes next to it
  std::string model_out;  // optional final model
  std::uint64_t seed = 0;

  /// Samples the run draws in total.
  std::uint64_t horizon() const { return stamps * (train + test); }
  void validate() const;
};

using Setting = std::pair<std::string, std::string>;

/// `stream.<key>` goes to the stream spec, anything else to the ensemble config.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
/// Parses "key=value".
Setting parse_setting(const std::string& text);

struct MetricsRow {
  std::size_t stamp = 0;
  double accuracy = 0.0;  // classification rate on the test block
  std::size_t rules = 0;
  std::size_t attributes = 0;
  std::size_t parameters = 0;
  std::size_t ensemble_size = 0;
  DriftState state = DriftState::kStable;
  std::size_t drift_signals = 0;
  std::vector<int> mask;
  double seconds = 0.0;  // train + test wall clock
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

struct Summary {
  std::size_t stamps = 0;
  Stat accuracy, rules, attributes, parameters, ensemble_size, seconds;
  double total_seconds = 0.0;
};

Summary summarize(const std::vector<MetricsRow>& rows);

struct RunResult {
  std::vector<MetricsRow> rows;
  Summary summary;
  Pensemble model;
};

/// Raised when the source runs dry mid-run; carries the rows completed so far.
class PartialRunError : public DataError {
 public:
  PartialRunError(std::size_t stamp, std::vector<MetricsRow> rows);
  std::size_t stamp() const { return stamp_; }
  const std::vector<MetricsRow>& rows() const { return rows_; }

 private:
  std::size_t stamp_;
  std::vector<MetricsRow> rows_;
};

std::unique_ptr<StreamSource> open_source(const RunConfig& cfg);

/// Runs the protocol. Test blocks are predicted only, never trained on.
RunResult run_experiment(const RunConfig& cfg);

/// Metrics CSV text; `timing` false drops the seconds column.
std::string metrics_csv(const std::vector<MetricsRow>& rows, bool timing = true);
std::string summary_json(const Summary& s, const RunConfig& cfg);
/// Writes `out` and `out` with its extension replaced by .summary.json.
void write_outputs(const RunConfig& cfg, const std::vector<MetricsRow>& rows, const Summary& s);
std::string summary_path(const std::string& metrics_path);

struct SweepPoint {
  std::vector<Setting> settings;
  Summary summary;
};

struct SweepSpec {
  RunConfig base;
  std::vector<std::vector<Setting>> points;
  int jobs = 1;
  std::string out;
};

/// Grid file: {"base": {...}, "grid": {key: [values]}, "mode": "one-at-a-time"|"cartesian", "jobs": N, "out": path}.
SweepSpec parse_sweep(const std::string& json_text);
/// Runs every point from a copy of the base config, up to `jobs` at once; results keep point order.
std::vector<SweepPoint> run_sweep(const RunConfig& base, const std::vector<std::vector<Setting>>& points, int jobs);
std::string sweep_csv(const std::vector<SweepPoint>& results);

/// Human-readable dump of experts, weights and rules.
std::string describe_model(const Pensemble& ens);

}  // namespace pens

#endif  // PENS_HARNESS_HPP
