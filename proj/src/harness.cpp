#include "pens/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"

namespace pens {

using nlohmann::json;

void RunConfig::validate() const {
  if (stamps < 1) throw ConfigError("run: stamps must be >= 1");
  if (train < 1 || test < 1) throw ConfigError("run: train and test sizes must be >= 1");
  if (!stream && csv_path.empty()) throw ConfigError("run: no stream or CSV source given");
  if (stream && !csv_path.empty()) throw ConfigError("run: give either a stream or a CSV source, not both");
  if (stream) stream->validate();
}

Setting parse_setting(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key.rfind("stream.", 0) == 0) {
    if (!cfg.stream) throw ConfigError("'" + key + "' needs a synthetic stream source");
    set_stream_value(*cfg.stream, key.substr(7), value, cfg.horizon());
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    cfg.ensemble.seed = cfg.seed;
  } else {
    set_config_value(cfg.ensemble, key, value);
  }
}

PartialRunError::PartialRunError(std::size_t stamp, std::vector<MetricsRow> rows)
    : DataError("stream exhausted during stamp " + std::to_string(stamp) + " (" + std::to_string(rows.size()) +
                " stamps completed)"),
      stamp_(stamp),
      rows_(std::move(rows)) {}

std::unique_ptr<StreamSource> open_source(const RunConfig& cfg) {
  if (cfg.stream) {
    StreamSpec spec = *cfg.stream;
    spec.seed = cfg.seed;
    return std::make_unique<SyntheticStream>(std::move(spec));
  }
  return load_csv(cfg.csv_path, cfg.csv_schema);
}

namespace {

Stat stat_of(const std::vector<MetricsRow>& rows, double (*get)(const MetricsRow&)) {
  Stat s;
  if (rows.empty()) return s;
  double sum = 0.0;
  for (const auto& r : rows) sum += get(r);
  s.mean = sum / static_cast<double>(rows.size());
  double sq = 0.0;
  for (const auto& r : rows) sq += (get(r) - s.mean) * (get(r) - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(rows.size()));
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string mask_text(const std::vector<int>& mask) {
  std::string s;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(mask[i]);
  }
  return s;
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

}  // namespace

Summary summarize(const std::vector<MetricsRow>& rows) {
  Summary s;
  s.stamps = rows.size();
  s.accuracy = stat_of(rows, [](const MetricsRow& r) { return r.accuracy; });
  s.rules = stat_of(rows, [](const MetricsRow& r) { return static_cast<double>(r.rules); });
  s.attributes = stat_of(rows, [](const MetricsRow& r) { return static_cast<double>(r.attributes); });
  s.parameters = stat_of(rows, [](const MetricsRow& r) { return static_cast<double>(r.parameters); });
  s.ensemble_size = stat_of(rows, [](const MetricsRow& r) { return static_cast<double>(r.ensemble_size); });
  s.seconds = stat_of(rows, [](const MetricsRow& r) { return r.seconds; });
  for (const auto& r : rows) s.total_seconds += r.seconds;
  return s;
}

RunResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  auto source = open_source(cfg);
  EnsembleConfig ec = cfg.ensemble;
  ec.inputs = source->inputs();
  ec.classes = source->classes();
  ec.seed = cfg.seed;

  RunResult result;
  result.model = Pensemble(ec);
  auto& ens = result.model;
  for (std::size_t stamp = 0; stamp < cfg.stamps; ++stamp) {
    const auto start = std::chrono::steady_clock::now();
    const DataChunk train = source->take(cfg.train);
    if (train.size() < cfg.train) throw PartialRunError(stamp, std::move(result.rows));
    const ChunkReport rep = ens.process_chunk(train);

    const DataChunk test = source->take(cfg.test);
    if (test.size() < cfg.test) throw PartialRunError(stamp, std::move(result.rows));
    test.validate(ec.inputs, ec.classes);
    std::size_t hits = 0;
    for (const auto& s : test.samples) {
      if (ens.predict(s.x) == s.label) ++hits;
    }

    MetricsRow row;
    row.stamp = stamp;
    row.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
    row.rules = ens.total_rules();
    row.attributes = ens.active_features().size();
    row.parameters = ens.parameter_count();
    row.ensemble_size = ens.experts().size();
    row.state = rep.state;
    row.drift_signals = rep.drift_signals;
    row.mask = rep.mask;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rows.push_back(std::move(row));
  }
  result.summary = summarize(result.rows);
  return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows, bool timing) {
  std::string out =
      "stamp,classification_rate,fuzzy_rules,input_attributes,network_parameters,ensemble_size,drift_state,"
      "drift_signals,mask";
  out += timing ? ",seconds\n" : "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.stamp) + ',' + fmt(r.accuracy) + ',' + std::to_string(r.rules) + ',' +
           std::to_string(r.attributes) + ',' + std::to_string(r.parameters) + ',' +
           std::to_string(r.ensemble_size) + ',' + to_string(r.state) + ',' + std::to_string(r.drift_signals) +
           ',' + mask_text(r.mask);
    if (timing) out += ',' + fmt(r.seconds);
    out += '\n';
  }
  return out;
}

std::string summary_json(const Summary& s, const RunConfig& cfg) {
  json j = {
      {"stamps", s.stamps},
      {"train", cfg.train},
      {"test", cfg.test},
      {"seed", cfg.seed},
      {"source", cfg.stream ? std::string(to_string(cfg.stream->kind)) : cfg.csv_path},
      {"classification_rate", stat_json(s.accuracy)},
      {"fuzzy_rules", stat_json(s.rules)},
      {"input_attributes", stat_json(s.attributes)},
      {"network_parameters", stat_json(s.parameters)},
      {"ensemble_size", stat_json(s.ensemble_size)},
      {"seconds_per_stamp", stat_json(s.seconds)},
      {"total_seconds", s.total_seconds},
  };
  return j.dump(2) + "\n";
}

std::string summary_path(const std::string& metrics_path) {
  const auto slash = metrics_path.find_last_of('/');
  const auto dot = metrics_path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? metrics_path.substr(0, dot) : metrics_path) + ".summary.json";
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

void write_outputs(const RunConfig& cfg, const std::vector<MetricsRow>& rows, const Summary& s) {
  if (cfg.out.empty()) return;
  write_text(cfg.out, metrics_csv(rows));
  write_text(summary_path(cfg.out), summary_json(s, cfg));
}

namespace {

std::string value_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

SweepSpec parse_sweep(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sweep grid: invalid JSON: ") + e.what());
  }
  SweepSpec spec;
  try {
    const json& base = doc.at("base");
    RunConfig& rc = spec.base;
    rc.stamps = base.value("stamps", std::size_t{1});
    rc.train = base.value("train", std::size_t{250});
    rc.test = base.value("test", std::size_t{250});
    rc.seed = base.value("seed", std::uint64_t{0});
    rc.ensemble.seed = rc.seed;
    if (base.contains("csv")) {
      rc.csv_path = base.at("csv").get<std::string>();
    } else {
      rc.stream = default_stream(parse_stream_kind(base.value("stream", std::string("sea"))), rc.horizon(), rc.seed);
    }
    if (base.contains("set")) {
      for (const auto& [k, v] : base.at("set").items()) apply_setting(rc, k, value_text(v));
    }

    const std::string mode = doc.value("mode", std::string("one-at-a-time"));
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& [k, vs] : doc.at("grid").items()) {
      std::vector<std::string> values;
      for (const auto& v : vs) values.push_back(value_text(v));
      if (values.empty()) throw ConfigError("sweep grid: '" + k + "' has no values");
      axes.emplace_back(k, std::move(values));
    }
    if (mode == "one-at-a-time") {
      for (const auto& [k, values] : axes) {
        for (const auto& v : values) spec.points.push_back({{k, v}});
      }
    } else if (mode == "cartesian") {
      spec.points.push_back({});
      for (const auto& [k, values] : axes) {
        std::vector<std::vector<Setting>> next;
        for (const auto& p : spec.points) {
          for (const auto& v : values) {
            auto q = p;
            q.emplace_back(k, v);
            next.push_back(std::move(q));
          }
        }
        spec.points = std::move(next);
      }
    } else {
      throw ConfigError("sweep grid: mode must be 'one-at-a-time' or 'cartesian'");
    }
    spec.jobs = doc.value("jobs", 1);
    spec.out = doc.value("out", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep grid: ") + e.what());
  }
  // Check every point's settings up front so a typo fails before any run.
  for (const auto& p : spec.points) {
    RunConfig probe = spec.base;
    for (const auto& [k, v] : p) apply_setting(probe, k, v);
    probe.ensemble.inputs = probe.stream ? probe.stream->inputs : std::max(1, probe.ensemble.budget);
    probe.validate();
    probe.ensemble.validate();
  }
  return spec;
}

std::vector<SweepPoint> run_sweep(const RunConfig& base, const std::vector<std::vector<Setting>>& points, int jobs) {
  auto run_one = [&base](const std::vector<Setting>& settings) {
    RunConfig rc = base;
    for (const auto& [k, v] : settings) apply_setting(rc, k, v);
    rc.out.clear();
    rc.model_out.clear();
    return SweepPoint{settings, run_experiment(rc).summary};
  };

  std::vector<SweepPoint> results(points.size());
  const auto width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t lo = 0; lo < points.size(); lo += width) {
    const auto hi = std::min(points.size(), lo + width);
    std::vector<std::future<SweepPoint>> batch;
    for (std::size_t i = lo; i < hi; ++i) {
      batch.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, run_one, points[i]));
    }
    for (std::size_t i = lo; i < hi; ++i) results[i] = batch[i - lo].get();
  }
  return results;
}

std::string sweep_csv(const std::vector<SweepPoint>& results) {
  std::string out =
      "point,settings,classification_rate_mean,classification_rate_std,fuzzy_rules_mean,input_attributes_mean,"
      "network_parameters_mean,ensemble_size_mean,ensemble_size_std,seconds_mean\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::string settings;
    for (const auto& [k, v] : r.settings) settings += (settings.empty() ? "" : " ") + k + '=' + v;
    const auto& s = r.summary;
    out += std::to_string(i) + ',' + settings + ',' + fmt(s.accuracy.mean) + ',' + fmt(s.accuracy.stddev) + ',' +
           fmt(s.rules.mean) + ',' + fmt(s.attributes.mean) + ',' + fmt(s.parameters.mean) + ',' +
           fmt(s.ensemble_size.mean) + ',' + fmt(s.ensemble_size.stddev) + ',' + fmt(s.seconds.mean) + '\n';
  }
  return out;
}

std::string describe_model(const Pensemble& ens) {
  std::ostringstream os;
  const auto& cfg = ens.config();
  os << "pens model: " << cfg.inputs << " inputs, " << cfg.classes << " classes, " << ens.chunks_seen()
     << " chunks seen\n";
  os << "drift monitor: " << to_string(ens.monitor().state()) << " (" << ens.monitor().total_n()
     << " observations)\n";
  os << "active features:";
  for (int j : ens.active_features()) os << ' ' << j;
  os << "\n";
  os << "experts: " << ens.experts().size() << ", rules: " << ens.total_rules()
     << ", parameters: " << ens.parameter_count() << "\n";
  const Eigen::IOFormat row(6, Eigen::DontAlignCols, " ", " ", "", "", "[", "]");
  for (std::size_t i = 0; i < ens.experts().size(); ++i) {
    const auto& e = ens.experts()[i];
    const auto& rb = e.learner.rules();
    os << "expert " << i << ": weight " << fmt(e.weight) << ", born at chunk " << e.born_at << ", "
       << rb.rules.size() << " rules, " << rb.reserve.size() << " in reserve\n";
    for (std::size_t k = 0; k < rb.rules.size(); ++k) {
      const auto& r = rb.rules[k];
      os << "  rule " << k << ": support " << r.support << ", density " << fmt(r.density) << "\n";
      os << "    center " << r.center.transpose().format(row) << "\n";
      os << "    widths " << r.inv_cov.diagonal().cwiseInverse().cwiseSqrt().transpose().format(row) << "\n";
      for (Eigen::Index c = 0; c < r.consequent.cols(); ++c) {
        os << "    class " << c << " " << r.consequent.col(c).transpose().format(row) << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace pens
