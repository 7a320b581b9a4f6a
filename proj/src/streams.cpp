#include "pens/streams.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace pens {

StreamKind parse_stream_kind(const std::string& name) {
  static const std::map<std::string, StreamKind> kinds{
      {"sea", StreamKind::kSea},   {"hyperplane", StreamKind::kHyperplane}, {"gaussian", StreamKind::kGaussian},
      {"line", StreamKind::kLine}, {"sin", StreamKind::kSin},               {"sinh", StreamKind::kSinh},
  };
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown stream kind '" + name + "'");
  return it->second;
}

const char* to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::kSea: return "sea";
    case StreamKind::kHyperplane: return "hyperplane";
    case StreamKind::kGaussian: return "gaussian";
    case StreamKind::kLine: return "line";
    case StreamKind::kSin: return "sin";
    case StreamKind::kSinh: return "sinh";
  }
  return "unknown";
}

namespace {

Eigen::Index concept_size(const StreamSpec& s) {
  switch (s.kind) {
    case StreamKind::kSea: return 1;
    case StreamKind::kHyperplane: return s.inputs + 1;
    case StreamKind::kGaussian: return 2 * s.inputs + 2;
    default: return 2;
  }
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

// Random hyperplane through the centre of the unit cube.
Vector random_plane(Rng& rng, int n) {
  Vector c(n + 1);
  for (int j = 0; j < n; ++j) c(j) = rng.uniform();
  c(n) = 0.5 * c.head(n).sum();
  return c;
}

}  // namespace

void StreamSpec::validate() const {
  if (inputs < 1) throw ConfigError("stream: inputs must be >= 1");
  if (classes != 2) throw ConfigError("stream: synthetic generators are binary (classes = 2)");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("stream: noise must lie in [0, 1]");
  if (kind == StreamKind::kSea && inputs != 3) throw ConfigError("stream: sea has exactly 3 inputs");
  if ((kind == StreamKind::kLine || kind == StreamKind::kSin || kind == StreamKind::kSinh) && inputs != 2)
    throw ConfigError("stream: line/sin/sinh have exactly 2 inputs");
  if (concepts.empty()) throw ConfigError("stream: at least one concept required");
  for (const auto& c : concepts) {
    if (c.size() != concept_size(*this)) throw ConfigError("stream: concept parameter vector has wrong length");
  }
  if (!std::is_sorted(change_points.begin(), change_points.end()))
    throw ConfigError("stream: change points must be increasing");
}

void set_period(StreamSpec& spec, std::uint64_t period, std::uint64_t horizon) {
  spec.change_points.clear();
  if (period == 0) return;
  for (std::uint64_t t = period; t < horizon; t += period) spec.change_points.push_back(t);
}

StreamSpec default_stream(StreamKind kind, std::uint64_t horizon, std::uint64_t seed) {
  StreamSpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case StreamKind::kSea:
      s.inputs = 3;
      s.concepts = {vec({8.0}), vec({9.0}), vec({7.0}), vec({9.5})};
      set_period(s, horizon / 4, horizon);
      break;
    case StreamKind::kHyperplane: {
      s.inputs = 4;
      Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
      s.concepts = {random_plane(rng, s.inputs), random_plane(rng, s.inputs)};
      set_period(s, horizon / 2, horizon);
      s.drift_duration = horizon / 4;
      break;
    }
    case StreamKind::kGaussian:
      s.inputs = 2;
      s.concepts = {vec({0.0, 0.0, 2.0, 2.0, 0.8, 0.8}), vec({2.0, 0.0, 0.0, 2.0, 0.6, 1.0})};
      set_period(s, horizon / 2, horizon);
      s.drift_duration = horizon / 4;
      break;
    case StreamKind::kLine:
      s.inputs = 2;
      s.concepts = {vec({1.0, 0.0}), vec({-1.0, 1.0})};
      set_period(s, horizon / 2, horizon);
      s.drift_duration = horizon / 10;
      break;
    case StreamKind::kSin:
    case StreamKind::kSinh:
      s.inputs = 2;
      s.concepts = {vec({1.0, 0.0}), vec({-1.0, 0.0})};
      set_period(s, horizon / 2, horizon);
      s.drift_duration = horizon / 10;
      break;
  }
  return s;
}

void set_stream_value(StreamSpec& spec, const std::string& key, const std::string& value, std::uint64_t horizon) {
  if (key == "noise") {
    spec.noise = parse_double(value, key);
  } else if (key == "period") {
    set_period(spec, static_cast<std::uint64_t>(parse_int(value, key)), horizon);
  } else if (key == "duration") {
    spec.drift_duration = static_cast<std::uint64_t>(parse_int(value, key));
  } else if (key == "seed") {
    spec.seed = static_cast<std::uint64_t>(parse_int(value, key));
  } else if (key == "inputs") {
    const int n = static_cast<int>(parse_int(value, key));
    if (spec.kind == StreamKind::kHyperplane && n != spec.inputs) {
      Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
      spec.inputs = n;
      spec.concepts = {random_plane(rng, n), random_plane(rng, n)};
    } else if (spec.kind == StreamKind::kGaussian && n != spec.inputs) {
      spec.inputs = n;
      Vector a = Vector::Zero(2 * n + 2), b = Vector::Zero(2 * n + 2);
      a.segment(n, n).setConstant(2.0);
      b.head(n).setConstant(2.0);
      b(n) = 2.0;
      a.tail(2).setConstant(0.8);
      b.tail(2) << 0.6, 1.0;
      spec.concepts = {a, b};
    } else {
      spec.inputs = n;
    }
  } else {
    throw ConfigError("unknown stream key 'stream." + key + "'");
  }
}

DataChunk StreamSource::take(std::size_t count) {
  DataChunk out;
  out.samples.reserve(count);
  while (out.samples.size() < count) {
    auto s = next();
    if (!s) break;
    out.samples.push_back(std::move(*s));
  }
  return out;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  return r * std::cos(t);
}

SyntheticStream::SyntheticStream(StreamSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) { spec_.validate(); }

Vector SyntheticStream::concept_at(std::uint64_t t) const {
  const auto& cp = spec_.change_points;
  const auto k = static_cast<std::size_t>(std::upper_bound(cp.begin(), cp.end(), t) - cp.begin());
  const auto& cs = spec_.concepts;
  const Vector& now = cs[k % cs.size()];
  if (k == 0 || spec_.drift_duration == 0) return now;
  const std::uint64_t since = t - cp[k - 1];
  if (since >= spec_.drift_duration) return now;
  const double mix = static_cast<double>(since) / static_cast<double>(spec_.drift_duration);
  const Vector& prev = cs[(k - 1) % cs.size()];
  return (1.0 - mix) * prev + mix * now;
}

int SyntheticStream::label_of(const Vector& x, const Vector& c) const {
  const int n = spec_.inputs;
  switch (spec_.kind) {
    case StreamKind::kSea: return x(0) + x(1) <= c(0) ? 1 : 0;
    case StreamKind::kHyperplane: return x.dot(c.head(n)) >= c(n) ? 1 : 0;
    case StreamKind::kGaussian:
      return (x - c.segment(n, n)).squaredNorm() < (x - c.head(n)).squaredNorm() ? 1 : 0;
    case StreamKind::kLine: return x(1) > c(0) * x(0) + c(1) ? 1 : 0;
    case StreamKind::kSin: return x(1) > c(0) * std::sin(x(0)) + c(1) ? 1 : 0;
    case StreamKind::kSinh: return x(1) > c(0) * std::sinh(x(0)) + c(1) ? 1 : 0;
  }
  return 0;
}

std::optional<LabeledSample> SyntheticStream::next() {
  const int n = spec_.inputs;
  const Vector c = concept_at(t_);
  LabeledSample s;
  s.x.resize(n);
  switch (spec_.kind) {
    case StreamKind::kSea:
      for (int j = 0; j < n; ++j) s.x(j) = rng_.uniform(0.0, 10.0);
      s.label = label_of(s.x, c);
      break;
    case StreamKind::kHyperplane:
      for (int j = 0; j < n; ++j) s.x(j) = rng_.uniform();
      s.label = label_of(s.x, c);
      break;
    case StreamKind::kGaussian: {
      const int cls = rng_.uniform() < 0.5 ? 0 : 1;
      const double sd = c(2 * n + cls);
      for (int j = 0; j < n; ++j) s.x(j) = c(cls * n + j) + sd * rng_.normal();
      s.label = cls;
      break;
    }
    case StreamKind::kLine:
      s.x(0) = rng_.uniform();
      s.x(1) = rng_.uniform();
      s.label = label_of(s.x, c);
      break;
    case StreamKind::kSin:
      s.x(0) = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      s.x(1) = rng_.uniform(-1.5, 1.5);
      s.label = label_of(s.x, c);
      break;
    case StreamKind::kSinh:
      s.x(0) = rng_.uniform(-2.0, 2.0);
      s.x(1) = rng_.uniform(-4.0, 4.0);
      s.label = label_of(s.x, c);
      break;
  }
  // The noise draw happens for every sample so the sequence of x is
  // independent of the noise rate.
  if (rng_.uniform() < spec_.noise) s.label = 1 - s.label;
  ++t_;
  return s;
}

DataChunk generate(const StreamSpec& spec, std::size_t count) {
  SyntheticStream s(spec);
  return s.take(count);
}

CsvStream::CsvStream(std::vector<std::string> header, std::vector<LabeledSample> rows,
                     std::vector<std::string> labels)
    : header_(std::move(header)), rows_(std::move(rows)), labels_(std::move(labels)) {}

std::optional<LabeledSample> CsvStream::next() {
  if (pos_ >= rows_.size()) return std::nullopt;
  return rows_[pos_++];
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_cell(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size() && std::isfinite(out);
}

bool parse_label_int(const std::string& cell, int& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  const long v = std::strtol(cell.c_str(), &end, 10);
  if (end != cell.c_str() + cell.size() || v < 0 || v > 1'000'000) return false;
  out = static_cast<int>(v);
  return true;
}

std::string row_error(const std::string& path, std::size_t line, const std::string& what) {
  return path + ": row " + std::to_string(line) + ": " + what;
}

}  // namespace

std::unique_ptr<CsvStream> load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line);
  if (header.size() < 2) throw DataError(path + ": header needs at least one feature and a label column");
  const auto width = header.size();
  const auto n = static_cast<Eigen::Index>(width - 1);

  struct RawRow {
    Vector x;
    std::string label;
    std::size_t line;
  };
  std::vector<RawRow> raw;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != width) {
      throw DataError(row_error(path, lineno, "expected " + std::to_string(width) + " columns, found " +
                                                  std::to_string(cells.size())));
    }
    RawRow r{Vector(n), cells.back(), lineno};
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!parse_cell(cells[static_cast<std::size_t>(j)], r.x(j))) {
        throw DataError(row_error(path, lineno, "column '" + header[static_cast<std::size_t>(j)] +
                                                    "' is not a finite number: '" +
                                                    cells[static_cast<std::size_t>(j)] + "'"));
      }
    }
    if (r.label.empty()) throw DataError(row_error(path, lineno, "empty class label"));
    raw.push_back(std::move(r));
  }

  std::vector<std::string> labels = schema.labels;
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);

  bool integer = labels.empty();
  if (integer) {
    int dummy = 0;
    integer = std::all_of(raw.begin(), raw.end(), [&](const RawRow& r) { return parse_label_int(r.label, dummy); });
  }

  std::vector<LabeledSample> rows;
  rows.reserve(raw.size());
  if (integer) {
    int top = 1;
    for (auto& r : raw) {
      int v = 0;
      parse_label_int(r.label, v);
      top = std::max(top, v);
      rows.push_back({std::move(r.x), v});
    }
    for (int c = 0; c <= top; ++c) labels.push_back(std::to_string(c));
  } else {
    for (auto& r : raw) {
      auto it = index.find(r.label);
      if (it == index.end()) {
        if (schema.strict) throw DataError(row_error(path, r.line, "unseen class label '" + r.label + "'"));
        it = index.emplace(r.label, static_cast<int>(labels.size())).first;
        labels.push_back(r.label);
      }
      rows.push_back({std::move(r.x), it->second});
    }
    if (labels.size() < 2) labels.push_back("<none>");
  }
  return std::make_unique<CsvStream>(header, std::move(rows), std::move(labels));
}

void write_csv(const std::string& path, const DataChunk& chunk) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write CSV file '" + path + "'");
  const auto n = chunk.empty() ? 0 : chunk.dim();
  for (Eigen::Index j = 0; j < n; ++j) std::fprintf(f, "f%ld,", static_cast<long>(j + 1));
  std::fprintf(f, "class\n");
  for (const auto& s : chunk.samples) {
    for (Eigen::Index j = 0; j < s.x.size(); ++j) std::fprintf(f, "%.17g,", s.x(j));
    std::fprintf(f, "%d\n", s.label);
  }
  std::fclose(f);
}

}  // namespace pens
