#include "pens/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace pens {

using nlohmann::json;

namespace {

// Non-finite values (empty-range min/max) are written as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw DataError("model: bad number '" + s + "'");
}

template <typename Derived>
json vec(const Eigen::DenseBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(static_cast<double>(v(i))));
  return a;
}

Vector vec(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j.at(i));
  return v;
}

json mat(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(num(m(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix mat(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw DataError("model: matrix data does not match its shape");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = num(data.at(k++));
  }
  return m;
}

json moments(const Moments& m) {
  return {{"count", m.count()}, {"mean", vec(m.mean())}, {"m2", vec(m.m2())}, {"m3", vec(m.m3())},
          {"m4", vec(m.m4())},  {"min", vec(m.min())},   {"max", vec(m.max())}};
}

Moments moments(const json& j) {
  return Moments::from_state(j.at("count").get<std::uint64_t>(), vec(j.at("mean")).array(), vec(j.at("m2")).array(),
                             vec(j.at("m3")).array(), vec(j.at("m4")).array(), vec(j.at("min")).array(),
                             vec(j.at("max")).array());
}

json rule(const FuzzyRule& r) {
  return {{"center", vec(r.center)},         {"inv_cov", mat(r.inv_cov)}, {"support", r.support},
          {"consequent", mat(r.consequent)}, {"rls_cov", mat(r.rls_cov)}, {"density", num(r.density)}};
}

FuzzyRule rule(const json& j) {
  FuzzyRule r;
  r.center = vec(j.at("center"));
  r.inv_cov = mat(j.at("inv_cov"));
  r.support = j.at("support").get<long>();
  r.consequent = mat(j.at("consequent"));
  r.rls_cov = mat(j.at("rls_cov"));
  r.density = num(j.at("density"));
  return r;
}

json rules(const std::vector<FuzzyRule>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back(rule(r));
  return a;
}

std::vector<FuzzyRule> rules(const json& j) {
  std::vector<FuzzyRule> out;
  for (const auto& r : j) out.push_back(rule(r));
  return out;
}

json config(const EnsembleConfig& c) {
  return {{"inputs", c.inputs},
          {"classes", c.classes},
          {"p", c.p},
          {"theta", c.theta},
          {"alpha_w", c.alpha_w},
          {"alpha_d", c.alpha_d},
          {"eta", c.eta},
          {"q", c.q},
          {"prune_direction", c.prune_direction == PruneDirection::kLarge ? "large" : "small"},
          {"gofs_alpha", c.gofs_alpha},
          {"gofs_chi", c.gofs_chi},
          {"budget", c.budget},
          {"g_ds", c.g_ds},
          {"rho_vol", c.rho_vol},
          {"theta_ers", c.theta_ers},
          {"theta_pp", c.theta_pp},
          {"gamma_decay", c.gamma_decay},
          {"omega_init", c.omega_init},
          {"k_ov", c.k_ov},
          {"init_width", c.init_width},
          {"min_width", c.min_width},
          {"exp_ceiling", num(c.exp_ceiling)},
          {"seed", c.seed}};
}

EnsembleConfig config(const json& j) {
  EnsembleConfig c;
  c.inputs = j.at("inputs").get<int>();
  c.classes = j.at("classes").get<int>();
  c.p = j.at("p").get<double>();
  c.theta = j.at("theta").get<double>();
  c.alpha_w = j.at("alpha_w").get<double>();
  c.alpha_d = j.at("alpha_d").get<double>();
  c.eta = j.at("eta").get<double>();
  c.q = j.at("q").get<double>();
  const auto dir = j.at("prune_direction").get<std::string>();
  if (dir != "large" && dir != "small") throw DataError("model: bad prune_direction '" + dir + "'");
  c.prune_direction = dir == "large" ? PruneDirection::kLarge : PruneDirection::kSmall;
  c.gofs_alpha = j.at("gofs_alpha").get<double>();
  c.gofs_chi = j.at("gofs_chi").get<double>();
  c.budget = j.at("budget").get<int>();
  c.g_ds = j.at("g_ds").get<double>();
  c.rho_vol = j.at("rho_vol").get<double>();
  c.theta_ers = j.at("theta_ers").get<double>();
  c.theta_pp = j.at("theta_pp").get<double>();
  c.gamma_decay = j.at("gamma_decay").get<double>();
  c.omega_init = j.at("omega_init").get<double>();
  c.k_ov = j.at("k_ov").get<double>();
  c.init_width = j.at("init_width").get<double>();
  c.min_width = j.at("min_width").get<double>();
  c.exp_ceiling = num(j.at("exp_ceiling"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

DriftState drift_state(const std::string& s) {
  if (s == "stable") return DriftState::kStable;
  if (s == "warning") return DriftState::kWarning;
  if (s == "drift") return DriftState::kDrift;
  throw DataError("model: bad drift state '" + s + "'");
}

json to_document(const Pensemble& ens) {
  json experts = json::array();
  for (const auto& e : ens.experts()) {
    const auto& l = e.learner;
    const auto& acc = l.accumulators();
    experts.push_back({
        {"weight", num(e.weight)},
        {"mse", num(e.mse)},
        {"mse_count", e.mse_count},
        {"genhist", {{"count", e.genhist.count()}, {"mean", num(e.genhist.mean())}, {"m2", num(e.genhist.m2())}}},
        {"b_max", num(e.b_max)},
        {"born_at", e.born_at},
        {"rules", rules(l.rules().rules)},
        {"reserve", rules(l.rules().reserve)},
        {"skipped_updates", l.rules().skipped_updates},
        {"density", {{"weight", num(acc.weight)}, {"sum", vec(acc.sum)}, {"sq_sum", num(acc.sq_sum)}}},
        {"input_stats", moments(l.input_stats())},
    });
  }
  const auto& m = ens.monitor();
  const auto& g = ens.gofs();
  return {
      {"format", "pens-model"},
      {"version", kModelVersion},
      {"config", config(ens.config())},
      {"chunks_seen", ens.chunks_seen()},
      {"moments", moments(ens.moments())},
      {"monitor",
       {{"total_n", m.total_n()},
        {"total_sum", num(m.total_sum())},
        {"cut_n", m.cut_n()},
        {"cut_sum", num(m.cut_sum())},
        {"post_n", m.post_n()},
        {"post_sum", num(m.post_sum())},
        {"state", to_string(m.state())}}},
      {"gofs", {{"kappa", vec(g.kappa)}, {"mask", g.mask.selected()}, {"initialized", g.initialized}}},
      {"experts", experts},
  };
}

Pensemble from_document(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "pens-model") throw DataError("model: not a pens model file");
  const int version = doc.at("version").get<int>();
  if (version != kModelVersion) {
    throw DataError("model: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelVersion) + ")");
  }
  EnsembleConfig cfg = config(doc.at("config"));
  Pensemble ens(cfg);
  const auto n = static_cast<Eigen::Index>(cfg.inputs);

  ens.set_chunks_seen(doc.at("chunks_seen").get<std::uint64_t>());
  ens.moments() = moments(doc.at("moments"));
  if (ens.moments().dim() != n) throw DataError("model: moment dimension does not match inputs");

  const auto& mj = doc.at("monitor");
  ens.monitor().restore(mj.at("total_n").get<std::uint64_t>(), num(mj.at("total_sum")),
                        mj.at("cut_n").get<std::uint64_t>(), num(mj.at("cut_sum")),
                        mj.at("post_n").get<std::uint64_t>(), num(mj.at("post_sum")),
                        drift_state(mj.at("state").get<std::string>()));

  const auto& gj = doc.at("gofs");
  auto& g = ens.gofs();
  g.kappa = vec(gj.at("kappa"));
  if (g.kappa.size() != n) throw DataError("model: kappa dimension does not match inputs");
  g.mask = FeatureMask::of(n, gj.at("mask").get<std::vector<int>>());
  g.initialized = gj.at("initialized").get<bool>();

  const LearnerParams params = LearnerParams::from(cfg);
  for (const auto& ej : doc.at("experts")) {
    LocalExpert e;
    e.learner = PClass(cfg.inputs, cfg.classes, params);
    e.weight = num(ej.at("weight"));
    e.mse = num(ej.at("mse"));
    e.mse_count = ej.at("mse_count").get<std::uint64_t>();
    const auto& h = ej.at("genhist");
    e.genhist.restore(h.at("count").get<std::uint64_t>(), num(h.at("mean")), num(h.at("m2")));
    e.b_max = num(ej.at("b_max"));
    e.born_at = ej.at("born_at").get<std::uint64_t>();
    auto& rb = e.learner.rules();
    rb.rules = rules(ej.at("rules"));
    rb.reserve = rules(ej.at("reserve"));
    rb.skipped_updates = ej.at("skipped_updates").get<long>();
    for (const auto* set : {&rb.rules, &rb.reserve}) {
      for (const auto& r : *set) {
        if (r.center.size() != n || r.inv_cov.rows() != n || r.inv_cov.cols() != n ||
            r.consequent.rows() != n + 1 || r.consequent.cols() != cfg.classes || r.rls_cov.rows() != n + 1 ||
            r.rls_cov.cols() != n + 1)
          throw DataError("model: rule dimensions do not match the configuration");
      }
    }
    const auto& dj = ej.at("density");
    auto& acc = e.learner.accumulators();
    acc.weight = num(dj.at("weight"));
    acc.sum = vec(dj.at("sum"));
    acc.sq_sum = num(dj.at("sq_sum"));
    e.learner.input_stats() = moments(ej.at("input_stats"));
    ens.experts().push_back(std::move(e));
  }
  return ens;
}

}  // namespace

std::string dump_model(const Pensemble& ens) { return to_document(ens).dump(1) + "\n"; }

Pensemble parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model: truncated or malformed JSON: ") + e.what());
  }
  try {
    return from_document(doc);
  } catch (const json::exception& e) {
    throw DataError(std::string("model: missing or mistyped field: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model: invalid configuration: ") + e.what());
  }
}

void save_model(const Pensemble& ens, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << dump_model(ens);
  if (!out) throw DataError("failed writing model file '" + path + "'");
}

Pensemble load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace pens
