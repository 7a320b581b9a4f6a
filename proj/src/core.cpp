#include "pens/core.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>

namespace pens {

void DataChunk::validate(Eigen::Index n, int classes) const {
  if (samples.empty()) throw DataError("data chunk is empty");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.x.size() != n) {
      throw DataError("sample " + std::to_string(i) + ": expected " + std::to_string(n) +
                      " features, got " + std::to_string(s.x.size()));
    }
    if (!s.x.allFinite()) throw DataError("sample " + std::to_string(i) + ": non-finite feature");
    if (s.label < 0 || s.label >= classes) {
      throw DataError("sample " + std::to_string(i) + ": label " + std::to_string(s.label) +
                      " outside 0.." + std::to_string(classes - 1));
    }
  }
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void EnsembleConfig::validate() const {
  require(inputs >= 1, "inputs must be >= 1");
  require(classes >= 2, "classes must be >= 2");
  require(open_unit(p), "p must lie in (0,1)");
  require(open_unit(theta), "theta must lie in (0,1)");
  require(alpha_w > 0.0 && alpha_w <= 1.0, "alpha_w must lie in (0,1]");
  require(alpha_d > 0.0 && alpha_d <= 1.0, "alpha_d must lie in (0,1]");
  require(open_unit(eta), "eta must lie in (0,1)");
  require(q > 0.0, "q must be positive");
  require(gofs_alpha > 0.0, "gofs_alpha must be positive");
  require(gofs_chi > 0.0, "gofs_chi must be positive");
  require(budget >= 0 && budget <= inputs, "budget must lie in 1..inputs (0 = all)");
  require(g_ds >= 0.0, "g_ds must be >= 0");
  require(rho_vol > 0.0, "rho_vol must be positive");
  require(theta_ers >= 0.0 && theta_ers < 1.0, "theta_ers must lie in [0,1)");
  require(theta_pp >= 0.0 && theta_pp < 1.0, "theta_pp must lie in [0,1)");
  require(gamma_decay >= 0.0 && gamma_decay < 1.0, "gamma_decay must lie in [0,1)");
  require(omega_init > 0.0, "omega_init must be positive");
  require(k_ov > 0.0, "k_ov must be positive");
  require(init_width > 0.0 && min_width > 0.0, "rule widths must be positive");
  require(exp_ceiling > 1.0, "exp_ceiling must exceed 1");
}

double parse_double(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError("invalid number for " + what + ": '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& what) {
  long long v = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("invalid integer for " + what + ": '" + text + "'");
  }
  return v;
}

void set_config_value(EnsembleConfig& cfg, const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  auto real = [&](double& field) { return Setter([&, key](const std::string& v) { field = parse_double(v, key); }); };
  const std::map<std::string, Setter> table = {
      {"inputs", [&](const std::string& v) { cfg.inputs = static_cast<int>(parse_int(v, key)); }},
      {"classes", [&](const std::string& v) { cfg.classes = static_cast<int>(parse_int(v, key)); }},
      {"p", real(cfg.p)},
      {"theta", real(cfg.theta)},
      {"alpha_w", real(cfg.alpha_w)},
      {"alpha_d", real(cfg.alpha_d)},
      {"eta", real(cfg.eta)},
      {"q", real(cfg.q)},
      {"prune_direction",
       [&](const std::string& v) {
         if (v == "large") cfg.prune_direction = PruneDirection::kLarge;
         else if (v == "small") cfg.prune_direction = PruneDirection::kSmall;
         else throw ConfigError("prune_direction must be 'large' or 'small'");
       }},
      {"gofs_alpha", real(cfg.gofs_alpha)},
      {"gofs_chi", real(cfg.gofs_chi)},
      {"budget", [&](const std::string& v) { cfg.budget = static_cast<int>(parse_int(v, key)); }},
      {"g_ds", real(cfg.g_ds)},
      {"rho_vol", real(cfg.rho_vol)},
      {"theta_ers", real(cfg.theta_ers)},
      {"theta_pp", real(cfg.theta_pp)},
      {"gamma_decay", real(cfg.gamma_decay)},
      {"omega_init", real(cfg.omega_init)},
      {"k_ov", real(cfg.k_ov)},
      {"init_width", real(cfg.init_width)},
      {"min_width", real(cfg.min_width)},
      {"exp_ceiling", real(cfg.exp_ceiling)},
      {"seed", [&](const std::string& v) { cfg.seed = static_cast<std::uint64_t>(parse_int(v, key)); }},
  };
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(value);
}

}  // namespace pens
