#include "cid/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "cid/error.hpp"

namespace cid {

std::string_view objective_name(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::kCompletionTime: return "completion_time_s";
    case ObjectiveKind::kErrorRate: return "error_rate";
    case ObjectiveKind::kEffort: return "effort";
  }
  return "unknown";
}

std::string_view provider_name(ProviderKind kind) noexcept {
  switch (kind) {
    case ProviderKind::kSimulatedButton: return "simulated_button";
    case ProviderKind::kSynthetic: return "synthetic";
  }
  return "unknown";
}

mobo::Bounds DesignSpace::bounds() const {
  const auto lo = lower.to_array();
  const auto hi = upper.to_array();
  return {std::vector<double>(lo.begin(), lo.end()), std::vector<double>(hi.begin(), hi.end())};
}

std::size_t CidConfig::objective_count() const {
  return objectives.provider == ProviderKind::kSynthetic ? problems::SyntheticProblem::objectives()
                                                         : objectives.kinds.size();
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  const std::string t = trim(s);
  if (t.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = t.find(',', start);
    out.push_back(trim(std::string_view(t).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text) {
  const std::string t = trim(text);
  T value{};
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw std::invalid_argument(fmt::format("'{}' is not a valid number", t));
  }
  return value;
}

std::string format_double(double v) { return fmt::format("{}", v); }

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(values[i]);
    } else {
      out += fmt::format("{}", values[i]);
    }
  }
  return out;
}

struct KeyDef {
  std::string section;
  std::string key;
  std::function<void(CidConfig&, std::string_view)> parse;
  std::function<std::string(const CidConfig&)> print;
};

template <typename Get>
KeyDef double_key(std::string section, std::string key, Get get) {
  return {std::move(section), std::move(key),
          [get](CidConfig& c, std::string_view v) { get(c) = parse_number<double>(v); },
          [get](const CidConfig& c) { return format_double(get(c)); }};
}

template <typename Get>
KeyDef int_key(std::string section, std::string key, Get get) {
  return {std::move(section), std::move(key),
          [get](CidConfig& c, std::string_view v) { get(c) = parse_number<int>(v); },
          [get](const CidConfig& c) { return fmt::format("{}", get(c)); }};
}

KeyDef design_key(std::size_t field, bool upper) {
  const std::string name =
      std::string(button::ButtonDesignParams::kNames[field]) + (upper ? "_max" : "_min");
  auto pick = [upper](auto& c) -> auto& {
    return upper ? c.design_space.upper : c.design_space.lower;
  };
  return {"design_space", name,
          [pick, field](CidConfig& c, std::string_view v) {
            auto a = pick(c).to_array();
            a[field] = parse_number<double>(v);
            pick(c) = button::ButtonDesignParams::from_array(a);
          },
          [pick, field](const CidConfig& c) {
            return format_double(pick(c).to_array()[field]);
          }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    for (std::size_t j = 0; j < button::ButtonDesignParams::kDim; ++j) {
      t.push_back(design_key(j, false));
      t.push_back(design_key(j, true));
    }

    t.push_back({"objectives", "list",
                 [](CidConfig& c, std::string_view v) {
                   c.objectives.kinds.clear();
                   for (const auto& name : split_list(v)) {
                     if (name == "completion_time_s") {
                       c.objectives.kinds.push_back(ObjectiveKind::kCompletionTime);
                     } else if (name == "error_rate") {
                       c.objectives.kinds.push_back(ObjectiveKind::kErrorRate);
                     } else if (name == "effort") {
                       c.objectives.kinds.push_back(ObjectiveKind::kEffort);
                     } else {
                       throw std::invalid_argument(fmt::format(
                           "unknown objective '{}' (expected completion_time_s, error_rate, effort)",
                           name));
                     }
                   }
                 },
                 [](const CidConfig& c) {
                   std::vector<std::string_view> names;
                   for (auto k : c.objectives.kinds) names.push_back(objective_name(k));
                   return fmt::format("{}", fmt::join(names, ", "));
                 }});
    t.push_back({"objectives", "provider",
                 [](CidConfig& c, std::string_view v) {
                   const std::string s = trim(v);
                   if (s == "simulated_button") {
                     c.objectives.provider = ProviderKind::kSimulatedButton;
                   } else if (s == "synthetic") {
                     c.objectives.provider = ProviderKind::kSynthetic;
                   } else {
                     throw std::invalid_argument(
                         fmt::format("unknown provider '{}' (expected simulated_button, synthetic)", s));
                   }
                 },
                 [](const CidConfig& c) { return std::string(provider_name(c.objectives.provider)); }});
    t.push_back({"objectives", "problem",
                 [](CidConfig& c, std::string_view v) {
                   const std::string s = trim(v);
                   const auto id = problems::parse_problem(s);
                   if (!id) {
                     throw std::invalid_argument(
                         fmt::format("unknown problem '{}' (expected schaffer, zdt1)", s));
                   }
                   c.objectives.problem = *id;
                 },
                 [](const CidConfig& c) {
                   return std::string(problems::problem_name(c.objectives.problem));
                 }});
    t.push_back(int_key("objectives", "problem_dim",
                        [](auto& c) -> auto& { return c.objectives.problem_dim; }));

    t.push_back(int_key("optimizer", "initial_designs",
                        [](auto& c) -> auto& { return c.optimizer.initial_designs; }));
    t.push_back(int_key("optimizer", "scan_count",
                        [](auto& c) -> auto& { return c.optimizer.scan_count; }));
    t.push_back(int_key("optimizer", "mc_samples",
                        [](auto& c) -> auto& { return c.optimizer.mc_samples; }));
    t.push_back(int_key("optimizer", "restarts",
                        [](auto& c) -> auto& { return c.optimizer.restarts; }));
    t.push_back(int_key("optimizer", "refit_interval",
                        [](auto& c) -> auto& { return c.optimizer.refit_interval; }));
    t.push_back(double_key("optimizer", "reference_margin",
                           [](auto& c) -> auto& { return c.optimizer.reference_margin; }));
    t.push_back({"optimizer", "reference",
                 [](CidConfig& c, std::string_view v) {
                   c.optimizer.reference.clear();
                   for (const auto& s : split_list(v)) {
                     c.optimizer.reference.push_back(parse_number<double>(s));
                   }
                 },
                 [](const CidConfig& c) { return join(c.optimizer.reference); }});
    t.push_back({"optimizer", "kernel",
                 [](CidConfig& c, std::string_view v) {
                   const std::string s = trim(v);
                   if (s == "matern52") {
                     c.optimizer.kernel = gp::KernelFamily::kMatern52;
                   } else if (s == "squared_exponential") {
                     c.optimizer.kernel = gp::KernelFamily::kSquaredExponential;
                   } else {
                     throw std::invalid_argument(fmt::format(
                         "unknown kernel '{}' (expected matern52, squared_exponential)", s));
                   }
                 },
                 [](const CidConfig& c) {
                   return std::string(c.optimizer.kernel == gp::KernelFamily::kMatern52
                                          ? "matern52"
                                          : "squared_exponential");
                 }});

    t.push_back(int_key("user_model", "meta_iterations",
                        [](auto& c) -> auto& { return c.user_model.meta_iterations; }));
    t.push_back(double_key("user_model", "meta_lr",
                           [](auto& c) -> auto& { return c.user_model.meta_lr; }));
    t.push_back(int_key("user_model", "tasks_per_iteration",
                        [](auto& c) -> auto& { return c.user_model.tasks_per_iteration; }));
    t.push_back(int_key("user_model", "post_adaptation_rollouts",
                        [](auto& c) -> auto& { return c.user_model.post_adaptation_rollouts; }));
    t.push_back(double_key("user_model", "inner_lr",
                           [](auto& c) -> auto& { return c.user_model.inner_lr; }));
    t.push_back(int_key("user_model", "adapt_episodes",
                        [](auto& c) -> auto& { return c.user_model.adapt_episodes; }));
    t.push_back(int_key("user_model", "batch_size",
                        [](auto& c) -> auto& { return c.user_model.batch_size; }));
    t.push_back(int_key("user_model", "episodes",
                        [](auto& c) -> auto& { return c.user_model.episodes; }));
    t.push_back(int_key("user_model", "horizon",
                        [](auto& c) -> auto& { return c.user_model.horizon; }));
    t.push_back(int_key("user_model", "dwell_limit",
                        [](auto& c) -> auto& { return c.user_model.dwell_limit; }));
    t.push_back(int_key("user_model", "sensory_delay",
                        [](auto& c) -> auto& { return c.user_model.sensory_delay; }));
    t.push_back(double_key("user_model", "gamma",
                           [](auto& c) -> auto& { return c.user_model.gamma; }));
    t.push_back({"user_model", "hidden",
                 [](CidConfig& c, std::string_view v) {
                   c.user_model.hidden.clear();
                   for (const auto& s : split_list(v)) c.user_model.hidden.push_back(parse_number<int>(s));
                 },
                 [](const CidConfig& c) { return join(c.user_model.hidden); }});

    t.push_back(double_key("simulator", "mass_kg",
                           [](auto& c) -> auto& { return c.simulator.mass_kg; }));
    t.push_back(int_key("simulator", "substeps",
                        [](auto& c) -> auto& { return c.simulator.substeps; }));

    t.push_back(int_key("run", "budget", [](auto& c) -> auto& { return c.run.budget; }));
    t.push_back({"run", "seed",
                 [](CidConfig& c, std::string_view v) { c.run.seed = parse_number<std::uint64_t>(v); },
                 [](const CidConfig& c) { return fmt::format("{}", c.run.seed); }});
    return t;
  }();
  return table;
}

const std::vector<std::string> kSections{"design_space", "objectives", "optimizer",
                                         "user_model",   "simulator",  "run"};

}  // namespace

void CidConfig::validate() const {
  auto require = [](bool ok, std::string where, std::string_view what) {
    if (!ok) throw ConfigError(std::move(where), std::string(what));
  };

  const auto lo = design_space.lower.to_array();
  const auto hi = design_space.upper.to_array();
  for (std::size_t j = 0; j < lo.size(); ++j) {
    const std::string name(button::ButtonDesignParams::kNames[j]);
    for (const auto& [value, suffix] : {std::pair{lo[j], "_min"}, std::pair{hi[j], "_max"}}) {
      auto probe = button::ButtonDesignParams{}.to_array();
      probe[j] = value;
      try {
        button::ButtonDesignParams::from_array(probe).validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("design_space." + name + suffix, e.what());
      }
    }
    require(lo[j] <= hi[j], "design_space." + name + "_min",
            fmt::format("lower bound {} exceeds upper bound {}", lo[j], hi[j]));
  }

  if (objectives.provider == ProviderKind::kSimulatedButton) {
    require(objectives.kinds.size() >= 2, "objectives.list", "at least two objectives are required");
    std::set<ObjectiveKind> seen(objectives.kinds.begin(), objectives.kinds.end());
    require(seen.size() == objectives.kinds.size(), "objectives.list", "duplicate objective");
  }
  require(objectives.problem_dim >= 0, "objectives.problem_dim", "must be >= 0");
  if (objectives.provider == ProviderKind::kSynthetic) {
    try {
      problems::make_problem(objectives.problem, static_cast<std::size_t>(objectives.problem_dim));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("objectives.problem_dim", e.what());
    }
  }

  require(optimizer.initial_designs >= 1, "optimizer.initial_designs", "must be >= 1");
  require(optimizer.scan_count >= 1, "optimizer.scan_count", "must be >= 1");
  require(optimizer.mc_samples >= 1, "optimizer.mc_samples", "must be >= 1");
  require(optimizer.restarts >= 1, "optimizer.restarts", "must be >= 1");
  require(optimizer.refit_interval >= 1, "optimizer.refit_interval", "must be >= 1");
  require(optimizer.reference_margin > 0.0 && std::isfinite(optimizer.reference_margin),
          "optimizer.reference_margin", "must be positive");
  if (!optimizer.reference.empty()) {
    require(optimizer.reference.size() == objective_count(), "optimizer.reference",
            fmt::format("needs {} entries, one per objective", objective_count()));
    for (double r : optimizer.reference) {
      require(std::isfinite(r), "optimizer.reference", "entries must be finite");
    }
  }

  require(user_model.meta_iterations >= 0, "user_model.meta_iterations", "must be >= 0");
  require(user_model.meta_lr > 0.0 && std::isfinite(user_model.meta_lr), "user_model.meta_lr",
          "must be positive");
  require(user_model.tasks_per_iteration >= 1, "user_model.tasks_per_iteration", "must be >= 1");
  require(user_model.post_adaptation_rollouts >= 1, "user_model.post_adaptation_rollouts",
          "must be >= 1");
  require(user_model.inner_lr > 0.0 && std::isfinite(user_model.inner_lr), "user_model.inner_lr",
          "must be positive");
  require(user_model.adapt_episodes >= 0, "user_model.adapt_episodes", "must be >= 0");
  require(user_model.batch_size >= 1, "user_model.batch_size", "must be >= 1");
  require(user_model.episodes >= 1, "user_model.episodes", "must be >= 1");
  require(user_model.horizon >= 1, "user_model.horizon", "must be >= 1");
  require(user_model.dwell_limit >= 1, "user_model.dwell_limit", "must be >= 1");
  require(user_model.sensory_delay >= 0, "user_model.sensory_delay", "must be >= 0");
  require(user_model.gamma > 0.0 && user_model.gamma <= 1.0, "user_model.gamma", "must lie in (0, 1]");
  require(!user_model.hidden.empty(), "user_model.hidden", "needs at least one layer");
  for (int h : user_model.hidden) require(h >= 1, "user_model.hidden", "layer sizes must be >= 1");

  require(simulator.mass_kg > 0.0 && std::isfinite(simulator.mass_kg), "simulator.mass_kg",
          "must be positive");
  require(simulator.substeps >= 1, "simulator.substeps", "must be >= 1");

  require(run.budget >= 1, "run.budget", "must be >= 1");
}

CidConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}", e.line()), e.message());
  }

  CidConfig config;
  const auto& table = key_table();
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(section, "key outside of any section");
    }
    if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      const std::string where = section + "." + key;
      const auto def = std::find_if(table.begin(), table.end(), [&](const KeyDef& d) {
        return d.section == section && d.key == key;
      });
      if (def == table.end()) throw ConfigError(where, "unknown key");
      try {
        def->parse(config, value.data());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
      }
    }
  }
  config.validate();
  return config;
}

std::string serialize_config(const CidConfig& config) {
  std::string out;
  std::string current;
  for (const auto& def : key_table()) {
    if (def.section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + def.section + "]\n";
      current = def.section;
    }
    out += def.key + " = " + def.print(config) + "\n";
  }
  return out;
}

std::string config_fingerprint(const CidConfig& config) {
  // FNV-1a over the canonical text.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cid
