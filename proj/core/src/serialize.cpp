#include "cid/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cid/error.hpp"

namespace cid::io {

using nlohmann::json;

namespace {

constexpr std::string_view kTraceHeader[] = {"t_s", "disp_mm", "force_n", "vib"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FormatError(fmt::format("line {}: column {}: '{}' is not a finite number", line, column, s));
  }
  return v;
}

std::string sig9(double v) { return fmt::format("{:.9g}", v); }

json spline_to_json(const button::BSpline& s) {
  return {{"degree", s.degree()}, {"knots", s.knots()}, {"coefficients", s.coefficients()}};
}

button::BSpline spline_from_json(const json& j) {
  return button::BSpline(j.at("degree").get<int>(), j.at("knots").get<std::vector<double>>(),
                         j.at("coefficients").get<std::vector<double>>());
}

json kernel_to_json(const gp::KernelSpec& k) {
  return {{"family", k.family == gp::KernelFamily::kMatern52 ? "matern52" : "squared_exponential"},
          {"signal_variance", k.signal_variance},
          {"lengthscales", k.lengthscales},
          {"noise_variance", k.noise_variance}};
}

gp::KernelSpec kernel_from_json(const json& j) {
  gp::KernelSpec k;
  const auto family = j.at("family").get<std::string>();
  if (family == "matern52") {
    k.family = gp::KernelFamily::kMatern52;
  } else if (family == "squared_exponential") {
    k.family = gp::KernelFamily::kSquaredExponential;
  } else {
    throw FormatError(fmt::format("unknown kernel family '{}'", family));
  }
  k.signal_variance = j.at("signal_variance").get<double>();
  k.lengthscales = j.at("lengthscales").get<std::vector<double>>();
  k.noise_variance = j.at("noise_variance").get<double>();
  k.validate(k.lengthscales.size());
  return k;
}

json record_to_json(const orchestrator::EvaluationRecord& r) {
  json episodes = json::array();
  for (const auto& e : r.episodes) {
    episodes.push_back({{"return", e.discounted_return},
                        {"success", e.success},
                        {"time_to_activation", e.time_to_activation}});
  }
  return {{"id", r.id},
          {"iteration", r.iteration},
          {"design", r.design},
          {"objectives", r.objectives},
          {"evaluation_seed", r.evaluation_seed},
          {"acquisition_seed", r.acquisition_seed},
          {"episodes", episodes},
          {"failed", r.failed},
          {"perturbed", r.perturbed},
          {"exploration_fallback", r.exploration_fallback},
          {"error", r.error}};
}

orchestrator::EvaluationRecord record_from_json(const json& j) {
  orchestrator::EvaluationRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.iteration = j.at("iteration").get<int>();
  r.design = j.at("design").get<std::vector<double>>();
  r.objectives = j.at("objectives").get<std::vector<double>>();
  r.evaluation_seed = j.at("evaluation_seed").get<std::uint64_t>();
  r.acquisition_seed = j.at("acquisition_seed").get<std::uint64_t>();
  for (const auto& e : j.at("episodes")) {
    r.episodes.push_back({e.at("return").get<double>(), e.at("success").get<bool>(),
                          e.at("time_to_activation").get<double>()});
  }
  r.failed = j.at("failed").get<bool>();
  r.perturbed = j.at("perturbed").get<bool>();
  r.exploration_fallback = j.at("exploration_fallback").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

json envelope(std::string_view format) {
  return {{"format", format}, {"format_version", kFormatVersion}};
}

// Parse a document and check its format tag and version; every failure
// surfaces as FormatError.
template <typename Build>
auto load_document(std::string_view text, std::string_view format, Build build) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: malformed or truncated document: {}", format, e.what()));
  }
  try {
    if (!j.is_object()) throw FormatError(fmt::format("{}: document is not an object", format));
    const auto tag = j.at("format").get<std::string>();
    if (tag != format) {
      throw FormatError(fmt::format("expected a {} document, found {}", format, tag));
    }
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError(fmt::format("{}: format version {} is not supported (expected {})", format,
                                    version, kFormatVersion));
    }
    return build(j);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: schema violation: {}", format, e.what()));
  } catch (const std::invalid_argument& e) {
    throw FormatError(fmt::format("{}: schema violation: {}", format, e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("{}: embedded configuration: {}", format, e.what()));
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FormatError(fmt::format("failed writing {}", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw FormatError(fmt::format("cannot replace {}: {}", path.string(), ec.message()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Traces

std::string trace_to_csv(const button::FdTrace& trace) {
  std::string out = "t_s,disp_mm,force_n,vib\n";
  for (const auto& s : trace.samples) {
    out += fmt::format("{},{},{},{}\n", s.t_s, s.disp_mm, s.force_n, s.vib);
  }
  return out;
}

button::FdTrace trace_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("line 1: empty trace file");

  const auto header = split_csv_line(lines[0]);
  for (std::size_t c = 0; c < std::size(kTraceHeader); ++c) {
    if (c >= header.size()) throw FormatError(fmt::format("line 1: missing column {}", kTraceHeader[c]));
    if (header[c] != kTraceHeader[c]) {
      throw FormatError(fmt::format("line 1: expected column {} at position {}, found '{}'",
                                    kTraceHeader[c], c + 1, header[c]));
    }
  }
  if (header.size() > std::size(kTraceHeader)) {
    throw FormatError(fmt::format("line 1: unexpected extra column '{}'", header[4]));
  }

  button::FdTrace trace;
  double first_dt = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() < std::size(kTraceHeader)) {
      throw FormatError(fmt::format("line {}: missing column {}", line, kTraceHeader[fields.size()]));
    }
    if (fields.size() > std::size(kTraceHeader)) {
      throw FormatError(fmt::format("line {}: {} fields, expected 4", line, fields.size()));
    }
    button::TraceSample s{parse_double(fields[0], line, "t_s"), parse_double(fields[1], line, "disp_mm"),
                          parse_double(fields[2], line, "force_n"), parse_double(fields[3], line, "vib")};
    if (s.disp_mm < 0.0) throw FormatError(fmt::format("line {}: negative displacement", line));
    if (!trace.samples.empty()) {
      const double prev = trace.samples.back().t_s;
      if (!(s.t_s > prev)) {
        throw FormatError(
            fmt::format("line {}: non-monotone time ({} does not follow {})", line, s.t_s, prev));
      }
      const double dt = s.t_s - prev;
      if (trace.samples.size() == 1) {
        first_dt = dt;
      } else if (std::abs(dt - first_dt) > 0.01 * first_dt) {
        throw FormatError(fmt::format(
            "line {}: irregular sampling (interval {} differs from {} by more than 1%)", line, dt,
            first_dt));
      }
    }
    trace.samples.push_back(s);
  }
  if (trace.samples.size() < 2) {
    throw FormatError("trace needs at least two samples to derive the sample rate");
  }
  const double span = trace.samples.back().t_s - trace.samples.front().t_s;
  trace.sample_rate = static_cast<double>(trace.samples.size() - 1) / span;
  return trace;
}

void save_trace(const std::filesystem::path& path, const button::FdTrace& trace) {
  write_file_atomic(path, trace_to_csv(trace));
}

button::FdTrace load_trace(const std::filesystem::path& path) {
  try {
    return trace_from_csv(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------
// FDVV model

std::string fdvv_to_json(const button::FdvvModel& m) {
  json j = envelope("cid.fdvv_model");
  json curves = json::array();
  for (const auto& c : m.fd_curves) curves.push_back(spline_to_json(c));
  j["velocity_levels"] = m.velocity_levels;
  j["fd_curves"] = curves;
  j["travel"] = m.travel;
  j["activation_disp"] = m.activation_disp;
  j["release_disp"] = m.release_disp;
  j["vibration"] = {{"frequency_hz", m.vibration.frequency_hz},
                    {"amplitude", m.vibration.amplitude},
                    {"decay_per_s", m.vibration.decay_per_s}};
  j["max_force"] = m.max_force;
  j["damping"] = m.damping;
  return j.dump(2) + "\n";
}

button::FdvvModel fdvv_from_json(std::string_view text) {
  return load_document(text, "cid.fdvv_model", [](const json& j) {
    button::FdvvModel m;
    m.velocity_levels = j.at("velocity_levels").get<std::vector<double>>();
    for (const auto& c : j.at("fd_curves")) m.fd_curves.push_back(spline_from_json(c));
    m.travel = j.at("travel").get<double>();
    m.activation_disp = j.at("activation_disp").get<double>();
    m.release_disp = j.at("release_disp").get<double>();
    const auto& v = j.at("vibration");
    m.vibration = {v.at("frequency_hz").get<double>(), v.at("amplitude").get<double>(),
                   v.at("decay_per_s").get<double>()};
    m.max_force = j.at("max_force").get<double>();
    m.damping = j.at("damping").get<double>();
    m.validate();
    return m;
  });
}

// ---------------------------------------------------------------------------
// Meta-policy

std::string policy_to_json(const user::MetaPolicy& p) {
  json j = envelope("cid.meta_policy");
  const auto& r = p.rollout;
  j["architecture"] = {{"inputs", user::kObsDim},
                       {"hidden", p.init_params.arch.hidden},
                       {"outputs", 1},
                       {"activation", "tanh"}};
  j["weights"] = std::vector<double>(p.init_params.values.data(),
                                     p.init_params.values.data() + p.init_params.values.size());
  j["inner_lr"] = p.inner_lr;
  j["adapt_episodes"] = p.adapt_episodes;
  j["rollout"] = {{"gamma", r.gamma},
                  {"sensory_delay_steps", r.sensory_delay_steps},
                  {"dt", r.dt},
                  {"mass_kg", r.sim.mass_kg},
                  {"substeps", r.sim.substeps},
                  {"success_reward", r.success_reward},
                  {"step_penalty", r.step_penalty},
                  {"effort_coefficient", r.effort_coefficient},
                  {"failure_penalty", r.failure_penalty},
                  {"batch_size", r.batch_size}};
  return j.dump(2) + "\n";
}

user::MetaPolicy policy_from_json(std::string_view text) {
  return load_document(text, "cid.meta_policy", [](const json& j) {
    user::MetaPolicy p;
    const auto& a = j.at("architecture");
    if (a.at("inputs").get<std::size_t>() != user::kObsDim || a.at("outputs").get<int>() != 1 ||
        a.at("activation").get<std::string>() != "tanh") {
      throw FormatError("cid.meta_policy: unsupported architecture");
    }
    p.init_params.arch.hidden = a.at("hidden").get<std::vector<int>>();
    const auto w = j.at("weights").get<std::vector<double>>();
    p.init_params.values = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    p.inner_lr = j.at("inner_lr").get<double>();
    p.adapt_episodes = j.at("adapt_episodes").get<int>();
    const auto& r = j.at("rollout");
    p.rollout.gamma = r.at("gamma").get<double>();
    p.rollout.sensory_delay_steps = r.at("sensory_delay_steps").get<int>();
    p.rollout.dt = r.at("dt").get<double>();
    p.rollout.sim.mass_kg = r.at("mass_kg").get<double>();
    p.rollout.sim.substeps = r.at("substeps").get<int>();
    p.rollout.success_reward = r.at("success_reward").get<double>();
    p.rollout.step_penalty = r.at("step_penalty").get<double>();
    p.rollout.effort_coefficient = r.at("effort_coefficient").get<double>();
    p.rollout.failure_penalty = r.at("failure_penalty").get<double>();
    p.rollout.batch_size = r.at("batch_size").get<int>();
    for (int h : p.init_params.arch.hidden) {
      if (h < 1) throw FormatError("cid.meta_policy: hidden layer sizes must be >= 1");
    }
    p.validate();
    return p;
  });
}

// ---------------------------------------------------------------------------
// Run state

std::string run_state_to_json(const orchestrator::RunState& s) {
  json j = envelope("cid.run_state");
  j["fingerprint"] = s.fingerprint;
  j["config"] = serialize_config(s.config);
  json records = json::array();
  for (const auto& r : s.records) records.push_back(record_to_json(r));
  j["records"] = records;
  json kernels = json::array();
  for (const auto& k : s.kernels) kernels.push_back(kernel_to_json(k));
  j["kernels"] = kernels;
  j["reference"] = s.reference;
  j["iteration"] = s.iteration;
  j["seed_cursor"] = s.seed_cursor;
  j["hv_history"] = s.hv_history;
  return j.dump(2) + "\n";
}

orchestrator::RunState run_state_from_json(std::string_view text) {
  return load_document(text, "cid.run_state", [](const json& j) {
    orchestrator::RunState s;
    s.config = parse_config(j.at("config").get<std::string>());
    s.fingerprint = j.at("fingerprint").get<std::string>();
    if (s.fingerprint != config_fingerprint(s.config)) {
      throw FormatError("cid.run_state: fingerprint does not match the embedded configuration");
    }
    for (const auto& r : j.at("records")) s.records.push_back(record_from_json(r));
    for (const auto& k : j.at("kernels")) s.kernels.push_back(kernel_from_json(k));
    s.reference = j.at("reference").get<std::vector<double>>();
    s.iteration = j.at("iteration").get<int>();
    s.seed_cursor = j.at("seed_cursor").get<std::uint64_t>();
    s.hv_history = j.at("hv_history").get<std::vector<double>>();

    const std::size_t m = s.config.objective_count();
    if (s.seed_cursor != s.records.size()) {
      throw FormatError("cid.run_state: seed cursor does not match the record count");
    }
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      if (s.records[i].iteration != static_cast<int>(i) || s.records[i].objectives.size() != m) {
        throw FormatError(fmt::format("cid.run_state: record {} is inconsistent", i));
      }
    }
    if (s.records.size() > s.total_evaluations()) {
      throw FormatError("cid.run_state: more records than the configured budget allows");
    }
    if (s.initial_design_complete()) {
      if (s.kernels.size() != m || s.reference.size() != m) {
        throw FormatError("cid.run_state: missing kernels or reference point");
      }
      orchestrator::refit_models(s, false);
    }
    return s;
  });
}

void save_model(const std::filesystem::path& path, const button::FdvvModel& model) {
  write_file_atomic(path, fdvv_to_json(model));
}
button::FdvvModel load_model(const std::filesystem::path& path) {
  return fdvv_from_json(read_file(path));
}
void save_policy(const std::filesystem::path& path, const user::MetaPolicy& policy) {
  write_file_atomic(path, policy_to_json(policy));
}
user::MetaPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_file(path));
}
void save_run_state(const std::filesystem::path& path, const orchestrator::RunState& state) {
  write_file_atomic(path, run_state_to_json(state));
}
orchestrator::RunState load_run_state(const std::filesystem::path& path) {
  return run_state_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Exports

std::string front_csv(const orchestrator::RunState& state, const std::vector<std::string>& design_names,
                      const std::vector<std::string>& objective_names) {
  auto entries = state.archive().entries();
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  std::string out;
  for (const auto& n : design_names) out += n + ",";
  for (const auto& n : objective_names) out += n + ",";
  out += "record_id\n";
  for (const auto& e : entries) {
    if (e.design.size() != design_names.size() || e.objectives.size() != objective_names.size()) {
      throw std::invalid_argument("front_csv: column names do not match the archive");
    }
    for (double v : e.design) out += sig9(v) + ",";
    for (double v : e.objectives) out += sig9(v) + ",";
    out += fmt::format("{}\n", e.record_id);
  }
  return out;
}

std::string hypervolume_csv(const orchestrator::RunState& state) {
  std::string out = "iteration,hypervolume\n";
  for (std::size_t i = 0; i < state.hv_history.size(); ++i) {
    out += fmt::format("{},{}\n", i, sig9(state.hv_history[i]));
  }
  return out;
}

std::string record_json_line(const orchestrator::EvaluationRecord& record) {
  return record_to_json(record).dump() + "\n";
}

std::vector<std::string> design_names(const CidConfig& config) {
  if (config.objectives.provider == ProviderKind::kSynthetic) {
    return orchestrator::make_synthetic_provider(config)->design_names();
  }
  return {button::ButtonDesignParams::kNames.begin(), button::ButtonDesignParams::kNames.end()};
}

std::vector<std::string> objective_names(const CidConfig& config) {
  if (config.objectives.provider == ProviderKind::kSynthetic) return {"f1", "f2"};
  std::vector<std::string> names;
  for (auto k : config.objectives.kinds) names.emplace_back(objective_name(k));
  return names;
}

}  // namespace cid::io
