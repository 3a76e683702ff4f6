#pragma once

// File formats: JSON artifacts with a format tag and version, CSV traces and
// exports, and atomic (temp file then rename) writes.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cid/fdvv.hpp"
#include "cid/orchestrator.hpp"
#include "cid/trace.hpp"
#include "cid/user.hpp"

namespace cid::io {

inline constexpr int kFormatVersion = 1;

/// Write `content` to a sibling temp file, then rename it over `path`, so a
/// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws cid::FormatError if the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Trace CSV: header t_s,disp_mm,force_n,vib, one row per sample. Time must be
// strictly increasing and uniformly sampled within 1%; the sample rate is
// derived from the spacing. Errors cite the first offending line.
std::string trace_to_csv(const button::FdTrace& trace);
button::FdTrace trace_from_csv(std::string_view text);
void save_trace(const std::filesystem::path& path, const button::FdTrace& trace);
button::FdTrace load_trace(const std::filesystem::path& path);

// JSON artifacts. Loading throws cid::FormatError for malformed or truncated
// documents, schema violations and format or version mismatches.
std::string fdvv_to_json(const button::FdvvModel& model);
button::FdvvModel fdvv_from_json(std::string_view text);
std::string policy_to_json(const user::MetaPolicy& policy);
user::MetaPolicy policy_from_json(std::string_view text);
/// Models are not stored; loading refits them from the records with the
/// stored kernels, which reproduces them exactly.
std::string run_state_to_json(const orchestrator::RunState& state);
orchestrator::RunState run_state_from_json(std::string_view text);

void save_model(const std::filesystem::path& path, const button::FdvvModel& model);
button::FdvvModel load_model(const std::filesystem::path& path);
void save_policy(const std::filesystem::path& path, const user::MetaPolicy& policy);
user::MetaPolicy load_policy(const std::filesystem::path& path);
void save_run_state(const std::filesystem::path& path, const orchestrator::RunState& state);
orchestrator::RunState load_run_state(const std::filesystem::path& path);

/// One archive entry per row (ascending record id): design columns, objective
/// columns, record_id. Numbers carry 9 significant digits.
std::string front_csv(const orchestrator::RunState& state, const std::vector<std::string>& design_names,
                      const std::vector<std::string>& objective_names);
/// iteration,hypervolume; iteration 0 is the end of the initial design.
std::string hypervolume_csv(const orchestrator::RunState& state);
/// One evaluation record as a single-line JSON object.
std::string record_json_line(const orchestrator::EvaluationRecord& record);

/// Design and objective column names implied by a configuration.
std::vector<std::string> design_names(const CidConfig& config);
std::vector<std::string> objective_names(const CidConfig& config);

}  // namespace cid::io
