#pragma once

// File formats.
//
//   data CSV   header of variable names, one row per sample (N x n on disk,
//              n x N in memory)
//   model CSV  header of variable names, one row per constraint
//   noise CSV  either `variable,sd` rows (diagonal) or a full matrix under a
//              header of variable names
//   spec JSON  {"spec_version": 1, "variables": [...], "constraints": [[...]],
//               "independent": [...], "base_values": {...},
//               "fluctuation_sd": {...}, "error_sd": {...},
//               "samples": N, "seed": S}
//
// Numbers are written in shortest round-trip form. Every write goes to a
// temporary file in the target directory and is renamed into place.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "pcarecon/simulate.hpp"

namespace pcarecon::io {

struct Table {
    Names header;
    Matrix rows;  // as on disk: one row per line
};

/// Throws InvalidInput on unreadable files or malformed content.
Table read_csv(const std::filesystem::path& path);
std::string format_csv(const Names& header, const Matrix& rows);

DataSet read_data(const std::filesystem::path& path, const std::filesystem::path* truth = nullptr);
void write_data(const std::filesystem::path& path, const Names& names, const Matrix& n_by_samples);

/// Throws InvalidInput for a header-only file, InvalidModel for bad matrices.
ConstraintModel read_model(const std::filesystem::path& path, Provenance provenance = Provenance::FirstPrinciples);
/// Raw matrix with columns reordered to `names`; may be empty or rank deficient.
Matrix read_constraint_rows(const std::filesystem::path& path, const Names& names);
void write_model(const std::filesystem::path& path, const ConstraintModel& model);

/// Variables are matched by name and returned in `names` order; the file may
/// list additional variables.
NoiseModel read_noise(const std::filesystem::path& path, const Names& names);
void write_noise(const std::filesystem::path& path, const NoiseModel& noise, const Names& names);

SimulationSpec parse_spec(const nlohmann::json& j);
/// Accepts a bare spec or a preset file (spec under "simulation").
SimulationSpec read_spec(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Shortest representation that parses back to the same double.
std::string format_full(double v);
/// Six significant digits, for reports.
std::string format_short(double v);

}  // namespace pcarecon::io
