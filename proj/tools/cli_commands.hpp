#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "pcarecon/covariance_mle.hpp"
#include "pcarecon/model.hpp"

namespace pcarecon::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3, kNoConvergence = 4 };

struct SimulateOptions {
    fs::path spec, out, truth;
};

struct ReconcileOptions {
    fs::path data, model, noise, out;
    std::optional<fs::path> truth;
    Names measured;  // empty: fully measured
};

struct IdentifyOptions {
    fs::path data;
    std::string mode = "pca";
    std::optional<fs::path> noise, known, truth_model, truth, out_noise;
    fs::path out_model, out_recon;
    std::optional<int> order;
    CovarianceStructure structure = CovarianceStructure::Diagonal;
    Names dependent;
    double tolerance = 0.1;
    int max_iterations = 100;
    int restarts = 32;
    std::uint64_t seed = 0;
    Names variables;  // restrict the data to these columns
};

struct ScanOptions {
    fs::path data;
    std::optional<int> m_min, m_max;
    std::optional<fs::path> truth, truth_model;
    CovarianceStructure structure = CovarianceStructure::Diagonal;
    int max_iterations = 100;
    int restarts = 32;
    std::uint64_t seed = 0;
};

struct ClassifyOptions {
    fs::path model;
    Names measured;
};

struct CompareOptions {
    fs::path estimated, truth_model;
    Names dependent;
};

struct PresetOptions {
    fs::path preset, outdir;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out);
int cmd_reconcile(const ReconcileOptions& o, std::ostream& out);
int cmd_identify(const IdentifyOptions& o, std::ostream& out);
int cmd_scan(const ScanOptions& o, std::ostream& out);
int cmd_classify(const ClassifyOptions& o, std::ostream& out);
int cmd_compare(const CompareOptions& o, std::ostream& out);
int cmd_preset(const PresetOptions& o, std::ostream& out);

CovarianceStructure parse_structure(const std::string& s);
Names split_names(const std::string& csv);

/// Maps a library error to the exit-code contract.
int exit_code_for(const Error& e);

}  // namespace pcarecon::cli
