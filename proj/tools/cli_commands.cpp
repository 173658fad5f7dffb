#include "cli_commands.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "pcarecon/constrained_identify.hpp"
#include "pcarecon/diagnostics.hpp"
#include "pcarecon/identify_ipca.hpp"
#include "pcarecon/identify_pca.hpp"
#include "pcarecon/io.hpp"
#include "pcarecon/reconcile.hpp"
#include "pcarecon/simulate.hpp"

namespace pcarecon::cli {

using io::format_short;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidInput, what); }

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string join(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_short(v(i));
    return out;
}

std::string join(const Names& names, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? sep : "") + names[i];
    return out;
}

/// Rows of `data` named in `names`, in that order (truth included).
DataSet select(const DataSet& data, const Names& names) {
    std::vector<Eigen::Index> idx;
    for (const auto& name : names) {
        const auto& all = data.variable_names();
        const auto it = std::find(all.begin(), all.end(), name);
        if (it == all.end()) invalid("data has no column '" + name + "'");
        idx.push_back(it - all.begin());
    }
    std::optional<Matrix> x;
    if (data.truth()) x = Matrix((*data.truth())(idx, Eigen::all));
    return DataSet(data.measurements()(idx, Eigen::all), names, std::move(x));
}

struct RmseColumn {
    std::string title;
    std::optional<Vector> values;  // per variable; NaN prints as "-"
};

void print_rmse(std::ostream& out, const Names& names, const std::vector<RmseColumn>& cols) {
    out << pad("variable", 10);
    for (const auto& c : cols) out << pad(c.title, 18);
    out << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << pad(names[i], 10);
        for (const auto& c : cols) {
            const double v = c.values ? (*c.values)(static_cast<Eigen::Index>(i)) : std::nan("");
            out << pad(std::isnan(v) ? "-" : format_short(v), 18);
        }
        out << '\n';
    }
}

void print_model(std::ostream& out, const Matrix& a, const Names& names) {
    out << "  " << join(names, "  ") << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << "  [" << join(Vector(a.row(i).transpose())) << "]\n";
}

void print_classification(std::ostream& out, const ConstraintModel& model, const ClassificationReport& c) {
    out << "classification (t = rank of unmeasured block = " << c.projection_rank << ")\n";
    for (const auto& name : model.variable_names()) {
        std::string status;
        if (auto it = c.measured_redundant.find(name); it != c.measured_redundant.end())
            status = it->second ? "measured, redundant" : "measured, non-redundant";
        else
            status = c.unmeasured_observable.at(name) ? "unmeasured, observable" : "unmeasured, unobservable";
        out << "  " << pad(name, 8) << status << '\n';
    }
    out << "reduced constraints: " << c.reduced_model.constraints() << '\n';
    if (c.reduced_model.constraints() > 0) print_model(out, c.reduced_model.matrix(), c.measured);

    std::vector<bool> mask;
    for (const auto& name : model.variable_names()) mask.push_back(c.measured_redundant.count(name) > 0);
    if (auto g = classify_flow_network(model, mask)) {
        const bool agree = g->measured_redundant == c.measured_redundant &&
                           g->unmeasured_observable == c.unmeasured_observable &&
                           g->reduced_constraints == c.reduced_model.constraints();
        out << "graph cross-check: " << (agree ? "agrees" : "DISAGREES") << '\n';
    }
}

void print_quality(std::ostream& out, const ConstraintModel& estimated, const ConstraintModel& truth,
                   Names dependent) {
    out << "alpha: " << format_short(alpha_metric(estimated, truth)) << '\n';
    out << "subspace angle (deg): " << format_short(subspace_angle(estimated, truth)) << '\n';
    if (estimated.constraints() != truth.constraints()) {
        out << "regression comparison: skipped (constraint counts differ)\n";
        return;
    }
    if (dependent.empty()) {
        const Names& all = truth.variable_names();
        dependent.assign(all.end() - truth.constraints(), all.end());
    }
    try {
        const auto r = regression_compare(estimated, truth, dependent);
        out << "regression comparison (dependent " << join(r.dependent) << "; independent " << join(r.independent)
            << ")\n";
        out << "  true R:\n";
        for (Eigen::Index i = 0; i < r.truth.rows(); ++i) out << "    [" << join(Vector(r.truth.row(i).transpose())) << "]\n";
        out << "  estimated R:\n";
        for (Eigen::Index i = 0; i < r.estimated.rows(); ++i)
            out << "    [" << join(Vector(r.estimated.row(i).transpose())) << "]\n";
        out << "  max abs difference: " << format_short(r.max_abs_difference) << '\n';
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularDependentBlock) throw;
        out << "regression comparison: dependent block singular for " << join(dependent) << '\n';
    }
}

void print_sd(std::ostream& out, const Names& names, const Vector& sd) {
    out << "estimated standard deviations\n";
    for (std::size_t i = 0; i < names.size(); ++i)
        out << "  " << pad(names[i], 8) << format_short(sd(static_cast<Eigen::Index>(i))) << '\n';
}

std::string verdict(const OrderScanRow& row) {
    if (!row.identifiable) return "NOT-IDENTIFIABLE";
    if (row.degenerate) return "DEGENERATE";
    return row.consistent ? "CONSISTENT" : "INCONSISTENT";
}

}  // namespace

CovarianceStructure parse_structure(const std::string& s) {
    if (s == "diagonal") return CovarianceStructure::Diagonal;
    if (s == "full") return CovarianceStructure::Full;
    if (s == "scaled-identity") return CovarianceStructure::ScaledIdentity;
    invalid("structure must be diagonal, full or scaled-identity, got '" + s + "'");
}

Names split_names(const std::string& csv) {
    Names out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int exit_code_for(const Error& e) { return e.is_validation() ? kValidation : kNumerical; }

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    const SimulationSpec spec = io::read_spec(o.spec);
    DataSet data = [&] {
        try {
            return simulate(spec);
        } catch (const Error& e) {
            // A singular dependent block is a spec problem, not a numerical one.
            if (e.kind() == ErrorKind::SingularDependentBlock)
                throw Error(ErrorKind::InvalidInput, std::string("independent: ") + e.what());
            throw;
        }
    }();
    io::write_data(o.out, data.variable_names(), data.measurements());
    io::write_data(o.truth, data.variable_names(), *data.truth());
    out << "simulated n=" << data.variables() << " N=" << data.samples() << " seed=" << spec.seed << '\n';
    return kOk;
}

int cmd_reconcile(const ReconcileOptions& o, std::ostream& out) {
    const ConstraintModel model = io::read_model(o.model);
    const fs::path* truth = o.truth ? &*o.truth : nullptr;
    const Names& names = model.variable_names();

    if (o.measured.empty()) {
        const DataSet data = select(io::read_data(o.data, truth), names);
        const NoiseModel noise = io::read_noise(o.noise, names);
        const Matrix x_hat = reconcile_full(model, noise, data);
        io::write_data(o.out, names, x_hat);
        out << "reconciled n=" << data.variables() << " N=" << data.samples() << " m=" << model.constraints() << '\n';
        out << "max constraint residual: " << format_short(max_constraint_residual(model.matrix(), x_hat)) << '\n';
        if (data.truth()) {
            out << "RMSE\n";
            print_rmse(out, names,
                       {{"measured", rmse_report(data.measurements(), *data.truth())},
                        {"reconciled", rmse_report(x_hat, *data.truth())}});
        }
        return kOk;
    }

    const auto mask = mask_from_names(names, o.measured);
    Names measured;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (mask[i]) measured.push_back(names[i]);
    const DataSet all = io::read_data(o.data, truth);
    const DataSet data = select(all, measured);
    const NoiseModel noise = io::read_noise(o.noise, measured);
    const PartialReconciliation r = reconcile_partial(model, noise, data, mask);
    print_classification(out, model, r.classification);

    // Output: measured columns plus observable unmeasured ones, in model order.
    Names out_names;
    std::vector<Vector> rows;
    std::size_t k = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (mask[i]) {
            out_names.push_back(names[i]);
            rows.push_back(r.measured_estimates.row(static_cast<Eigen::Index>(k++)).transpose());
        } else if (const auto& est = r.unmeasured_estimates.at(names[i])) {
            out_names.push_back(names[i]);
            rows.push_back(*est);
        }
    }
    Matrix x_hat(static_cast<Eigen::Index>(rows.size()), data.samples());
    for (std::size_t i = 0; i < rows.size(); ++i) x_hat.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    io::write_data(o.out, out_names, x_hat);
    out << "max constraint residual (reduced model): "
        << format_short(max_constraint_residual(r.classification.reduced_model.matrix(), r.measured_estimates))
        << '\n';

    if (all.truth()) {
        const DataSet full_truth = select(all, names);
        Vector raw = Vector::Constant(static_cast<Eigen::Index>(names.size()), std::nan(""));
        Vector rec = raw;
        const Vector raw_m = rmse_report(data.measurements(), *data.truth());
        const Vector rec_m = rmse_report(r.measured_estimates, *data.truth());
        k = 0;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            if (mask[i]) {
                raw(ii) = raw_m(static_cast<Eigen::Index>(k));
                rec(ii) = rec_m(static_cast<Eigen::Index>(k));
                ++k;
            } else if (const auto& est = r.unmeasured_estimates.at(names[i])) {
                const Vector e = est->transpose() - full_truth.truth()->row(ii);
                rec(ii) = std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
            }
        }
        out << "RMSE (unmeasured: '-' before reconciliation; unobservable: '-' after)\n";
        print_rmse(out, names, {{"measured", raw}, {"reconciled", rec}});
    }
    return kOk;
}

int cmd_identify(const IdentifyOptions& o, std::ostream& out) {
    const fs::path* truth = o.truth ? &*o.truth : nullptr;
    DataSet data = io::read_data(o.data, truth);
    if (!o.variables.empty()) data = select(data, o.variables);
    const Names& names = data.variable_names();
    const int n = data.variables();
    if (o.mode != "pca" && o.mode != "ipca") invalid("mode must be pca or ipca, got '" + o.mode + "'");
    if (o.mode == "pca" && !o.noise) invalid("pca mode requires --noise");
    if (o.mode == "ipca" && !o.order) invalid("ipca mode requires --order");
    if (data.too_few_samples())
        out << "warning: " << data.samples() << " samples for " << n << " variables (at least n recommended)\n";

    std::optional<NoiseModel> noise;
    if (o.mode == "pca") noise = io::read_noise(*o.noise, names);
    IpcaConfig config;
    config.structure = o.structure;
    config.max_iterations = o.max_iterations;
    config.restarts = o.restarts;
    config.seed = o.seed;
    if (o.order) config.assumed_order = *o.order;

    std::optional<IdentificationResult> result;
    std::optional<KnownConstraintResult> known;
    if (o.known) {
        const Matrix a_g = io::read_constraint_rows(*o.known, names);
        known = identify_with_known(data, a_g, noise, o.order, config, o.tolerance);
        result = known->result;
    } else if (noise) {
        result = pca_identify(data, *noise, o.order, o.tolerance);
    } else {
        result = ipca(data, config).result;
    }

    io::write_model(o.out_model, result->model);
    io::write_data(o.out_recon, names, result->x_hat);
    if (o.out_noise) io::write_noise(*o.out_noise, result->noise, names);

    out << "mode: " << o.mode << (known ? " with known constraints" : "") << '\n';
    out << "spectrum: " << join(result->spectrum) << '\n';
    const int m = result->model.constraints();
    if (known) {
        out << "known constraints: " << known->known_rows << ", exact zeros in spectrum: " << known->zero_count << '\n';
        out << "estimated constraints: " << known->estimated_rows << '\n';
    }
    out << "order: " << m << (o.order ? " (assumed)" : " (detected)") << '\n';
    if (o.mode == "ipca") {
        out << "iterations: " << result->iterations << '\n';
        out << "converged: " << (result->converged ? "yes" : "no") << '\n';
        print_sd(out, names, result->noise.standard_deviations());
    }
    out << "estimated constraint matrix\n";
    print_model(out, result->model.matrix(), names);
    out << "max constraint residual: " << format_short(max_constraint_residual(result->model.matrix(), result->x_hat))
        << '\n';
    if (o.truth_model) {
        const ConstraintModel t(io::read_constraint_rows(*o.truth_model, names), names);
        print_quality(out, result->model, t, o.dependent);
    }
    if (data.truth()) {
        out << "RMSE\n";
        print_rmse(out, names,
                   {{"measured", rmse_report(data.measurements(), *data.truth())},
                    {"reconciled", rmse_report(result->x_hat, *data.truth())}});
    }
    return result->converged ? kOk : kNoConvergence;
}

int cmd_scan(const ScanOptions& o, std::ostream& out) {
    const fs::path* truth = o.truth ? &*o.truth : nullptr;
    const DataSet data = io::read_data(o.data, truth);
    const Names& names = data.variable_names();
    const int n = data.variables();
    const int m_min = o.m_min.value_or(std::max(1, smallest_identifiable_order(o.structure, n)));
    const int m_max = o.m_max.value_or(n - 1);
    std::optional<ConstraintModel> truth_model;
    if (o.truth_model) truth_model = ConstraintModel(io::read_constraint_rows(*o.truth_model, names), names);

    IpcaConfig config;
    config.structure = o.structure;
    config.max_iterations = o.max_iterations;
    config.restarts = o.restarts;
    config.seed = o.seed;
    const OrderScanReport report = order_scan(data, config, m_min, m_max, truth_model);

    out << "order scan m = " << m_min << ".." << m_max << '\n';
    out << pad("m_e", 5) << pad("verdict", 18) << pad("converged", 11) << pad("iterations", 12) << "spectrum\n";
    for (const auto& row : report.rows) {
        out << pad(std::to_string(row.order), 5) << pad(verdict(row), 18)
            << pad(row.identifiable && !row.degenerate ? (row.converged ? "yes" : "no") : "-", 11)
            << pad(row.identifiable && !row.degenerate ? std::to_string(row.iterations) : "-", 12)
            << (row.spectrum.size() ? join(row.spectrum) : "-") << '\n';
    }
    std::vector<RmseColumn> sd_cols, rmse_cols;
    for (const auto& row : report.rows) {
        if (!row.identifiable || row.degenerate) continue;
        sd_cols.push_back({"m_e=" + std::to_string(row.order), row.standard_deviations});
        if (row.rmse) rmse_cols.push_back({"m_e=" + std::to_string(row.order), row.rmse});
    }
    if (!sd_cols.empty()) {
        out << "estimated standard deviations\n";
        print_rmse(out, names, sd_cols);
    }
    if (!rmse_cols.empty()) {
        out << "RMSE of reconciled estimates\n";
        print_rmse(out, names, rmse_cols);
    }
    if (truth_model) {
        out << "alpha\n";
        for (const auto& row : report.rows)
            if (row.alpha) out << "  m_e=" << row.order << "  " << format_short(*row.alpha) << '\n';
    }
    if (report.estimated_order && report.violation_found)
        out << "estimated order: " << *report.estimated_order << '\n';
    else if (report.estimated_order)
        out << "estimated order: at least " << *report.estimated_order << " (no inconsistent order in range)\n";
    else
        out << "estimated order: none (first scanned order already inconsistent or degenerate)\n";
    return kOk;
}

int cmd_classify(const ClassifyOptions& o, std::ostream& out) {
    const ConstraintModel model = io::read_model(o.model);
    const auto mask = mask_from_names(model.variable_names(), o.measured);
    print_classification(out, model, project_unmeasured(model, mask));
    return kOk;
}

int cmd_compare(const CompareOptions& o, std::ostream& out) {
    const ConstraintModel truth = io::read_model(o.truth_model);
    const Names& names = truth.variable_names();
    const ConstraintModel estimated(io::read_constraint_rows(o.estimated, names), names);
    print_quality(out, estimated, truth, o.dependent);
    return kOk;
}

int cmd_preset(const PresetOptions& o, std::ostream& out) {
    const nlohmann::json j = io::read_json(o.preset);
    if (!j.is_object() || !j.contains("simulation") || !j.contains("task"))
        invalid(o.preset.string() + ": preset needs 'simulation' and 'task' objects");
    nlohmann::json sim = j.at("simulation");
    sim["spec_version"] = j.value("spec_version", 0);
    const SimulationSpec spec = io::parse_spec(sim);
    const nlohmann::json& task = j.at("task");

    fs::create_directories(o.outdir);
    const fs::path data_path = o.outdir / "data.csv", truth_path = o.outdir / "truth.csv";
    const fs::path model_path = o.outdir / "model.csv", noise_path = o.outdir / "noise.csv";
    const DataSet data = simulate(spec);
    const Names& names = spec.model.variable_names();
    io::write_data(data_path, names, data.measurements());
    io::write_data(truth_path, names, *data.truth());
    io::write_model(model_path, spec.model);
    Vector sd(spec.model.variables());
    for (int i = 0; i < sd.size(); ++i) sd(i) = spec.error_sd.at(names[static_cast<std::size_t>(i)]);
    io::write_noise(noise_path, NoiseModel::from_standard_deviations(sd), names);

    std::ostringstream report;
    report << "preset: " << j.value("name", o.preset.stem().string()) << '\n';
    if (j.contains("description")) report << j.at("description").get<std::string>() << '\n';
    report << "simulated n=" << data.variables() << " N=" << data.samples() << " seed=" << spec.seed << '\n';

    const std::string command = task.value("command", "");
    const auto names_of = [&](const char* key) {
        return task.contains(key) ? task.at(key).get<Names>() : Names{};
    };
    int code = kOk;
    if (command == "reconcile") {
        ReconcileOptions r{data_path, model_path, noise_path, o.outdir / "reconciled.csv", truth_path,
                           names_of("measured")};
        code = cmd_reconcile(r, report);
    } else if (command == "identify") {
        IdentifyOptions r;
        r.data = data_path;
        r.truth = truth_path;
        r.mode = task.value("mode", "pca");
        if (r.mode == "pca") r.noise = noise_path;
        if (task.contains("order")) r.order = task.at("order").get<int>();
        r.structure = parse_structure(task.value("structure", "diagonal"));
        r.dependent = names_of("dependent");
        r.variables = names_of("variables");
        r.out_model = o.outdir / "model_estimated.csv";
        r.out_recon = o.outdir / "reconciled.csv";
        if (r.mode == "ipca") r.out_noise = o.outdir / "noise_estimated.csv";

        // Reference model for the quality metrics: the full truth, or its
        // projection onto the measured variables.
        r.truth_model = model_path;
        if (!r.variables.empty()) {
            const auto c = project_unmeasured(spec.model, mask_from_names(names, r.variables));
            r.truth_model = o.outdir / "model_reduced.csv";
            io::write_model(*r.truth_model, c.reduced_model);
        }
        if (task.contains("known_rows")) {
            const auto rows = task.at("known_rows").get<std::vector<int>>();
            Matrix a_g(static_cast<Eigen::Index>(rows.size()), spec.model.variables());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i] < 0 || rows[i] >= spec.model.constraints()) invalid("task.known_rows: index out of range");
                a_g.row(static_cast<Eigen::Index>(i)) = spec.model.matrix().row(rows[i]);
            }
            r.known = o.outdir / "model_known.csv";
            io::atomic_write(*r.known, io::format_csv(names, a_g));
        }
        code = cmd_identify(r, report);
    } else if (command == "scan") {
        ScanOptions r;
        r.data = data_path;
        r.truth = truth_path;
        r.truth_model = model_path;
        if (task.contains("m_min")) r.m_min = task.at("m_min").get<int>();
        if (task.contains("m_max")) r.m_max = task.at("m_max").get<int>();
        r.structure = parse_structure(task.value("structure", "diagonal"));
        code = cmd_scan(r, report);
    } else {
        invalid("task.command must be reconcile, identify or scan, got '" + command + "'");
    }
    io::atomic_write(o.outdir / "report.txt", report.str());
    out << report.str();
    return code;
}

}  // namespace pcarecon::cli
