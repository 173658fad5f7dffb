// pcarecon: simulate flow-network data, reconcile it against known models,
// identify models with PCA/IPCA and scan model orders.
//
// Exit codes: 0 success, 2 input validation, 3 numerical failure,
// 4 IPCA non-convergence (outputs are still written).

#include <iostream>

#include "CLI11.hpp"
#include "cli_commands.hpp"

using namespace pcarecon;
using namespace pcarecon::cli;

int main(int argc, char** argv) {
    CLI::App app{"Linear process model identification and data reconciliation"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate flow-network data from a JSON spec");
    c_sim->add_option("--spec", sim.spec, "Simulation spec (JSON)")->required()->check(CLI::ExistingFile);
    c_sim->add_option("--out", sim.out, "Measurement CSV to write")->required();
    c_sim->add_option("--truth", sim.truth, "True-value CSV to write")->required();

    ReconcileOptions rec;
    std::string rec_measured;
    std::string rec_truth;
    auto* c_rec = app.add_subcommand("reconcile", "Reconcile measurements against a known model");
    c_rec->add_option("--data", rec.data, "Measurement CSV")->required()->check(CLI::ExistingFile);
    c_rec->add_option("--model", rec.model, "Constraint model CSV")->required()->check(CLI::ExistingFile);
    c_rec->add_option("--noise", rec.noise, "Noise CSV (variable,sd or full matrix)")->required()->check(CLI::ExistingFile);
    c_rec->add_option("--measured", rec_measured, "Comma-separated measured variables (default: all)");
    c_rec->add_option("--truth", rec_truth, "True-value CSV for RMSE")->check(CLI::ExistingFile);
    c_rec->add_option("--out", rec.out, "Reconciled CSV to write")->required();

    IdentifyOptions idf;
    std::string idf_noise, idf_known, idf_truth_model, idf_truth, idf_out_noise, idf_structure = "diagonal";
    std::string idf_dependent, idf_variables;
    int idf_order = 0;
    auto* c_idf = app.add_subcommand("identify", "Identify a constraint model with PCA or IPCA");
    c_idf->add_option("--data", idf.data, "Measurement CSV")->required()->check(CLI::ExistingFile);
    c_idf->add_option("--mode", idf.mode, "pca (known noise) or ipca")->check(CLI::IsMember({"pca", "ipca"}));
    c_idf->add_option("--noise", idf_noise, "Known noise CSV (pca mode)")->check(CLI::ExistingFile);
    c_idf->add_option("--known", idf_known, "Known constraint rows CSV")->check(CLI::ExistingFile);
    auto* o_order = c_idf->add_option("--order", idf_order, "Total number of constraints");
    c_idf->add_option("--structure", idf_structure, "diagonal, full or scaled-identity (ipca)");
    c_idf->add_option("--out-model", idf.out_model, "Estimated model CSV to write")->required();
    c_idf->add_option("--out-recon", idf.out_recon, "Reconciled CSV to write")->required();
    c_idf->add_option("--out-noise", idf_out_noise, "Estimated noise CSV to write");
    c_idf->add_option("--truth-model", idf_truth_model, "True model CSV for quality metrics")
        ->check(CLI::ExistingFile);
    c_idf->add_option("--dependent", idf_dependent, "Dependent variables for the regression comparison");
    c_idf->add_option("--truth", idf_truth, "True-value CSV for RMSE")->check(CLI::ExistingFile);
    c_idf->add_option("--variables", idf_variables, "Use only these data columns");
    c_idf->add_option("--tolerance", idf.tolerance, "Unity tolerance for order detection");
    c_idf->add_option("--max-iterations", idf.max_iterations, "IPCA outer iteration limit");
    c_idf->add_option("--restarts", idf.restarts, "IPCA starts (first from identity)")->check(CLI::PositiveNumber);
    c_idf->add_option("--seed", idf.seed, "Seed for the perturbed IPCA starts");

    ScanOptions scan;
    std::string scan_truth, scan_truth_model, scan_structure = "diagonal";
    int scan_min = 0, scan_max = 0;
    auto* c_scan = app.add_subcommand("scan", "Run IPCA over a range of model orders");
    c_scan->add_option("--data", scan.data, "Measurement CSV")->required()->check(CLI::ExistingFile);
    auto* o_min = c_scan->add_option("--m-min", scan_min, "Smallest order (default: smallest identifiable)");
    auto* o_max = c_scan->add_option("--m-max", scan_max, "Largest order (default: n-1)");
    c_scan->add_option("--truth", scan_truth, "True-value CSV for RMSE")->check(CLI::ExistingFile);
    c_scan->add_option("--truth-model", scan_truth_model, "True model CSV for alpha")->check(CLI::ExistingFile);
    c_scan->add_option("--structure", scan_structure, "diagonal, full or scaled-identity");
    c_scan->add_option("--max-iterations", scan.max_iterations, "IPCA outer iteration limit");
    c_scan->add_option("--restarts", scan.restarts, "IPCA starts per order (first from identity)")
        ->check(CLI::PositiveNumber);
    c_scan->add_option("--seed", scan.seed, "Seed for the perturbed IPCA starts");

    ClassifyOptions cls;
    std::string cls_measured;
    auto* c_cls = app.add_subcommand("classify", "Redundancy and observability of a partially measured model");
    c_cls->add_option("--model", cls.model, "Constraint model CSV")->required()->check(CLI::ExistingFile);
    c_cls->add_option("--measured", cls_measured, "Comma-separated measured variables")->required();

    CompareOptions cmp;
    std::string cmp_dependent;
    auto* c_cmp = app.add_subcommand("compare", "Quality metrics of an estimated model against the truth");
    c_cmp->add_option("--estimated", cmp.estimated, "Estimated model CSV")->required()->check(CLI::ExistingFile);
    c_cmp->add_option("--truth-model", cmp.truth_model, "True model CSV")->required()->check(CLI::ExistingFile);
    c_cmp->add_option("--dependent", cmp_dependent, "Dependent variables for the regression comparison");

    PresetOptions pre;
    auto* c_pre = app.add_subcommand("preset", "Simulate and run a bundled example");
    c_pre->add_option("preset", pre.preset, "Preset JSON")->required()->check(CLI::ExistingFile);
    c_pre->add_option("--outdir", pre.outdir, "Directory for all outputs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(sim, std::cout);
        if (c_rec->parsed()) {
            rec.measured = split_names(rec_measured);
            if (!rec_truth.empty()) rec.truth = rec_truth;
            return cmd_reconcile(rec, std::cout);
        }
        if (c_idf->parsed()) {
            if (!idf_noise.empty()) idf.noise = idf_noise;
            if (!idf_known.empty()) idf.known = idf_known;
            if (!idf_truth_model.empty()) idf.truth_model = idf_truth_model;
            if (!idf_truth.empty()) idf.truth = idf_truth;
            if (!idf_out_noise.empty()) idf.out_noise = idf_out_noise;
            if (o_order->count()) idf.order = idf_order;
            idf.structure = parse_structure(idf_structure);
            idf.dependent = split_names(idf_dependent);
            idf.variables = split_names(idf_variables);
            return cmd_identify(idf, std::cout);
        }
        if (c_scan->parsed()) {
            if (!scan_truth.empty()) scan.truth = scan_truth;
            if (!scan_truth_model.empty()) scan.truth_model = scan_truth_model;
            if (o_min->count()) scan.m_min = scan_min;
            if (o_max->count()) scan.m_max = scan_max;
            scan.structure = parse_structure(scan_structure);
            return cmd_scan(scan, std::cout);
        }
        if (c_cls->parsed()) {
            cls.measured = split_names(cls_measured);
            return cmd_classify(cls, std::cout);
        }
        if (c_cmp->parsed()) {
            cmp.dependent = split_names(cmp_dependent);
            return cmd_compare(cmp, std::cout);
        }
        if (c_pre->parsed()) return cmd_preset(pre, std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}
