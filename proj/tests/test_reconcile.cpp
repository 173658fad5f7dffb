#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pcarecon/diagnostics.hpp"
#include "pcarecon/reconcile.hpp"
#include "pcarecon/simulate.hpp"

using namespace pcarecon;

namespace {

Names names_for(int n) {
    Names out;
    for (int i = 0; i < n; ++i) out.push_back("v" + std::to_string(i));
    return out;
}

}  // namespace

TEST_CASE("two-variable balance averages symmetrically") {
    Matrix a(1, 2);
    a << 1, -1;
    Matrix y(2, 1);
    y << 3, 1;
    const Matrix x = reconcile_matrix(ConstraintModel(a, {"x", "y"}), NoiseModel::scaled_identity(2, 1.0), y);
    CHECK(x(0, 0) == doctest::Approx(2.0));
    CHECK(x(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("consistent data pass through unchanged") {
    const DataSet data = simulate(fixture::flow_spec(2, 50));
    const Matrix x = reconcile_matrix(fixture::flow_model(), fixture::flow_noise(), *data.truth());
    CHECK((x - *data.truth()).cwiseAbs().maxCoeff() <= 1e-10 * data.truth()->cwiseAbs().maxCoeff());
}

TEST_CASE("gain annihilates the constraints and is idempotent") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 4, m = 1 + trial % (n - 1 < 3 ? n - 1 : 3);
        const ConstraintModel model(oracle::random_full_rank(rng, m, n), names_for(n));
        const ReconciliationGain gain(model, NoiseModel::full(oracle::random_spd(rng, n)));
        const Matrix& w = gain.matrix();
        CHECK((model.matrix() * w).norm() <= 1e-9 * model.matrix().norm());
        CHECK((w * w - w).norm() <= 1e-9 * w.norm());
    }
}

TEST_CASE("reconcile_full matches the KKT oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 5;
        const int m = 1 + trial % std::min(3, n - 1);
        const Matrix a = oracle::random_full_rank(rng, m, n);
        const Matrix s = oracle::random_spd(rng, n);
        const Matrix y = oracle::random_matrix(rng, n, 4);
        const Matrix x = reconcile_matrix(ConstraintModel(a, names_for(n)), NoiseModel::full(s), y);
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            const Vector ref = oracle::kkt_reconcile(a, s, y.col(k));
            CHECK((x.col(k) - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
        }
    }
}

TEST_CASE("reconciled estimates are invariant to rotating the constraints") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::random_full_rank(rng, 3, 6);
        const Matrix q = oracle::random_full_rank(rng, 3, 3);
        const NoiseModel noise = NoiseModel::full(oracle::random_spd(rng, 6));
        const Matrix y = oracle::random_matrix(rng, 6, 10);
        const Matrix x1 = reconcile_matrix(ConstraintModel(a, names_for(6)), noise, y);
        const Matrix x2 = reconcile_matrix(ConstraintModel(q * a, names_for(6)), noise, y);
        CHECK((x1 - x2).norm() <= 1e-9 * x1.norm());
    }
}

TEST_CASE("reconciling twice changes nothing") {
    const DataSet data = simulate(fixture::flow_spec(9, 200));
    const Matrix once = reconcile_full(fixture::flow_model(), fixture::flow_noise(), data);
    const Matrix twice = reconcile_matrix(fixture::flow_model(), fixture::flow_noise(), once);
    CHECK((once - twice).norm() <= 1e-9 * once.norm());
}

TEST_CASE("reconcile_full rejects mismatched sizes") {
    const DataSet data(Matrix::Ones(3, 4), {"a", "b", "c"});
    try {
        reconcile_full(fixture::flow_model(), fixture::flow_noise(), data);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("reconciliation improves every flow and is unbiased at scale") {
    const DataSet data = simulate(fixture::flow_spec(fixture::kPresetSeed, 10000));
    const Matrix x = reconcile_full(fixture::flow_model(), fixture::flow_noise(), data);
    const Vector before = rmse_report(data.measurements(), *data.truth());
    const Vector after = rmse_report(x, *data.truth());
    for (int i = 0; i < 6; ++i) CHECK(after(i) < before(i));

    const Matrix err = x - *data.truth();
    const double n = static_cast<double>(err.cols());
    for (int i = 0; i < 6; ++i) {
        const double mean = err.row(i).mean();
        const double se = std::sqrt((err.row(i).array() - mean).square().sum() / (n - 1) / n);
        CHECK(std::abs(mean) <= 3.0 * se);
    }
}

TEST_CASE("estimate covariance is W S W^T and shrinks variances") {
    const ReconciliationGain gain(fixture::flow_model(), fixture::flow_noise());
    const Matrix c = gain.estimate_covariance();
    for (int i = 0; i < 6; ++i) CHECK(c(i, i) < fixture::flow_noise().sigma()(i, i));
}

TEST_CASE("projecting out F3, F4, F6 leaves one balance between F1 and F5") {
    const ConstraintModel model = fixture::flow_model();
    const auto mask = mask_from_names(model.variable_names(), {"F1", "F2", "F5"});
    const ClassificationReport rep = project_unmeasured(model, mask);
    CHECK(rep.measured == Names{"F1", "F2", "F5"});
    CHECK(rep.unmeasured == Names{"F3", "F4", "F6"});
    CHECK(rep.projection_rank == 3);
    REQUIRE(rep.reduced_model.constraints() == 1);
    Vector row = rep.reduced_model.matrix().row(0).transpose();
    row /= row.cwiseAbs().maxCoeff();
    CHECK(std::abs(row(1)) <= 1e-8);
    CHECK(row(0) == doctest::Approx(-row(2)));
    CHECK(rep.measured_redundant.at("F1"));
    CHECK_FALSE(rep.measured_redundant.at("F2"));
    CHECK(rep.measured_redundant.at("F5"));
    for (const char* v : {"F3", "F4", "F6"}) CHECK(rep.unmeasured_observable.at(v));
    CHECK((rep.projection * model.matrix()(Eigen::all, std::vector<int>{2, 3, 5})).norm() <= 1e-12);
}

TEST_CASE("graph classification agrees with the algebraic one") {
    const ConstraintModel model = fixture::flow_model();
    for (const Names& measured : std::vector<Names>{{"F1", "F2", "F5"},
                                                    {"F1", "F3", "F4"},
                                                    {"F2", "F6"},
                                                    {"F1", "F2", "F3", "F4", "F5", "F6"},
                                                    {"F4"}}) {
        const auto mask = mask_from_names(model.variable_names(), measured);
        const ClassificationReport rep = project_unmeasured(model, mask);
        const auto graph = classify_flow_network(model, mask);
        REQUIRE(graph.has_value());
        CHECK(graph->measured_redundant == rep.measured_redundant);
        CHECK(graph->unmeasured_observable == rep.unmeasured_observable);
        CHECK(graph->reduced_constraints == rep.reduced_model.constraints());
    }
}

TEST_CASE("graph classification declines non-flow models") {
    Matrix a(1, 3);
    a << 2, -1, 0.5;
    CHECK_FALSE(classify_flow_network(ConstraintModel(a, {"a", "b", "c"}), {true, false, true}).has_value());
}

TEST_CASE("all measured: reduced model spans the original and all are redundant") {
    const ConstraintModel model = fixture::flow_model();
    const ClassificationReport rep = project_unmeasured(model, std::vector<bool>(6, true));
    CHECK(rep.reduced_model.constraints() == 4);
    CHECK(oracle::max_principal_sine(rep.reduced_model.matrix(), model.matrix()) <= 1e-9);
    for (const auto& [name, redundant] : rep.measured_redundant) CHECK(redundant);
}

TEST_CASE("a variable outside every constraint is non-redundant") {
    Matrix a(1, 3);
    a << 1, -1, 0;
    const ClassificationReport rep = project_unmeasured(ConstraintModel(a, {"a", "b", "c"}), {true, true, true});
    CHECK(rep.measured_redundant.at("a"));
    CHECK_FALSE(rep.measured_redundant.at("c"));
}

TEST_CASE("unobservable unmeasured variables are marked") {
    const ConstraintModel model = fixture::flow_model();
    const auto mask = mask_from_names(model.variable_names(), {"F1", "F2"});
    const ClassificationReport rep = project_unmeasured(model, mask);
    // F3 = F1 + F2 and F4 = F3 follow; F5 and F6 split F4 with F6 = F2.
    CHECK(rep.unmeasured_observable.at("F3"));
    CHECK(rep.unmeasured_observable.at("F6"));

    const auto mask2 = mask_from_names(model.variable_names(), {"F1"});
    const ClassificationReport rep2 = project_unmeasured(model, mask2);
    CHECK_FALSE(rep2.unmeasured_observable.at("F2"));
    const DataSet data = simulate(fixture::flow_spec(4, 20)).subset(mask2);
    const PartialReconciliation pr = reconcile_partial(model, fixture::flow_noise().subset(mask2), data, mask2);
    CHECK_FALSE(pr.unmeasured_estimates.at("F2").has_value());
}

TEST_CASE("partial reconciliation with everything measured equals full reconciliation") {
    const DataSet data = simulate(fixture::flow_spec(6, 100));
    const std::vector<bool> all(6, true);
    const PartialReconciliation pr = reconcile_partial(fixture::flow_model(), fixture::flow_noise(), data, all);
    const Matrix full = reconcile_full(fixture::flow_model(), fixture::flow_noise(), data);
    CHECK((pr.measured_estimates - full).norm() <= 1e-9 * full.norm());
    CHECK(pr.unmeasured_estimates.empty());
}

TEST_CASE("partial reconciliation of consistent data solves the unmeasured exactly") {
    const ConstraintModel model = fixture::flow_model();
    const auto mask = mask_from_names(model.variable_names(), {"F1", "F2", "F5"});
    const DataSet full = simulate(fixture::flow_spec(8, 30));
    const DataSet exact = DataSet(*full.truth(), fixture::kFlows).subset(mask);
    const PartialReconciliation pr = reconcile_partial(model, fixture::flow_noise().subset(mask), exact, mask);
    CHECK((pr.measured_estimates - exact.measurements()).norm() <= 1e-9 * exact.measurements().norm());

    // Oracle: least squares A_u x_u = -A_k x_k per sample.
    const Matrix a_u = model.matrix()(Eigen::all, std::vector<int>{2, 3, 5});
    const Matrix a_k = model.matrix()(Eigen::all, std::vector<int>{0, 1, 4});
    const std::vector<std::pair<std::string, int>> unmeasured{{"F3", 0}, {"F4", 1}, {"F6", 2}};
    for (Eigen::Index k = 0; k < exact.samples(); ++k) {
        const Vector xu = oracle::least_squares(a_u, -a_k * exact.measurements().col(k));
        for (const auto& [name, i] : unmeasured) {
            const auto& est = pr.unmeasured_estimates.at(name);
            REQUIRE(est.has_value());
            CHECK((*est)(k) == doctest::Approx(xu(i)).epsilon(1e-9));
        }
    }
}

TEST_CASE("empty reduced model leaves measurements unchanged") {
    const ConstraintModel model = fixture::flow_model();
    const auto mask = mask_from_names(model.variable_names(), {"F1", "F2"});
    const DataSet data = simulate(fixture::flow_spec(10, 40)).subset(mask);
    const PartialReconciliation pr = reconcile_partial(model, fixture::flow_noise().subset(mask), data, mask);
    CHECK(pr.classification.reduced_model.constraints() == 0);
    CHECK(pr.measured_estimates == data.measurements());
}

TEST_CASE("partial reconciliation improves the redundant flows only") {
    const ConstraintModel model = fixture::flow_model();
    const auto mask = mask_from_names(model.variable_names(), {"F1", "F2", "F5"});
    const DataSet full = simulate(fixture::flow_spec(fixture::kPresetSeed));
    const DataSet measured = full.subset(mask);
    const PartialReconciliation pr = reconcile_partial(model, fixture::flow_noise().subset(mask), measured, mask);
    const Vector before = rmse_report(measured.measurements(), *measured.truth());
    const Vector after = rmse_report(pr.measured_estimates, *measured.truth());
    CHECK(after(0) < before(0));
    CHECK(after(1) == doctest::Approx(before(1)).epsilon(0.005));
    CHECK(after(2) < before(2));
}

TEST_CASE("mask_from_names rejects unknown names") {
    CHECK_THROWS_AS(mask_from_names(fixture::kFlows, {"F9"}), Error);
}
