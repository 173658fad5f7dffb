#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pcarecon/diagnostics.hpp"
#include "pcarecon/identify_ipca.hpp"
#include "pcarecon/kernels.hpp"
#include "pcarecon/simulate.hpp"

using namespace pcarecon;

namespace {

const DataSet& preset_data() {
    static const DataSet data = simulate(fixture::flow_spec(fixture::kPresetSeed));
    return data;
}

IpcaConfig order(int m) {
    IpcaConfig c;
    c.assumed_order = m;
    return c;
}

Matrix orthonormal_rows(const Matrix& a) {
    return (a.transpose().householderQr().householderQ() * Matrix::Identity(a.cols(), a.rows())).transpose();
}

}  // namespace

TEST_CASE("IPCA recovers the error SDs at the true order") {
    const IpcaResult r = ipca(preset_data(), order(4));
    CHECK(r.result.converged);
    CHECK(r.result.iterations <= 100);
    const Vector ratio = r.result.noise.standard_deviations().cwiseQuotient(fixture::flow_error_sd());
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ratio(i) - 1.0) <= 0.15);
    for (int i = 2; i < 6; ++i) CHECK(std::abs(r.result.spectrum(i) - 1.0) <= 0.1);
    CHECK(alpha_metric(r.result.model, fixture::flow_model()) <= 0.1);
    CHECK(max_constraint_residual(r.result.model.matrix(), r.result.x_hat) <= 1e-8);
    CHECK(r.result.model.provenance() == Provenance::IPCAEstimated);
}

TEST_CASE("scaled-identity IPCA matches the closed-form variance") {
    // Unit errors everywhere. With S = s I the PCA step does not depend on s,
    // and the MLE is the mean of the trailing eigenvalues of Y Y^T / N.
    SimulationSpec spec = fixture::flow_spec(77, 2000);
    spec.fluctuation_sd = {{"F1", 10.0}, {"F2", 20.0}};
    for (auto& [name, sd] : spec.error_sd) sd = 1.0;
    const DataSet data = simulate(spec);
    IpcaConfig c = order(4);
    c.structure = CovarianceStructure::ScaledIdentity;
    const IpcaResult r = ipca(data, c);
    CHECK(r.result.converged);
    CHECK(r.result.iterations <= 3);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(kernels::second_moment(data.measurements()));
    const double closed = eig.eigenvalues().head(4).mean();  // ascending order
    CHECK(r.result.noise.sigma()(0, 0) == doctest::Approx(closed).epsilon(1e-4));
    CHECK(std::abs(r.result.noise.sigma()(0, 0) - 1.0) <= 0.1);
}

TEST_CASE("true covariance is a fixed point of one outer iteration") {
    const DataSet data = simulate(fixture::flow_spec(1234, 10000));
    const ScaledPca pca = scaled_pca(data.measurements(), fixture::flow_noise(), 4);
    CHECK(alpha_metric(pca.a_hat, fixture::flow_matrix()) <= 0.05);
    const CovarianceFit fit = fit_covariance(orthonormal_rows(pca.a_hat), kernels::second_moment(data.measurements()),
                                             data.samples(), CovarianceStructure::Diagonal, fixture::flow_noise());
    const Vector ratio = fit.noise.standard_deviations().cwiseQuotient(fixture::flow_error_sd());
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ratio(i) - 1.0) <= 0.05);

    IpcaConfig c = order(4);
    c.initial_noise = fixture::flow_noise();
    c.restarts = 1;
    const IpcaResult r = ipca(data, c);
    CHECK(r.result.converged);
    CHECK(r.trace.records.front().sigma.isApprox(fixture::flow_noise().sigma()));
}

TEST_CASE("the covariance update never increases the objective") {
    for (int m : {3, 4, 5}) {
        IpcaConfig c = order(m);
        c.restarts = 1;
        const IpcaResult r = ipca(preset_data(), c);
        REQUIRE_FALSE(r.trace.records.empty());
        for (const TraceRecord& rec : r.trace.records)
            CHECK(rec.objective <= rec.objective_before + 1e-6 * std::abs(rec.objective_before));
    }
}

TEST_CASE("scaling a variable scales its estimated SD") {
    const DataSet& data = preset_data();
    Matrix y = data.measurements();
    Matrix x = *data.truth();
    const double c = 10.0;
    y.row(3) *= c;
    x.row(3) *= c;
    const DataSet scaled(y, data.variable_names(), x);
    const IpcaResult a = ipca(data, order(4));
    const IpcaResult b = ipca(scaled, order(4));
    const Vector sa = a.result.noise.standard_deviations(), sb = b.result.noise.standard_deviations();
    for (int i = 0; i < 6; ++i) CHECK(sb(i) == doctest::Approx(sa(i) * (i == 3 ? c : 1.0)).epsilon(1e-3));
    CHECK((a.result.spectrum.tail(4) - b.result.spectrum.tail(4)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("overfitting breaks the unity pattern") {
    const IpcaResult r = ipca(preset_data(), order(5));
    const Vector tail = r.result.spectrum.tail(5);
    CHECK((tail.array() - 1.0).abs().maxCoeff() > 0.1);
    CHECK(tail(0) > 1.5);
    CHECK(tail.tail(3).maxCoeff() < 0.5);
}

TEST_CASE("non-convergence returns the partial result") {
    IpcaConfig c = order(5);
    c.max_iterations = 2;
    c.restarts = 1;
    const IpcaResult r = ipca(preset_data(), c);
    CHECK_FALSE(r.result.converged);
    CHECK(r.result.iterations == 2);
    CHECK(r.trace.records.size() == 2);
    CHECK(r.result.x_hat.cols() == preset_data().samples());
}

TEST_CASE("IPCA input errors") {
    auto kind_of = [](const IpcaConfig& c, const DataSet& d) {
        try {
            ipca(d, c);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidInput;
    };
    CHECK(kind_of(order(2), preset_data()) == ErrorKind::NotIdentifiable);
    CHECK(kind_of(order(6), preset_data()) == ErrorKind::OrderOutOfRange);
    IpcaConfig full = order(4);
    full.structure = CovarianceStructure::Full;
    CHECK(kind_of(full, preset_data()) == ErrorKind::NotIdentifiable);
    const DataSet exact(*preset_data().truth(), fixture::kFlows);
    CHECK(kind_of(order(4), exact) == ErrorKind::OptimizerDiverged);
}

TEST_CASE("multi-start is deterministic and starts from the identity") {
    IpcaConfig c = order(3);
    c.seed = 5;
    const auto starts = ipca_starts(c, 6);
    REQUIRE(starts.size() == static_cast<std::size_t>(c.restarts));
    CHECK(starts[0].sigma().isIdentity());
    CHECK_FALSE(starts[1].sigma().isIdentity());

    const IpcaResult a = ipca(preset_data(), c);
    const IpcaResult b = ipca(preset_data(), c);
    CHECK(a.selected_start == b.selected_start);
    CHECK(a.result.noise.sigma() == b.result.noise.sigma());
    CHECK(a.result.x_hat == b.result.x_hat);
    REQUIRE(a.start_objectives.size() == starts.size());
    REQUIRE(a.start_converged.size() == starts.size());
    // A converged run is preferred; among those the lowest objective wins.
    const double best = a.start_objectives[static_cast<std::size_t>(a.selected_start)];
    CHECK(a.start_converged[static_cast<std::size_t>(a.selected_start)] == a.result.converged);
    for (std::size_t s = 0; s < a.start_objectives.size(); ++s)
        if (a.start_converged[s] == a.result.converged && !std::isnan(a.start_objectives[s]))
            CHECK(best <= a.start_objectives[s]);

    c.restarts = 1;
    CHECK(ipca(preset_data(), c).selected_start == 0);
}

TEST_CASE("order scan on the flow network") {
    const OrderScanReport rep = order_scan(preset_data(), IpcaConfig{}, 3, 5, fixture::flow_model());
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].consistent);
    CHECK(rep.rows[1].consistent);
    CHECK_FALSE(rep.rows[2].consistent);
    CHECK(rep.violation_found);
    REQUIRE(rep.estimated_order.has_value());
    CHECK(*rep.estimated_order == 4);
    CHECK(*rep.rows[2].alpha > 5 * *rep.rows[1].alpha);
    CHECK(rep.rows[1].rmse.has_value());
}

TEST_CASE("order scan marks unidentifiable and degenerate rows") {
    const OrderScanReport rep = order_scan(preset_data(), IpcaConfig{}, 1, 3);
    CHECK_FALSE(rep.rows[0].identifiable);
    CHECK_FALSE(rep.rows[1].identifiable);
    CHECK(rep.rows[2].identifiable);
    CHECK_FALSE(rep.violation_found);

    const DataSet exact(*preset_data().truth(), fixture::kFlows);
    const OrderScanReport deg = order_scan(exact, IpcaConfig{}, 3, 5);
    for (const auto& row : deg.rows) CHECK(row.degenerate);
    CHECK_FALSE(deg.estimated_order.has_value());

    CHECK_THROWS_AS(order_scan(preset_data(), IpcaConfig{}, 4, 3), Error);
    CHECK_THROWS_AS(order_scan(preset_data(), IpcaConfig{}, 1, 6), Error);
    CHECK(smallest_identifiable_order(CovarianceStructure::Diagonal, 6) == 3);
    CHECK(smallest_identifiable_order(CovarianceStructure::Full, 6) == 0);
}
