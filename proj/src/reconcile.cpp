#include "pcarecon/reconcile.hpp"

#include <numeric>

#include "pcarecon/kernels.hpp"
#include "pcarecon/linalg.hpp"

namespace pcarecon {

namespace {

// Non-redundant detection: column infinity norm relative to matrix infinity norm.
constexpr double kZeroColumnTolerance = 1e-8;

std::vector<Eigen::Index> indices_where(const std::vector<bool>& mask, bool value) {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] == value) out.push_back(static_cast<Eigen::Index>(i));
    return out;
}

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[static_cast<std::size_t>(a)] = b;
        return true;
    }
};

}  // namespace

ReconciliationGain::ReconciliationGain(const ConstraintModel& model, const NoiseModel& noise)
    : sigma_(noise.sigma()) {
    const int n = model.variables();
    if (noise.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "noise size " + std::to_string(noise.size()) +
                                                      " differs from model variable count " + std::to_string(n));
    const Matrix& a = model.matrix();
    if (a.rows() == 0) {
        w_ = Matrix::Identity(n, n);
        return;
    }
    const Matrix sa = sigma_ * a.transpose();
    const Matrix inner = a * sa;
    w_ = Matrix::Identity(n, n) - sa * linalg::spd_solve(inner, a);
}

Matrix reconcile_matrix(const ConstraintModel& model, const NoiseModel& noise, const Matrix& y) {
    if (y.rows() != model.variables())
        throw Error(ErrorKind::DimensionMismatch, "data rows differ from model variable count");
    ReconciliationGain gain(model, noise);
    return kernels::multiply_columns(gain.matrix(), y);
}

Matrix reconcile_full(const ConstraintModel& model, const NoiseModel& noise, const DataSet& data) {
    return reconcile_matrix(model, noise, data.measurements());
}

std::vector<bool> mask_from_names(const Names& all, const Names& measured) {
    std::vector<bool> mask(all.size(), false);
    for (const auto& name : measured) {
        bool found = false;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (all[i] == name) {
                mask[i] = true;
                found = true;
            }
        }
        if (!found) throw Error(ErrorKind::InvalidInput, "unknown measured variable '" + name + "'");
    }
    return mask;
}

ClassificationReport project_unmeasured(const ConstraintModel& model, const std::vector<bool>& measured_mask) {
    const int n = model.variables();
    if (static_cast<int>(measured_mask.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "mask length differs from variable count");
    const auto k_idx = indices_where(measured_mask, true);
    const auto u_idx = indices_where(measured_mask, false);
    if (k_idx.empty()) throw Error(ErrorKind::InvalidInput, "at least one variable must be measured");

    const Matrix& a = model.matrix();
    const Matrix a_k = a(Eigen::all, k_idx);
    const Matrix a_u = a(Eigen::all, u_idx);

    Names measured, unmeasured;
    for (auto i : k_idx) measured.push_back(model.variable_names()[static_cast<std::size_t>(i)]);
    for (auto i : u_idx) unmeasured.push_back(model.variable_names()[static_cast<std::size_t>(i)]);

    const int t = a_u.cols() > 0 ? linalg::numerical_rank(a_u) : 0;
    Matrix p = a.rows() > 0 ? linalg::left_null_space(a_u) : Matrix(0, 0);
    Matrix reduced = p.rows() > 0 ? Matrix(p * a_k) : Matrix(0, a_k.cols());

    ClassificationReport report{measured, unmeasured, {}, {},
                                ConstraintModel(reduced, measured, model.provenance()), t, p};

    const double norm_inf = reduced.rows() > 0 ? reduced.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
    for (std::size_t j = 0; j < measured.size(); ++j) {
        bool redundant = false;
        if (reduced.rows() > 0 && norm_inf > 0.0) {
            const double col = reduced.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff();
            redundant = col > kZeroColumnTolerance * norm_inf;
        }
        report.measured_redundant[measured[j]] = redundant;
    }
    for (std::size_t j = 0; j < unmeasured.size(); ++j) {
        // x_u(j) is unique iff dropping its column lowers rank(A_u).
        std::vector<Eigen::Index> rest;
        for (Eigen::Index c = 0; c < a_u.cols(); ++c)
            if (c != static_cast<Eigen::Index>(j)) rest.push_back(c);
        const int r_rest = rest.empty() ? 0 : linalg::numerical_rank(a_u(Eigen::all, rest));
        report.unmeasured_observable[unmeasured[j]] = t > r_rest;
    }
    return report;
}

std::optional<GraphClassification> classify_flow_network(const ConstraintModel& model,
                                                         const std::vector<bool>& measured_mask) {
    const int m = model.constraints();
    const int n = model.variables();
    if (static_cast<int>(measured_mask.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "mask length differs from variable count");
    const int env = m;
    std::vector<std::pair<int, int>> ends(static_cast<std::size_t>(n));
    const Matrix& a = model.matrix();
    for (int j = 0; j < n; ++j) {
        int plus = -1, minus = -1;
        for (int i = 0; i < m; ++i) {
            const double v = a(i, j);
            if (v == 0.0) continue;
            if (v == 1.0 && plus < 0) plus = i;
            else if (v == -1.0 && minus < 0) minus = i;
            else return std::nullopt;
        }
        ends[static_cast<std::size_t>(j)] = {plus < 0 ? env : plus, minus < 0 ? env : minus};
    }

    GraphClassification out;
    const auto& names = model.variable_names();

    // Merge nodes joined by unmeasured streams.
    DisjointSet merged(m + 1);
    for (int j = 0; j < n; ++j)
        if (!measured_mask[static_cast<std::size_t>(j)])
            merged.unite(ends[static_cast<std::size_t>(j)].first, ends[static_cast<std::size_t>(j)].second);

    // Measured streams collapsed into a self-loop drop out of the reduced graph.
    std::vector<int> groups;
    for (int v = 0; v <= m; ++v)
        if (merged.find(v) == v) groups.push_back(v);
    DisjointSet reduced(m + 1);
    int components = static_cast<int>(groups.size());
    for (int j = 0; j < n; ++j) {
        if (!measured_mask[static_cast<std::size_t>(j)]) continue;
        const int a_end = merged.find(ends[static_cast<std::size_t>(j)].first);
        const int b_end = merged.find(ends[static_cast<std::size_t>(j)].second);
        out.measured_redundant[names[static_cast<std::size_t>(j)]] = a_end != b_end;
        if (reduced.unite(a_end, b_end)) --components;
    }
    out.reduced_constraints = static_cast<int>(groups.size()) - components;

    // An unmeasured stream is observable unless it lies on a cycle of unmeasured streams.
    for (int j = 0; j < n; ++j) {
        if (measured_mask[static_cast<std::size_t>(j)]) continue;
        DisjointSet others(m + 1);
        for (int k = 0; k < n; ++k)
            if (k != j && !measured_mask[static_cast<std::size_t>(k)])
                others.unite(ends[static_cast<std::size_t>(k)].first, ends[static_cast<std::size_t>(k)].second);
        const bool on_cycle = others.find(ends[static_cast<std::size_t>(j)].first) ==
                              others.find(ends[static_cast<std::size_t>(j)].second);
        out.unmeasured_observable[names[static_cast<std::size_t>(j)]] = !on_cycle;
    }
    return out;
}

PartialReconciliation reconcile_partial(const ConstraintModel& model, const NoiseModel& noise_measured,
                                        const DataSet& data_measured, const std::vector<bool>& measured_mask) {
    ClassificationReport report = project_unmeasured(model, measured_mask);
    const int n_k = static_cast<int>(report.measured.size());
    if (noise_measured.size() != n_k)
        throw Error(ErrorKind::DimensionMismatch, "noise size differs from measured variable count");
    if (data_measured.variables() != n_k)
        throw Error(ErrorKind::DimensionMismatch, "data rows differ from measured variable count");
    if (data_measured.variable_names() != report.measured)
        throw Error(ErrorKind::InvalidInput, "data variables do not match the measured variables in model order");

    PartialReconciliation out{report, {}, {}};
    out.measured_estimates = reconcile_matrix(report.reduced_model, noise_measured, data_measured.measurements());

    if (report.unmeasured.empty()) return out;
    const auto k_idx = indices_where(measured_mask, true);
    const auto u_idx = indices_where(measured_mask, false);
    const Matrix a_k = model.matrix()(Eigen::all, k_idx);
    const Matrix a_u = model.matrix()(Eigen::all, u_idx);

    Matrix x_u;
    if (a_u.rows() > 0) {
        const Matrix rhs = -kernels::multiply_columns(a_k, out.measured_estimates);
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a_u);
        cod.setThreshold(kRankTolerance);
        x_u = cod.solve(rhs);
    }
    for (std::size_t j = 0; j < report.unmeasured.size(); ++j) {
        const auto& name = report.unmeasured[j];
        if (report.unmeasured_observable.at(name))
            out.unmeasured_estimates[name] = Vector(x_u.row(static_cast<Eigen::Index>(j)).transpose());
        else
            out.unmeasured_estimates[name] = std::nullopt;
    }
    return out;
}

}  // namespace pcarecon
