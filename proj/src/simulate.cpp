#include "pcarecon/simulate.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "pcarecon/diagnostics.hpp"

namespace pcarecon {

double GaussianStream::uniform() {
    // 53 random bits mapped to (0, 1); zero excluded for the logarithm.
    std::uint64_t bits;
    do {
        bits = engine_() >> 11;
    } while (bits == 0);
    return static_cast<double>(bits) * 0x1.0p-53;
}

double GaussianStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

std::vector<std::string> validate_spec(const SimulationSpec& spec) {
    std::vector<std::string> out;
    const Names& names = spec.model.variable_names();
    const std::set<std::string> known(names.begin(), names.end());
    const int expected = spec.model.variables() - spec.model.constraints();
    if (static_cast<int>(spec.independent.size()) != expected)
        out.push_back("independent: expected " + std::to_string(expected) + " names, got " +
                      std::to_string(spec.independent.size()));
    std::set<std::string> seen;
    for (const auto& v : spec.independent) {
        if (!known.count(v)) out.push_back("independent: unknown variable '" + v + "'");
        if (!seen.insert(v).second) out.push_back("independent: duplicate variable '" + v + "'");
        if (!spec.base_values.count(v)) out.push_back("base_values." + v + ": missing");
        if (!spec.fluctuation_sd.count(v)) out.push_back("fluctuation_sd." + v + ": missing");
    }
    auto check_map = [&](const std::map<std::string, double>& m, const std::string& field, bool sd) {
        for (const auto& [k, v] : m) {
            if (!known.count(k)) out.push_back(field + ": unknown variable '" + k + "'");
            if (!std::isfinite(v)) out.push_back(field + "." + k + ": not finite");
            else if (sd && v < 0.0) out.push_back(field + "." + k + ": negative standard deviation");
        }
    };
    check_map(spec.base_values, "base_values", false);
    check_map(spec.fluctuation_sd, "fluctuation_sd", true);
    check_map(spec.error_sd, "error_sd", true);
    for (const auto& v : names)
        if (!spec.error_sd.count(v)) out.push_back("error_sd." + v + ": missing");
    if (spec.samples < 1) out.push_back("samples: must be at least 1");
    return out;
}

DataSet simulate(const SimulationSpec& spec) {
    const auto problems = validate_spec(spec);
    if (!problems.empty()) {
        std::string msg = "invalid simulation spec:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(ErrorKind::InvalidInput, msg);
    }
    const ConstraintModel& model = spec.model;
    const int n = model.variables();
    const int n_i = static_cast<int>(spec.independent.size());

    Names dependent;
    for (const auto& v : model.variable_names())
        if (std::find(spec.independent.begin(), spec.independent.end(), v) == spec.independent.end())
            dependent.push_back(v);
    const Matrix r = regression_matrix(model, dependent);

    std::vector<int> ind_idx, dep_idx;
    for (const auto& v : spec.independent) ind_idx.push_back(model.index_of(v));
    for (const auto& v : dependent) dep_idx.push_back(model.index_of(v));
    // R's columns follow the independent variables in model order.
    std::vector<int> ind_sorted = ind_idx;
    std::sort(ind_sorted.begin(), ind_sorted.end());

    Vector base(n_i), sdf(n_i), sde(n);
    for (int k = 0; k < n_i; ++k) {
        base(k) = spec.base_values.at(spec.independent[static_cast<std::size_t>(k)]);
        sdf(k) = spec.fluctuation_sd.at(spec.independent[static_cast<std::size_t>(k)]);
    }
    for (int j = 0; j < n; ++j) sde(j) = spec.error_sd.at(model.variable_names()[static_cast<std::size_t>(j)]);

    Matrix x(n, spec.samples), y(n, spec.samples);
    GaussianStream rng(spec.seed);
    Vector x_i(n_i);
    for (int s = 0; s < spec.samples; ++s) {
        for (int k = 0; k < n_i; ++k) x.col(s)(ind_idx[static_cast<std::size_t>(k)]) = base(k) + sdf(k) * rng.normal();
        for (int k = 0; k < n_i; ++k) x_i(k) = x(ind_sorted[static_cast<std::size_t>(k)], s);
        const Vector x_d = r * x_i;
        for (std::size_t k = 0; k < dep_idx.size(); ++k) x(dep_idx[k], s) = x_d(static_cast<Eigen::Index>(k));
        for (int j = 0; j < n; ++j) y(j, s) = x(j, s) + sde(j) * rng.normal();
    }
    return DataSet(std::move(y), model.variable_names(), std::move(x));
}

}  // namespace pcarecon
