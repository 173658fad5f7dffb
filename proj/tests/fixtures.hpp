#pragma once

// The four-node, six-stream flow network used across the tests.

#include "pcarecon/model.hpp"
#include "pcarecon/simulate.hpp"

namespace fixture {

using namespace pcarecon;

inline const Names kFlows{"F1", "F2", "F3", "F4", "F5", "F6"};

inline Matrix flow_matrix() {
    Matrix a(4, 6);
    a << 1, 1, -1, 0, 0, 0,  //
        0, 0, 1, -1, 0, 0,   //
        0, 0, 0, 1, -1, -1,  //
        0, -1, 0, 0, 0, 1;
    return a;
}

inline ConstraintModel flow_model() { return ConstraintModel(flow_matrix(), kFlows); }

inline Vector flow_error_sd() {
    Vector sd(6);
    sd << 0.1, 0.08, 0.15, 0.2, 0.18, 0.1;
    return sd;
}

inline NoiseModel flow_noise() { return NoiseModel::from_standard_deviations(flow_error_sd()); }

inline SimulationSpec flow_spec(std::uint64_t seed, int samples = 1000) {
    std::map<std::string, double> sde;
    const Vector sd = flow_error_sd();
    for (int i = 0; i < 6; ++i) sde[kFlows[static_cast<std::size_t>(i)]] = sd(i);
    return SimulationSpec{flow_model(), {"F1", "F2"}, {{"F1", 10.0}, {"F2", 10.0}}, {{"F1", 1.0}, {"F2", 2.0}},
                          sde, samples, seed};
}

inline constexpr std::uint64_t kPresetSeed = 20240101;

}  // namespace fixture
