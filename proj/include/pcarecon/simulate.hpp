#pragma once

// Seeded steady-state data generator for linear flow networks.
//
// Per sample: independent variables = base + N(0, sdf^2), dependent variables
// solved from A x = 0, measurements = x + N(0, sde^2).
//
// Random stream: std::mt19937_64 seeded with `seed`. Uniforms take the top 53
// bits of one draw; normals come from Box-Muller pairs (cosine branch first,
// then the cached sine branch). Draw order is sample-major: for each sample,
// one fluctuation per independent variable in model order, then one error per
// variable in model order. Draws are made even when an SD is zero, so the
// stream layout never depends on the SD values.

#include <cstdint>
#include <map>
#include <random>

#include "pcarecon/model.hpp"

namespace pcarecon {

struct SimulationSpec {
    ConstraintModel model;
    Names independent;
    std::map<std::string, double> base_values;     // independent variables
    std::map<std::string, double> fluctuation_sd;  // independent variables
    std::map<std::string, double> error_sd;        // every variable
    int samples = 1000;
    std::uint64_t seed = 0;
};

/// One message per problem, each naming the offending field.
std::vector<std::string> validate_spec(const SimulationSpec& spec);

/// Throws InvalidInput (listing validate_spec messages), SingularDependentBlock.
DataSet simulate(const SimulationSpec& spec);

/// Portable standard normal generator over mt19937_64.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
    double uniform();  // in (0, 1)
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pcarecon
