#pragma once

#include <memory>
#include <random>

#include "pduu/risk.hpp"

namespace fixtures {

using namespace pduu;

inline Vector normal_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * N(rng);
    return v;
}

// Interior design with some spatial variation.
inline NodalField varied_design(Eigen::Index n, std::uint64_t seed) {
    return (0.5 + 0.2 * normal_vector(n, seed).array().tanh()).matrix();
}

inline std::shared_ptr<const ForwardModel> model(double h, const ModelParams& params = {}) {
    return std::make_shared<const ForwardModel>(std::make_shared<const Mesh>(build_lshape_mesh(h)), params);
}

inline std::shared_ptr<const MaternPrior> prior(const ForwardModel& m, double gamma = 4.0, double delta = 40.0) {
    return std::make_shared<const MaternPrior>(m.mesh(), gamma, delta, Tensor2::Identity(),
                                               NodalField::Zero(m.num_vertices()));
}

// Oversampling large enough that the sketch spans the whole space on coarse
// meshes, so the returned pairs are exact.
inline RiskContext context(std::shared_ptr<const ForwardModel> m, int rank, int oversampling = 1000,
                           std::uint64_t seed = 17) {
    RandomizedEigenOptions eo;
    eo.rank = rank;
    eo.oversampling = oversampling;
    eo.seed = seed;
    auto p = prior(*m);
    return RiskContext::build(std::move(m), std::move(p), eo);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fixtures
