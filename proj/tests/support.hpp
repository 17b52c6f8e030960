#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include "diracsim/model.hpp"

namespace support {

using namespace diracsim;

inline ModelConfig cfg1d(int M = 1024, double L = 100.0, std::vector<double> masses = {1.0, 2.0})
{
    ModelConfig c;
    c.dimension = 1;
    c.n_fields = static_cast<int>(masses.size());
    c.masses = masses;
    c.V_auto = true;
    c.coupling.kind = CouplingKind::GaussianDecay;
    c.coupling.radius = 1.0;
    c.coupling.amplitudes.assign(masses.size(), {1.0, 0.0});
    c.L = L;
    c.M = M;
    c.dt = 0.025;
    return c;
}

inline ModelConfig cfg3d(int M = 32, double L = 32.0, std::vector<double> masses = {1.0, 1.5})
{
    ModelConfig c;
    c.dimension = 3;
    c.n_fields = static_cast<int>(masses.size());
    c.masses = masses;
    c.V_auto = true;
    c.coupling.kind = CouplingKind::GaussianDecay;
    c.coupling.radius = 1.5;
    c.coupling.amplitudes.assign(masses.size(), {0.2, 0.0, 0.0, 0.0});
    c.L = L;
    c.M = M;
    c.dt = 0.05;
    return c;
}

inline ModelConfig decoupled(ModelConfig c)
{
    for (auto& row : c.coupling.amplitudes)
        for (auto& a : row) a = 0.0;
    c.V_auto = false;
    c.V = RMat::Identity(c.dimension, c.dimension) * 2.0;
    return c;
}

// i.i.d. complex normal values at every grid point.
inline SpinorFieldSet random_fields(const Model& m, std::uint64_t seed, int fields = -1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SpinorFieldSet f(fields < 0 ? m.n_fields() : fields, m.spin(), m.grid().size());
    for (auto& v : f.data()) v = cd(g(rng), g(rng));
    return f;
}

// (1 - r^2/R^2)^4 times a random spinor per field, so supported in |x| < R.
inline SpinorFieldSet bump_fields(const Model& m, double R, std::uint64_t seed, int fields = -1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const int N = fields < 0 ? m.n_fields() : fields;
    SpinorFieldSet f(N, m.spin(), m.grid().size());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < m.spin(); ++c) {
            const cd a(g(rng), g(rng));
            auto comp = f.component(n, c);
            for (std::size_t idx = 0; idx < comp.size(); ++idx) {
                const double r = m.grid().radius(idx);
                if (r < R) comp[idx] = a * std::pow(1.0 - r * r / (R * R), 4);
            }
        }
    return f;
}

inline RVec random_vec(int d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RVec v(d);
    for (int i = 0; i < d; ++i) v(i) = g(rng);
    return v;
}

inline double max_abs_diff(const SpinorFieldSet& a, const SpinorFieldSet& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) e = std::max(e, std::abs(a.data()[i] - b.data()[i]));
    return e;
}

inline double max_abs(const SpinorFieldSet& a)
{
    double e = 0.0;
    for (auto v : a.data()) e = std::max(e, std::abs(v));
    return e;
}

}  // namespace support
