#pragma once
#include <span>
#include <vector>

#include "diracsim/decay_fit.hpp"
#include "diracsim/kernel.hpp"

namespace diracsim {

// q'' = -V q + int_0^t H(t - s) q(s) ds + F(t) on a uniform grid. p is the
// integrator's own momentum; a is the right-hand side evaluated on the solution.
struct TrajectorySolution {
    TimeGrid grid;
    std::vector<RVec> q;
    std::vector<RVec> p;
    std::vector<RVec> a;
};

// Velocity Verlet with trapezoidal memory convolution (second order). F may be
// empty (no forcing); otherwise it must have one sample per grid point.
TrajectorySolution solve_particle(const MemoryKernel& H, const std::vector<RVec>& F, const RMat& V, const RVec& q0,
                                  const RVec& p0);

// Rejects sample times that are not uniformly spaced from 0.
TimeGrid uniform_grid(std::span<const double> times);

// Columns: N from (q0, p0) = (0, e_i); Ndot its momentum; Nddot the equation's
// right-hand side. Sqq and Sqp are the discrete position / momentum responses to
// (q0, p0) = (e_i, 0). For this scheme Sqq equals Ndot up to rounding; Sqp
// approximates Nddot to second order.
struct SolvingKernel {
    TimeGrid grid;
    std::vector<RMat> N;
    std::vector<RMat> Ndot;
    std::vector<RMat> Nddot;
    std::vector<RMat> Sqq;
    std::vector<RMat> Sqp;

    // Sqq(t) q0 + N(t) p0
    RVec position(int j, const RVec& q0, const RVec& p0) const;
    RVec momentum(int j, const RVec& q0, const RVec& p0) const;
};

SolvingKernel solving_kernel(const MemoryKernel& H, const RMat& V);

struct KernelDecay {
    DecayFit N;
    DecayFit Ndot;
    DecayFit Nddot;
};

// Slopes of the running-maximum envelopes of ||N^(j)(t)||_F on [t0, t1]; the
// window must span at least one decade.
KernelDecay fit_kernel_decay(const SolvingKernel& sk, double t0, double t1, double envelope_width);

// Frobenius norm series of N^(j), j = 0, 1, 2.
std::vector<double> kernel_norms(const SolvingKernel& sk, int order);

// max over lambda, i, j of |L[Ndot e_i + N e_j](lambda) - N(lambda)^-1 (lambda e_i + e_j)|
double laplace_check(const Model& m, const SolvingKernel& sk, const std::vector<cd>& lambdas);

// int_0^T exp(-lambda t) f(t) dt for each matrix entry of a sampled series.
CMat laplace_transform(const std::vector<RMat>& f, double dt, cd lambda);

}  // namespace diracsim
