#pragma once
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diracsim/decay_fit.hpp"
#include "diracsim/kernel.hpp"
#include "diracsim/model.hpp"
#include "diracsim/shell_ops.hpp"
#include "diracsim/volterra.hpp"

namespace diracsim {

// Radius beyond which rho is below 1e-8 of its peak (the declared radius for
// compact coupling).
double effective_coupling_radius(const Model& m);

// Smallest L for which the periodic solution on [0, T] coincides with the one on
// R^d everywhere in the box: 2 (T + R_rho + R_data).
double required_box(const Model& m, const SystemState& Y0, double T);

// Coupled flow through the Duhamel factorisation: the particle obeys a Volterra
// equation driven by F(t); the fields are the free flow plus a source integral.
class Evolver {
public:
    Evolver(const Model& m, double T);
    const Model& model() const { return model_; }
    const TimeGrid& grid() const { return kernel_.grid; }
    const MemoryKernel& kernel() const { return kernel_; }

    // F_k(t_j) = sum_n <d_k rho_n, W_n(t_j) psi0_n>
    std::vector<RVec> forcing(const SpinorFieldSet& psi0) const;
    std::vector<RVec> forcing_hat(const SpinorFieldSet& psi0_hat) const;
    TrajectorySolution trajectory(const SystemState& Y0) const;
    // Source operators i int_0^t W_n(t - s) q_l(s) ds, one per l, for each index.
    std::vector<std::vector<ShellOp>> source_ops(int n, const TrajectorySolution& traj,
                                                     std::span<const int> indices) const;
    // Calls visit(i, psi(t_{indices[i]})) in order; fields in position space.
    void fields(const SystemState& Y0, const TrajectorySolution& traj, std::span<const int> indices,
                const std::function<void(std::size_t, SpinorFieldSet&&)>& visit, int threads = 1) const;

private:
    Model model_;
    MemoryKernel kernel_;
};

std::vector<RVec> forcing(const Model& m, const SpinorFieldSet& psi0, const TimeGrid& tg);

struct EvolveOptions {
    // Throw BoxSizeError instead of flagging when L < required_box.
    bool require_box = false;
    int threads = 1;
};

struct EvolveResult {
    TrajectorySolution trajectory;
    std::vector<double> times;
    std::vector<SystemState> states;
    bool box_ok = true;
    double required_L = 0.0;
};

// Output times must lie on the grid of step model.config().dt.
EvolveResult evolve(const Model& m, const SystemState& Y0, double T, std::span<const double> output_times,
                    const EvolveOptions& opt = {});

// Sum_n 1/2 ((phi, A2 phi) + (pi, A2 pi) + 2 (phi, A1 pi)) + 1/2 (q.Vq + |p|^2)
//   - sum_n q.((phi, grad mu) + (pi, grad nu)),  psi = phi + i pi, rho = mu + i nu.
double energy(const Model& m, const SystemState& Y);

// Fit of the local seminorm sqrt(|psi|^2_{|x|<R} + |q|^2 + |p|^2) against
// log(1 + t). Requires L > T + R + R_rho + R_data so that no periodic image of
// the data or of the radiated field reaches |x| < R.
DecayFit local_energy_decay(const Model& m, const SystemState& Y0, double R, std::span<const double> times,
                            double envelope_width = 0.0, int threads = 1);

}  // namespace diracsim
