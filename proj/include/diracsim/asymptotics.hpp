#pragma once
#include <array>
#include <limits>
#include <span>
#include <vector>

#include "diracsim/decay_fit.hpp"
#include "diracsim/model.hpp"
#include "diracsim/shell_ops.hpp"
#include "diracsim/volterra.hpp"

namespace diracsim {

// A time integral was truncated where its estimated tail is still too large.
struct HorizonError : Error {
    using Error::Error;
};

struct XiOptions {
    double horizon = 100.0;
    // Throw HorizonError when the tail bound exceeds this fraction of ||Xi||.
    double tail_tolerance = 1.0;
    // Replace W_n(s) by the identity (test hook).
    bool identity_propagator = false;
    // Envelope window for the decay fit behind the tail bound; 0 selects 2 pi / m_min.
    double envelope_width = 0.0;
    int threads = 1;
};

// Xi^j_{nk} = sum_l int_0^T N^(j)_kl(s) W_n(s) d_l rho_n ds, held as one shell
// operator per (n, j, k, l) acting on d_l rho_n.
struct XiFamily {
    int dim = 0;
    int fields = 0;
    double horizon = 0.0;
    // Upper bound on the L^2 norm of the discarded integral over (T, inf), per order j.
    std::array<double, 2> tail{0.0, 0.0};
    // Fitted decay slope of ||N^(j)|| used for the tail.
    std::array<double, 2> slope{0.0, 0.0};
    std::vector<ShellOp> ops;

    const ShellOp& op(int n, int j, int k, int l) const { return ops[index(n, j, k, l)]; }
    std::vector<ShellOp> gradient_ops(int n, int j, int k) const;
    std::size_t index(int n, int j, int k, int l) const
    {
        return static_cast<std::size_t>(((n * 2 + j) * dim + k) * dim + l);
    }
};

XiFamily compute_xi(const Model& m, const SolvingKernel& sk, const XiOptions& opt = {});

// Field n of the result is Xi^j_{nk}; k-space or position space.
SpinorFieldSet xi_hat(const Model& m, const XiFamily& xi, int j, int k);
SpinorFieldSet xi_field(const Model& m, const XiFamily& xi, int j, int k);

struct ThetaOptions {
    double horizon = 100.0;
    // Relative tail bound above which HorizonError is thrown; infinite disables the check.
    double tail_tolerance = std::numeric_limits<double>::infinity();
    double envelope_width = 0.0;
};

// theta^chi_{nr} = sum_k int_0^T W_n(s) Xi^0_{nk} <W_r(s) i d_k rho_r, chi> ds as
// operators on d_l rho_n; chi_hat is a single k-space field of type r.
std::vector<ShellOp> theta_ops(const Model& m, const XiFamily& xi, const cd* chi_hat, int n, int r,
                               const ThetaOptions& opt = {}, double* tail = nullptr);
// Position-space theta^chi_{nr} for a single position-space field chi.
SpinorFieldSet compute_theta(const Model& m, const XiFamily& xi, const SpinorFieldSet& chi, int n, int r,
                             const ThetaOptions& opt = {});

// chi^Z_n = chi_n + sum_r theta^{chi_r}_{nr} + Xi^0_n . u + Xi^1_n . v (position space).
SpinorFieldSet build_chiZ(const Model& m, const Observable& Z, const XiFamily& xi, const ThetaOptions& opt = {});

// q(t), p(t) of qddot = -V q.
std::pair<RVec, RVec> free_oscillator(const RMat& V, const RVec& q0, const RVec& p0, double t);

struct ResidualCurve {
    std::vector<double> t;
    std::vector<double> residual;
    DecayFit fit;
};

// |q^(j)(t) - sum_n <W_n(t) psi0_n, Xi^j_n>| for j = 0 (position) and 1
// (velocity) at every grid time in [t0, t1], with envelope fits. Rejects
// decoupled models.
std::array<ResidualCurve, 2> residual_q(const Model& m, const SystemState& Y0, const XiFamily& xi, double t0,
                                        double t1, double envelope_width = 0.0);

// P psi = (psi + Z(psi), sum_n <psi_n, Xi^0_n>, sum_n <psi_n, Xi^1_n>) with
// Z_n(psi) = i sum_{r,k} int_0^T W_n(s) d_k rho_n <psi_r, W_r(s) Xi^0_{rk}> ds.
SystemState projection_P(const Model& m, const SpinorFieldSet& psi, const XiFamily& xi, double horizon = 100.0);

// ||U(t) Y0 - P(W(t) psi0)|| in the weighted norm with <x>^{-sigma}, at the given
// times (rounded to the time grid).
ResidualCurve projection_residual(const Model& m, const SystemState& Y0, const XiFamily& xi,
                                  std::span<const double> times, double sigma = 2.0, double horizon = 100.0,
                                  int threads = 1);

struct WaveOperatorResult {
    ResidualCurve curve;
    // Omega_+ Y0 = U0(-T) U(T) Y0
    SystemState omega;
    double omega_field_norm = 0.0;
};

// ||U(t) Y0 - U0(t) Omega_+ Y0|| (unweighted) with Omega_+ from the finite-time
// composition at T; U0 is the decoupled flow.
WaveOperatorResult wave_operator_residual(const Model& m, const SystemState& Y0, double T,
                                          std::span<const double> times, int threads = 1);

}  // namespace diracsim
