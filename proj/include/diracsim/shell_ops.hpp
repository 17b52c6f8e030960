#pragma once
#include <span>
#include <vector>

#include "diracsim/model.hpp"
#include "diracsim/oscillatory.hpp"

namespace diracsim {

// Every time integral of W_n(s) against a scalar weight is diagonal in k and
// depends on k only through omega_n(k), so it collapses to an operator
// c(shell) I - i s(shell) D_n(k), D_n(k) = alpha.k + beta m_n. ShellOp stores (c, s).
struct ShellOp {
    std::vector<cd> c;
    std::vector<cd> s;

    static ShellOp zero(std::size_t shells) { return {std::vector<cd>(shells, cd(0.0)), std::vector<cd>(shells, cd(0.0))}; }
    static ShellOp identity(std::size_t shells) { return {std::vector<cd>(shells, cd(1.0)), std::vector<cd>(shells, cd(0.0))}; }
    ShellOp& operator+=(const ShellOp& o);
    ShellOp& operator*=(cd a);
};

// (a) o (b) for field n, using D^2 = omega^2.
ShellOp compose(const ShellOp& a, const ShellOp& b, const std::vector<double>& omega);

// int_0^T f(s) W_n(s) ds for f sampled on a uniform grid (piecewise-linear
// product integration, exact in the oscillatory factor).
ShellOp integrate_against_propagator(std::span<const double> f, double dt, const std::vector<double>& omega);
// Batched form: one ShellOp per row.
std::vector<ShellOp> integrate_against_propagator(const std::vector<std::vector<double>>& rows, double dt,
                                                  const std::vector<double>& omega, int threads = 1);

// i k_l rho^_n(k), all components at one point.
void gradient_rho_at(const Model& m, int n, int l, std::size_t idx, cd* out);

// out += sum_l op_l (i k_l rho^_n) for k-space field n (spin * points values).
void add_gradient_source(const Model& m, int n, const std::vector<ShellOp>& ops, cd* out);

// Apply op to a k-space field of field type n (in and out may alias).
void apply_shell_op(const Model& m, int n, const ShellOp& op, const cd* in, cd* out);

// Shell sums a = sum conj(x) . y and b = sum conj(x) . D_n y, so that
// <W_n(t) x, y> = (1/L^d) Re sum_shell [cos(w t) a + i sin(w t)/w b].
struct ShellPairing {
    std::vector<cd> a;
    std::vector<cd> b;
};

ShellPairing shell_pairing(const Model& m, int n, const cd* x_hat, const cd* y_hat);
// y = d_l rho_n
ShellPairing shell_pairing_gradient(const Model& m, int n, const cd* x_hat, int l);

// <W_n(t) x, y> for t = t0 + j dt, j = 0..count-1.
std::vector<double> pairing_series(const Model& m, int n, const ShellPairing& sp, double t0, double dt, int count);

}  // namespace diracsim
