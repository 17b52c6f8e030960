#include "diracsim/asymptotics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "diracsim/coupled.hpp"
#include "diracsim/pairing.hpp"
#include "diracsim/parallel.hpp"
#include "diracsim/propagator.hpp"

namespace diracsim {

namespace {

int horizon_steps(double horizon, double dt)
{
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    return static_cast<int>(std::lround(horizon / dt));
}

double default_width(const Model& m, double w) { return w > 0.0 ? w : 2.0 * pi / m.min_mass(); }

// int_T^inf C (1 + s)^a ds from a fit of v on [T/10, T]; infinite when a >= -1.
double power_tail(std::span<const double> t, std::span<const double> v, double width, double T, double* slope)
{
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, x);
    if (peak == 0.0) {
        if (slope) *slope = 0.0;
        return 0.0;
    }
    auto fit = fit_envelope(t, v, width, T / 10.0, T);
    if (slope) *slope = fit.slope;
    if (fit.slope >= -1.0) return std::numeric_limits<double>::infinity();
    return std::exp(fit.intercept) * std::pow(1.0 + T, fit.slope + 1.0) / (-fit.slope - 1.0);
}

double field_norm_hat(const Model& m, const SpinorFieldSet& hat) { return std::sqrt(fourier_pairing(m.grid(), hat, hat)); }

SpinorFieldSet to_position_copy(const Model& m, SpinorFieldSet f)
{
    m.to_position(f);
    return f;
}

// P(W(t) psi0) in k-space for the field part; sp[r * d + k] pairs psi0_r with Xi^0_{rk}
// and spv the same with Xi^1_{rk}.
struct Projector {
    const Model& m;
    const XiFamily& xi;
    int J;
    double dt;
    std::vector<ShellPairing> sp0, sp1;

    Projector(const Model& m_, const XiFamily& xi_, const SpinorFieldSet& psi0_hat, double horizon)
        : m(m_), xi(xi_), dt(m_.config().dt)
    {
        J = horizon_steps(horizon, dt);
        const int d = m.dim();
        for (int k = 0; k < d; ++k) {
            auto x0 = xi_hat(m, xi, 0, k), x1 = xi_hat(m, xi, 1, k);
            for (int r = 0; r < m.n_fields(); ++r) {
                sp0.push_back(shell_pairing(m, r, psi0_hat.field_data(r), x0.field_data(r)));
                sp1.push_back(shell_pairing(m, r, psi0_hat.field_data(r), x1.field_data(r)));
            }
        }
    }

    double pair(const std::vector<ShellPairing>& sp, int k, double t) const
    {
        double v = 0.0;
        for (int r = 0; r < m.n_fields(); ++r)
            v += pairing_series(m, r, sp[static_cast<std::size_t>(k * m.n_fields() + r)], t, dt, 1)[0];
        return v;
    }

    SystemState apply(const SpinorFieldSet& psi0_hat, double t) const
    {
        const int d = m.dim();
        SystemState P{m.zero_fields(), RVec::Zero(d), RVec::Zero(d)};
        for (int k = 0; k < d; ++k) {
            P.q(k) = pair(sp0, k, t);
            P.p(k) = pair(sp1, k, t);
        }
        // h_k(s_i) = sum_r <W_r(t - s_i) psi0_r, Xi^0_{rk}>
        std::vector<std::vector<double>> h(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(J) + 1, 0.0));
        for (int k = 0; k < d; ++k)
            for (int r = 0; r < m.n_fields(); ++r) {
                auto series = pairing_series(m, r, sp0[static_cast<std::size_t>(k * m.n_fields() + r)], t - J * dt, dt, J + 1);
                for (int i = 0; i <= J; ++i) h[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] += series[static_cast<std::size_t>(J - i)];
            }
        for (int n = 0; n < m.n_fields(); ++n) {
            propagate_hat(m, n, t, psi0_hat.field_data(n), P.psi.field_data(n));
            if (m.decoupled()) continue;
            auto ops = integrate_against_propagator(h, dt, m.shell_omega(n));
            for (auto& op : ops) op *= cd(0.0, 1.0);
            add_gradient_source(m, n, ops, P.psi.field_data(n));
        }
        return P;
    }
};

}  // namespace

std::vector<ShellOp> XiFamily::gradient_ops(int n, int j, int k) const
{
    std::vector<ShellOp> out;
    for (int l = 0; l < dim; ++l) out.push_back(op(n, j, k, l));
    return out;
}

XiFamily compute_xi(const Model& m, const SolvingKernel& sk, const XiOptions& opt)
{
    const int d = m.dim();
    const double dt = sk.grid.dt;
    const int J = horizon_steps(opt.horizon, dt);
    if (J > sk.grid.steps) throw HorizonError("solving kernel does not cover the requested horizon");
    if (sk.N.empty() || sk.N.front().rows() != d) throw ShapeError("compute_xi: solving kernel dimension mismatch");

    XiFamily xi;
    xi.dim = d;
    xi.fields = m.n_fields();
    xi.horizon = J * dt;
    xi.ops.resize(static_cast<std::size_t>(m.n_fields() * 2 * d * d));

    std::vector<std::vector<double>> rows;
    for (int j = 0; j < 2; ++j) {
        const auto& src = j == 0 ? sk.N : sk.Ndot;
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                std::vector<double> f(static_cast<std::size_t>(J) + 1);
                for (int i = 0; i <= J; ++i) f[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)](k, l);
                rows.push_back(std::move(f));
            }
    }
    for (int n = 0; n < m.n_fields(); ++n) {
        const std::size_t S = m.shell_omega(n).size();
        std::vector<ShellOp> ops;
        if (opt.identity_propagator) {
            for (const auto& f : rows) {
                ShellOp op = ShellOp::zero(S);
                const cd c = filon_integral(std::span<const double>(f), dt, cd(0.0));
                for (auto& v : op.c) v = c;
                ops.push_back(std::move(op));
            }
        } else {
            ops = integrate_against_propagator(rows, dt, m.shell_omega(n), opt.threads);
        }
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) xi.ops[xi.index(n, j, k, l)] = std::move(ops[static_cast<std::size_t>((j * d + k) * d + l)]);
    }

    // ||sum_l int_T^inf N_kl W d_l rho_n|| <= int_T^inf ||N||_F ds * sqrt(sum_l ||d_l rho_n||^2)
    double G = 0.0;
    for (int n = 0; n < m.n_fields(); ++n) {
        double g2 = 0.0;
        for (int l = 0; l < d; ++l) {
            auto gh = m.grad_rho_hat(n, l);
            g2 += fourier_pairing(m.grid(), gh, gh);
        }
        G += std::sqrt(g2);
    }
    std::vector<double> t(static_cast<std::size_t>(J) + 1);
    for (int i = 0; i <= J; ++i) t[static_cast<std::size_t>(i)] = i * dt;
    for (int j = 0; j < 2; ++j) {
        if (G == 0.0) continue;
        auto norms = kernel_norms(sk, j);
        norms.resize(t.size());
        xi.tail[static_cast<std::size_t>(j)] = G * power_tail(t, norms, default_width(m, opt.envelope_width), xi.horizon, &xi.slope[static_cast<std::size_t>(j)]);
        double size = 0.0;
        for (int k = 0; k < d; ++k) size = std::max(size, field_norm_hat(m, xi_hat(m, xi, j, k)));
        if (xi.tail[static_cast<std::size_t>(j)] > opt.tail_tolerance * size)
            throw HorizonError("horizon too short: tail bound " + std::to_string(xi.tail[static_cast<std::size_t>(j)]) +
                               " exceeds tolerance for ||Xi|| = " + std::to_string(size));
    }
    return xi;
}

SpinorFieldSet xi_hat(const Model& m, const XiFamily& xi, int j, int k)
{
    if (j < 0 || j > 1 || k < 0 || k >= xi.dim || xi.fields != m.n_fields()) throw ShapeError("xi_hat: index out of range");
    SpinorFieldSet out = m.zero_fields();
    if (m.decoupled()) return out;
    for (int n = 0; n < m.n_fields(); ++n) add_gradient_source(m, n, xi.gradient_ops(n, j, k), out.field_data(n));
    return out;
}

SpinorFieldSet xi_field(const Model& m, const XiFamily& xi, int j, int k) { return to_position_copy(m, xi_hat(m, xi, j, k)); }

std::vector<ShellOp> theta_ops(const Model& m, const XiFamily& xi, const cd* chi_hat, int n, int r,
                               const ThetaOptions& opt, double* tail)
{
    const int d = m.dim();
    const double dt = m.config().dt;
    const int J = horizon_steps(opt.horizon, dt);
    const auto& om = m.shell_omega(n);
    std::vector<ShellOp> out(static_cast<std::size_t>(d), ShellOp::zero(om.size()));
    if (tail) *tail = 0.0;
    if (m.decoupled()) return out;

    // g_k(s) = <W_r(s) i d_k rho_r, chi>
    std::vector<std::vector<double>> g;
    for (int k = 0; k < d; ++k) {
        SpinorFieldSet x = m.grad_rho_hat(r, k);
        x *= cd(0.0, 1.0);
        auto sp = shell_pairing(m, r, x.field_data(0), chi_hat);
        g.push_back(pairing_series(m, r, sp, 0.0, dt, J + 1));
    }
    auto gops = integrate_against_propagator(g, dt, om);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) out[static_cast<std::size_t>(l)] += compose(gops[static_cast<std::size_t>(k)], xi.op(n, 0, k, l), om);

    if (tail || std::isfinite(opt.tail_tolerance)) {
        std::vector<double> t(static_cast<std::size_t>(J) + 1), G(t.size(), 0.0);
        for (int i = 0; i <= J; ++i) {
            t[static_cast<std::size_t>(i)] = i * dt;
            for (int k = 0; k < d; ++k) G[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
            G[static_cast<std::size_t>(i)] = std::sqrt(G[static_cast<std::size_t>(i)]);
        }
        double xn = 0.0;
        for (int k = 0; k < d; ++k) {
            SpinorFieldSet single(1, m.spin(), m.grid().size());
            add_gradient_source(m, n, xi.gradient_ops(n, 0, k), single.field_data(0));
            xn += fourier_pairing(m.grid(), single, single);
        }
        const double bound = std::sqrt(xn) * power_tail(t, G, default_width(m, opt.envelope_width), J * dt, nullptr);
        if (tail) *tail = bound;
        if (std::isfinite(opt.tail_tolerance)) {
            SpinorFieldSet th(1, m.spin(), m.grid().size());
            add_gradient_source(m, n, out, th.field_data(0));
            if (bound > opt.tail_tolerance * field_norm_hat(m, th))
                throw HorizonError("horizon too short for theta: tail bound " + std::to_string(bound));
        }
    }
    return out;
}

SpinorFieldSet compute_theta(const Model& m, const XiFamily& xi, const SpinorFieldSet& chi, int n, int r,
                             const ThetaOptions& opt)
{
    if (chi.fields() != 1 || chi.spin() != m.spin() || chi.points() != m.grid().size())
        throw ShapeError("compute_theta: chi must be a single field on the model grid");
    SpinorFieldSet hat = chi;
    m.to_fourier(hat);
    SpinorFieldSet out(1, m.spin(), m.grid().size());
    add_gradient_source(m, n, theta_ops(m, xi, hat.field_data(0), n, r, opt), out.field_data(0));
    m.to_position(out);
    return out;
}

SpinorFieldSet build_chiZ(const Model& m, const Observable& Z, const XiFamily& xi, const ThetaOptions& opt)
{
    const int d = m.dim();
    SpinorFieldSet chi = Z.chi.empty() ? m.zero_fields() : Z.chi;
    chi.require_same_shape(m.zero_fields(), "build_chiZ");
    const RVec u = Z.u.size() == d ? Z.u : RVec::Zero(d);
    const RVec v = Z.v.size() == d ? Z.v : RVec::Zero(d);
    if (m.decoupled()) return chi;

    SpinorFieldSet chi_hat = chi;
    m.to_fourier(chi_hat);
    std::vector<bool> active(static_cast<std::size_t>(m.n_fields()));
    for (int r = 0; r < m.n_fields(); ++r) {
        const cd* p = chi_hat.field_data(r);
        bool nz = false;
        for (std::size_t i = 0; i < static_cast<std::size_t>(m.spin()) * m.grid().size() && !nz; ++i) nz = p[i] != cd(0.0);
        active[static_cast<std::size_t>(r)] = nz;
    }
    SpinorFieldSet extra = m.zero_fields();
    for (int n = 0; n < m.n_fields(); ++n) {
        const std::size_t S = m.shell_omega(n).size();
        std::vector<ShellOp> ops(static_cast<std::size_t>(d), ShellOp::zero(S));
        for (int r = 0; r < m.n_fields(); ++r) {
            if (!active[static_cast<std::size_t>(r)]) continue;
            auto th = theta_ops(m, xi, chi_hat.field_data(r), n, r, opt);
            for (int l = 0; l < d; ++l) ops[static_cast<std::size_t>(l)] += th[static_cast<std::size_t>(l)];
        }
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                if (u(k) != 0.0) {
                    ShellOp a = xi.op(n, 0, k, l);
                    a *= u(k);
                    ops[static_cast<std::size_t>(l)] += a;
                }
                if (v(k) != 0.0) {
                    ShellOp b = xi.op(n, 1, k, l);
                    b *= v(k);
                    ops[static_cast<std::size_t>(l)] += b;
                }
            }
        add_gradient_source(m, n, ops, extra.field_data(n));
    }
    m.to_position(extra);
    chi += extra;
    return chi;
}

std::pair<RVec, RVec> free_oscillator(const RMat& V, const RVec& q0, const RVec& p0, double t)
{
    Eigen::SelfAdjointEigenSolver<RMat> es(V);
    const RMat& Q = es.eigenvectors();
    const RVec a = Q.transpose() * q0, b = Q.transpose() * p0;
    RVec q(a.size()), p(a.size());
    for (int i = 0; i < a.size(); ++i) {
        const double w = std::sqrt(es.eigenvalues()(i));
        q(i) = std::cos(w * t) * a(i) + std::sin(w * t) / w * b(i);
        p(i) = -w * std::sin(w * t) * a(i) + std::cos(w * t) * b(i);
    }
    return {Q * q, Q * p};
}

std::array<ResidualCurve, 2> residual_q(const Model& m, const SystemState& Y0, const XiFamily& xi, double t0,
                                        double t1, double envelope_width)
{
    if (m.decoupled()) throw DomainError("residual_q: the representation is degenerate for a decoupled model");
    if (!(t0 >= 0.0 && t1 > t0)) throw DomainError("residual_q: need 0 <= t0 < t1");
    const int d = m.dim();
    Evolver ev(m, t1);
    auto traj = ev.trajectory(Y0);
    const int J = ev.grid().steps;
    const double dt = ev.grid().dt;

    SpinorFieldSet hat = Y0.psi;
    m.to_fourier(hat);
    std::array<std::vector<RVec>, 2> pred;
    for (int j = 0; j < 2; ++j) {
        pred[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(J) + 1, RVec::Zero(d));
        for (int k = 0; k < d; ++k) {
            auto x = xi_hat(m, xi, j, k);
            for (int n = 0; n < m.n_fields(); ++n) {
                auto sp = shell_pairing(m, n, hat.field_data(n), x.field_data(n));
                auto series = pairing_series(m, n, sp, 0.0, dt, J + 1);
                for (int i = 0; i <= J; ++i) pred[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](k) += series[static_cast<std::size_t>(i)];
            }
        }
    }
    std::array<ResidualCurve, 2> out;
    const int i0 = static_cast<int>(std::ceil(t0 / dt - 1e-9));
    for (int j = 0; j < 2; ++j) {
        auto& c = out[static_cast<std::size_t>(j)];
        const auto& actual = j == 0 ? traj.q : traj.p;
        for (int i = i0; i <= J; ++i) {
            c.t.push_back(i * dt);
            c.residual.push_back((actual[static_cast<std::size_t>(i)] - pred[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]).norm());
        }
        c.fit = fit_envelope(c.t, c.residual, default_width(m, envelope_width), c.t.front(), c.t.back());
    }
    return out;
}

SystemState projection_P(const Model& m, const SpinorFieldSet& psi, const XiFamily& xi, double horizon)
{
    psi.require_same_shape(m.zero_fields(), "projection_P");
    SpinorFieldSet hat = psi;
    m.to_fourier(hat);
    SystemState P = Projector(m, xi, hat, horizon).apply(hat, 0.0);
    m.to_position(P.psi);
    return P;
}

ResidualCurve projection_residual(const Model& m, const SystemState& Y0, const XiFamily& xi,
                                  std::span<const double> times, double sigma, double horizon, int threads)
{
    if (times.empty()) throw DomainError("projection_residual: no sample times");
    const double T = *std::max_element(times.begin(), times.end());
    Evolver ev(m, T);
    auto traj = ev.trajectory(Y0);
    std::vector<int> idx;
    for (double t : times) idx.push_back(std::clamp(static_cast<int>(std::lround(t / ev.grid().dt)), 0, ev.grid().steps));
    SpinorFieldSet hat = Y0.psi;
    m.to_fourier(hat);
    Projector proj(m, xi, hat, horizon);

    ResidualCurve c;
    c.t.resize(idx.size());
    c.residual.resize(idx.size());
    ev.fields(Y0, traj, idx,
              [&](std::size_t i, SpinorFieldSet&& psi) {
                  const auto j = static_cast<std::size_t>(idx[i]);
                  const double t = ev.grid().t(idx[i]);
                  SystemState P = proj.apply(hat, t);
                  m.to_position(P.psi);
                  psi -= P.psi;
                  const double w = weighted_norm(m.grid(), psi, -sigma);
                  c.t[i] = t;
                  c.residual[i] = std::sqrt(w * w + (traj.q[j] - P.q).squaredNorm() + (traj.p[j] - P.p).squaredNorm());
              },
              threads);
    c.fit = fit_power_law(c.t, c.residual);
    return c;
}

WaveOperatorResult wave_operator_residual(const Model& m, const SystemState& Y0, double T,
                                          std::span<const double> times, int threads)
{
    Evolver ev(m, T);
    auto traj = ev.trajectory(Y0);
    const int JT = ev.grid().steps;
    std::vector<int> idx{JT};
    for (double t : times) {
        if (t < 0.0 || t > ev.grid().T() + 1e-9) throw DomainError("wave_operator_residual: time outside [0, T]");
        idx.push_back(std::clamp(static_cast<int>(std::lround(t / ev.grid().dt)), 0, JT));
    }
    // U0 moves the particle with the same integrator as U (H = 0); Verlet is
    // time-reversible, so stepping (q, -p) forward runs the flow backwards.
    MemoryKernel zero;
    zero.grid = ev.grid();
    zero.H.assign(static_cast<std::size_t>(JT) + 1, RMat::Zero(m.dim(), m.dim()));
    auto back = solve_particle(zero, {}, m.V(), traj.q.back(), -traj.p.back());
    const RVec oq = back.q.back(), op = -back.p.back();
    auto fwd = solve_particle(zero, {}, m.V(), oq, op);

    WaveOperatorResult res;
    SpinorFieldSet psiT_hat;
    ev.fields(Y0, traj, idx,
              [&](std::size_t i, SpinorFieldSet&& psi) {
                  if (i == 0) {
                      psiT_hat = std::move(psi);
                      m.to_fourier(psiT_hat);
                      SpinorFieldSet om = m.zero_fields();
                      for (int n = 0; n < m.n_fields(); ++n)
                          propagate_hat(m, n, -ev.grid().T(), psiT_hat.field_data(n), om.field_data(n));
                      res.omega_field_norm = field_norm_hat(m, om);
                      m.to_position(om);
                      res.omega = SystemState{std::move(om), oq, op};
                      return;
                  }
                  const int j = idx[i];
                  const double t = ev.grid().t(j);
                  SpinorFieldSet free = m.zero_fields();
                  for (int n = 0; n < m.n_fields(); ++n)
                      propagate_hat(m, n, t - ev.grid().T(), psiT_hat.field_data(n), free.field_data(n));
                  m.to_position(free);
                  psi -= free;
                  const RVec& q = fwd.q[static_cast<std::size_t>(j)];
                  const RVec& p = fwd.p[static_cast<std::size_t>(j)];
                  const double f = field_norm(m.grid(), psi);
                  res.curve.t.push_back(t);
                  res.curve.residual.push_back(std::sqrt(f * f + (traj.q[static_cast<std::size_t>(j)] - q).squaredNorm() +
                                                         (traj.p[static_cast<std::size_t>(j)] - p).squaredNorm()));
              },
              threads);
    if (res.curve.t.size() >= 2) {
        try {
            res.curve.fit = fit_power_law(res.curve.t, res.curve.residual);
        } catch (const DegenerateInputError&) {
            // all-zero residual (decoupled flow): no slope
        }
    }
    return res;
}

}  // namespace diracsim
