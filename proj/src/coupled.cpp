#include "diracsim/coupled.hpp"

#include <algorithm>
#include <cmath>

#include "diracsim/pairing.hpp"
#include "diracsim/parallel.hpp"
#include "diracsim/propagator.hpp"

namespace diracsim {

double effective_coupling_radius(const Model& m)
{
    const auto& c = m.config().coupling;
    if (c.kind == CouplingKind::CompactSupport) return c.radius;
    return c.radius * std::sqrt(2.0 * std::log(1e8));
}

double required_box(const Model& m, const SystemState& Y0, double T)
{
    return 2.0 * (T + effective_coupling_radius(m) + support_radius(m.grid(), Y0.psi, 1e-8));
}

Evolver::Evolver(const Model& m, double T) : model_(m), kernel_(kernel_time(m, TimeGrid::covering(T, m.config().dt))) {}

std::vector<RVec> Evolver::forcing_hat(const SpinorFieldSet& psi0_hat) const
{
    const int d = model_.dim();
    const int count = grid().size();
    std::vector<RVec> F(static_cast<std::size_t>(count), RVec::Zero(d));
    for (int n = 0; n < model_.n_fields(); ++n)
        for (int l = 0; l < d; ++l) {
            auto sp = shell_pairing_gradient(model_, n, psi0_hat.field_data(n), l);
            auto series = pairing_series(model_, n, sp, 0.0, grid().dt, count);
            for (int j = 0; j < count; ++j) F[static_cast<std::size_t>(j)](l) += series[static_cast<std::size_t>(j)];
        }
    return F;
}

std::vector<RVec> Evolver::forcing(const SpinorFieldSet& psi0) const
{
    if (psi0.fields() != model_.n_fields() || psi0.spin() != model_.spin() || psi0.points() != model_.grid().size())
        throw ShapeError("forcing: initial field does not match the model grid");
    SpinorFieldSet hat = psi0;
    model_.to_fourier(hat);
    return forcing_hat(hat);
}

TrajectorySolution Evolver::trajectory(const SystemState& Y0) const
{
    const int d = model_.dim();
    if (Y0.q.size() != d || Y0.p.size() != d) throw ShapeError("initial particle state has the wrong dimension");
    std::vector<RVec> F;
    if (!Y0.psi.empty() && Y0.psi.squared_sum() > 0.0 && !model_.decoupled()) F = forcing(Y0.psi);
    return solve_particle(kernel_, F, model_.V(), Y0.q, Y0.p);
}

std::vector<std::vector<ShellOp>> Evolver::source_ops(int n, const TrajectorySolution& traj,
                                                      std::span<const int> indices) const
{
    const auto& om = model_.shell_omega(n);
    const std::size_t S = om.size();
    const int d = model_.dim();
    const double dt = traj.grid.dt;
    if (!std::is_sorted(indices.begin(), indices.end())) throw DomainError("source_ops: indices must be sorted");
    std::vector<std::vector<ShellOp>> out(indices.size(), std::vector<ShellOp>(static_cast<std::size_t>(d), ShellOp::zero(S)));
    if (indices.empty() || model_.decoupled()) return out;
    const int last = indices.back();
    if (last >= traj.grid.size()) throw DomainError("source_ops: index beyond the trajectory");
    for (std::size_t s = 0; s < S; ++s) {
        const double w = om[s];
        const auto [w0, w1] = filon_weights(cd(0.0, w * dt));
        const cd step = std::polar(1.0, w * dt);
        for (int l = 0; l < d; ++l) {
            // A(t_j) = int_0^{t_j} q_l(s) exp(i w s) ds
            cd A = 0.0;
            cd ph = 1.0;
            std::size_t next = 0;
            for (int j = 0;; ++j) {
                while (next < indices.size() && indices[next] == j) {
                    const cd e = std::polar(1.0, -w * j * dt) * A;
                    auto& op = out[next][static_cast<std::size_t>(l)];
                    op.c[s] = cd(0.0, e.real());
                    op.s[s] = cd(0.0, -e.imag() / w);
                    ++next;
                }
                if (j == last) break;
                const double q0 = traj.q[static_cast<std::size_t>(j)](l);
                const double q1 = traj.q[static_cast<std::size_t>(j) + 1](l);
                A += dt * ph * (w0 * q0 + w1 * q1);
                ph *= step;
                if ((j + 1) % 128 == 0) ph = std::polar(1.0, w * (j + 1) * dt);
            }
        }
    }
    return out;
}

void Evolver::fields(const SystemState& Y0, const TrajectorySolution& traj, std::span<const int> indices,
                     const std::function<void(std::size_t, SpinorFieldSet&&)>& visit, int threads) const
{
    const int N = model_.n_fields();
    std::vector<int> order(indices.begin(), indices.end());
    std::vector<std::size_t> perm(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return order[a] < order[b]; });
    std::vector<int> sorted(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) sorted[i] = order[perm[i]];

    std::vector<std::vector<std::vector<ShellOp>>> ops(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), threads,
                 [&](std::size_t n) { ops[n] = source_ops(static_cast<int>(n), traj, sorted); });

    const bool free_part = !Y0.psi.empty() && Y0.psi.squared_sum() > 0.0;
    SpinorFieldSet hat0;
    if (free_part) {
        hat0 = Y0.psi;
        model_.to_fourier(hat0);
    }
    // Emit in the caller's order; sorted position k corresponds to caller index perm[k].
    std::vector<std::size_t> where(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) where[perm[k]] = k;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t k = where[i];
        const double t = traj.grid.t(order[i]);
        SpinorFieldSet out = model_.zero_fields();
        parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t nn) {
            const int n = static_cast<int>(nn);
            if (free_part) propagate_hat(model_, n, t, hat0.field_data(n), out.field_data(n));
            add_gradient_source(model_, n, ops[nn][k], out.field_data(n));
        });
        model_.to_position(out);
        visit(i, std::move(out));
    }
}

std::vector<RVec> forcing(const Model& m, const SpinorFieldSet& psi0, const TimeGrid& tg)
{
    if (std::abs(tg.dt - m.config().dt) > 1e-15 * tg.dt) {
        ModelConfig c = m.config();
        c.dt = tg.dt;
        return Evolver(Model(c), tg.T()).forcing(psi0);
    }
    return Evolver(m, tg.T()).forcing(psi0);
}

EvolveResult evolve(const Model& m, const SystemState& Y0, double T, std::span<const double> output_times,
                    const EvolveOptions& opt)
{
    Y0.psi.require_same_shape(m.zero_fields(), "evolve: initial fields");
    EvolveResult r;
    r.required_L = required_box(m, Y0, T);
    r.box_ok = m.grid().L() > r.required_L;
    if (!r.box_ok && opt.require_box)
        throw BoxSizeError("box too small for exact finite-speed evolution: need L > 2 (T + R_rho + R_data) = " +
                           std::to_string(r.required_L) + ", have L = " + std::to_string(m.grid().L()));
    Evolver ev(m, T);
    r.trajectory = ev.trajectory(Y0);
    std::vector<int> idx;
    for (double t : output_times) {
        if (t < 0.0 || t > ev.grid().T() + 1e-9 * ev.grid().dt) throw DomainError("output time outside [0, T]");
        idx.push_back(ev.grid().index_of(t));
    }
    r.times.assign(output_times.begin(), output_times.end());
    r.states.resize(idx.size());
    ev.fields(Y0, r.trajectory, idx,
              [&](std::size_t i, SpinorFieldSet&& psi) {
                  const auto j = static_cast<std::size_t>(idx[i]);
                  r.states[i] = SystemState{std::move(psi), r.trajectory.q[j], r.trajectory.p[j]};
              },
              opt.threads);
    return r;
}

double energy(const Model& m, const SystemState& Y)
{
    const auto& g = m.grid();
    const auto& fg = m.fourier();
    const auto& alg = m.algebra();
    const int d = m.dim();
    const int s = m.spin();
    const std::size_t P = g.size();
    Y.psi.require_same_shape(m.zero_fields(), "energy");
    if (Y.q.size() != d || Y.p.size() != d) throw ShapeError("energy: particle state has the wrong dimension");

    // A1 carries the derivatives along x1 (and x3); A2 carries x2 and the mass.
    std::vector<int> a1dirs = d == 3 ? std::vector<int>{0, 2} : std::vector<int>{0};
    std::vector<int> a2dirs = d == 3 ? std::vector<int>{1} : std::vector<int>{};

    SpinorFieldSet phi = m.zero_fields();
    SpinorFieldSet pi_ = m.zero_fields();
    auto src = Y.psi.data();
    auto dphi = phi.data();
    auto dpi = pi_.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dphi[i] = src[i].real();
        dpi[i] = src[i].imag();
    }
    m.to_fourier(phi);
    m.to_fourier(pi_);

    double field = 0.0;
    for (int n = 0; n < m.n_fields(); ++n) {
        const double mass = m.mass(n);
        double acc = 0.0;
        CVec a(s), b(s);
        for (std::size_t idx = 0; idx < P; ++idx) {
            const auto k = fg.wavevector(idx);
            CMat A1 = CMat::Zero(s, s);
            for (int j : a1dirs) A1 += cd(0.0, k[j]) * alg.alpha[j];
            // -i alpha_2 d_2 -> alpha_2 k_2
            CMat A2 = mass * alg.beta;
            for (int j : a2dirs) A2 += k[j] * alg.alpha[j];
            for (int c = 0; c < s; ++c) {
                a(c) = phi.component(n, c)[idx];
                b(c) = pi_.component(n, c)[idx];
            }
            acc += (a.adjoint() * (A2 * a)).value().real() + (b.adjoint() * (A2 * b)).value().real() +
                   2.0 * (a.adjoint() * (A1 * b)).value().real();
        }
        field += 0.5 * acc / g.volume();
    }

    double inter = 0.0;
    if (!m.decoupled()) {
        SpinorFieldSet hat = Y.psi;
        m.to_fourier(hat);
        for (int l = 0; l < d; ++l) {
            if (Y.q(l) == 0.0) continue;
            inter += Y.q(l) * fourier_pairing(g, hat, m.grad_rho_hat(l));
        }
    }
    const double particle = 0.5 * (Y.q.dot(m.V() * Y.q) + Y.p.squaredNorm());
    return field + particle - inter;
}

DecayFit local_energy_decay(const Model& m, const SystemState& Y0, double R, std::span<const double> times,
                            double envelope_width, int threads)
{
    if (times.empty()) throw DomainError("local_energy_decay: no sample times");
    const double T = *std::max_element(times.begin(), times.end());
    const double need = T + R + effective_coupling_radius(m) + support_radius(m.grid(), Y0.psi, 1e-8);
    if (!(m.grid().L() > need))
        throw BoxSizeError("box too small: need L > T + R + R_rho + R_data = " + std::to_string(need));
    Evolver ev(m, T);
    auto traj = ev.trajectory(Y0);
    std::vector<int> idx;
    std::vector<double> ts;
    for (double t : times) {
        const int j = std::clamp(static_cast<int>(std::lround(t / ev.grid().dt)), 0, ev.grid().steps);
        idx.push_back(j);
        ts.push_back(ev.grid().t(j));
    }
    std::vector<double> vals(idx.size());
    ev.fields(Y0, traj, idx,
              [&](std::size_t i, SpinorFieldSet&& psi) {
                  const auto j = static_cast<std::size_t>(idx[i]);
                  SystemState Y{std::move(psi), traj.q[j], traj.p[j]};
                  vals[i] = std::sqrt(local_seminorm(m.grid(), Y, R));
              },
              threads);
    if (envelope_width > 0.0) return fit_envelope(ts, vals, envelope_width, ts.front(), ts.back());
    return fit_power_law(ts, vals);
}

}  // namespace diracsim
