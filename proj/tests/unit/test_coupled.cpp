#include <doctest.h>

#include <cmath>

#include "diracsim/coupled.hpp"
#include "diracsim/pairing.hpp"
#include "diracsim/propagator.hpp"
#include "support.hpp"

using namespace diracsim;
using namespace support;

namespace {

SystemState bump_state(const Model& m, double R, std::uint64_t seed)
{
    SystemState Y{bump_fields(m, R, seed), random_vec(m.dim(), seed + 1), random_vec(m.dim(), seed + 2)};
    return Y;
}

// 1/2 Re <psi, D psi> + 1/2 (q.Vq + |p|^2) - q.<psi, grad rho> in position space
double energy_oracle(const Model& m, const SystemState& Y)
{
    SpinorFieldSet hat = Y.psi, dhat = m.zero_fields();
    m.to_fourier(hat);
    for (int n = 0; n < m.n_fields(); ++n) apply_dirac_symbol(m, n, hat.field_data(n), dhat.field_data(n));
    double e = 0.5 * fourier_pairing(m.grid(), hat, dhat);
    e += 0.5 * (Y.q.dot(m.V() * Y.q) + Y.p.squaredNorm());
    for (int l = 0; l < m.dim(); ++l) {
        SpinorFieldSet g = m.grad_rho_hat(l);
        m.to_position(g);
        e -= Y.q(l) * real_pairing(m.grid(), Y.psi, g);
    }
    return e;
}

SystemState at(const Model& m, const SystemState& Y0, double T)
{
    const double t[] = {T};
    return evolve(m, Y0, T, t).states[0];
}

double state_diff(const SystemState& a, const SystemState& b)
{
    double e = (a.q - b.q).cwiseAbs().maxCoeff();
    e = std::max(e, (a.p - b.p).cwiseAbs().maxCoeff());
    return std::max(e, max_abs_diff(a.psi, b.psi));
}

double state_scale(const SystemState& a)
{
    return std::max({a.q.cwiseAbs().maxCoeff(), a.p.cwiseAbs().maxCoeff(), max_abs(a.psi)});
}

}  // namespace

TEST_CASE("energy trivial cases")
{
    Model m(cfg3d(16, 16.0));
    CHECK(energy(m, m.zero_state()) == 0.0);
    SystemState Y = m.zero_state();
    Y.q = random_vec(3, 4);
    Y.p = random_vec(3, 5);
    CHECK(energy(m, Y) == doctest::Approx(0.5 * (Y.q.dot(m.V() * Y.q) + Y.p.squaredNorm())).epsilon(1e-14));
}

TEST_CASE("real-form energy matches the complex Dirac form")
{
    for (auto cfg : {cfg1d(256, 40.0), cfg3d(16, 16.0)}) {
        Model m(cfg);
        SystemState Y{random_fields(m, 11), random_vec(m.dim(), 12), random_vec(m.dim(), 13)};
        const double a = energy(m, Y), b = energy_oracle(m, Y);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
    }
}

TEST_CASE("energy is conserved at second order in dt")
{
    for (auto cfg : {cfg1d(512, 60.0), cfg3d(32, 32.0)}) {
        auto drift = [&](double dt) {
            ModelConfig c = cfg;
            c.dt = dt;
            Model m(c);
            SystemState Y0 = bump_state(m, 3.0, 21);
            const double e0 = energy(m, Y0);
            return std::abs(energy(m, at(m, Y0, 20.0)) - e0) / std::abs(e0);
        };
        const double a = drift(1e-2), b = drift(5e-3);
        MESSAGE("d=" << cfg.dimension << " energy drift " << a << " " << b);
        CHECK(a <= 1e-4);
        // the asymptotic ratio of a second-order scheme is 4
        CHECK(a >= 3.96 * b);
    }
}

TEST_CASE("flow is linear")
{
    Model m(cfg3d(16, 16.0));
    SystemState Y1 = bump_state(m, 3.0, 31), Y2 = bump_state(m, 4.0, 32);
    const double a = 0.7, b = -1.3;
    SystemState Y{a * Y1.psi + b * Y2.psi, a * Y1.q + b * Y2.q, a * Y1.p + b * Y2.p};
    SystemState U = at(m, Y, 5.0), U1 = at(m, Y1, 5.0), U2 = at(m, Y2, 5.0);
    SystemState comb{a * U1.psi + b * U2.psi, a * U1.q + b * U2.q, a * U1.p + b * U2.p};
    CHECK(state_diff(U, comb) <= 1e-9 * state_scale(U));
}

TEST_CASE("zero coupling gives the free flow and the bare oscillator")
{
    Model m(decoupled(cfg1d(256, 40.0)));
    Model scaled = Model(cfg1d(256, 40.0)).with_coupling_scale(0.0).with_V(m.V());
    SystemState Y0 = bump_state(m, 3.0, 41);
    const double T = 4.0;
    for (const Model* mm : {&m, &scaled}) {
        SystemState Y = at(*mm, Y0, T);
        CHECK(max_abs_diff(Y.psi, propagate_free_set(*mm, Y0.psi, T)) <= 1e-12 * max_abs(Y0.psi));
        // V = 2 I
        const double w = std::sqrt(2.0);
        RVec q = std::cos(w * T) * Y0.q + std::sin(w * T) / w * Y0.p;
        CHECK((Y.q - q).cwiseAbs().maxCoeff() <= 1e-3);
    }
}

TEST_CASE("forcing vanishes without field data or coupling")
{
    Model m(cfg1d(128, 30.0));
    auto tg = TimeGrid::covering(2.0, m.config().dt);
    for (const auto& F : forcing(m, m.zero_fields(), tg)) CHECK(F.cwiseAbs().maxCoeff() == 0.0);
    Model z = m.with_coupling_scale(0.0);
    for (const auto& F : forcing(z, random_fields(z, 3), tg)) CHECK(F.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forcing matches propagate-then-pair")
{
    Model m(cfg3d(16, 16.0));
    SpinorFieldSet psi0 = random_fields(m, 51);
    auto tg = TimeGrid::covering(3.0, m.config().dt);
    auto F = forcing(m, psi0, tg);
    for (int j : {0, 7, 33, tg.steps}) {
        const double t = tg.t(j);
        RVec ref = RVec::Zero(3);
        for (int n = 0; n < m.n_fields(); ++n) {
            SpinorFieldSet w = propagate_free(m, psi0.field(n), n, t);
            for (int l = 0; l < 3; ++l) {
                SpinorFieldSet g = m.grad_rho_hat(n, l);
                m.to_position(g);
                ref(l) += real_pairing(m.grid(), g, w);
            }
        }
        CHECK((F[static_cast<std::size_t>(j)] - ref).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("pure particle data: Volterra solve and source integral")
{
    ModelConfig c = cfg1d(256, 40.0);
    c.dt = 0.01;
    Model m(c);
    SystemState Y0 = m.zero_state();
    Y0.q = RVec::Constant(1, 0.8);
    Y0.p = RVec::Constant(1, -0.3);
    const double T = 3.0;
    auto r = evolve(m, Y0, T, std::vector<double>{T});
    auto tg = TimeGrid::covering(T, c.dt);
    auto ref = solve_particle(kernel_time(m, tg), {}, m.V(), Y0.q, Y0.p);
    CHECK((r.trajectory.q.back() - ref.q.back()).cwiseAbs().maxCoeff() == 0.0);

    // trapezoid in s of i W(t - s) grad rho q(s)
    SpinorFieldSet src = m.zero_fields();
    for (int n = 0; n < m.n_fields(); ++n) {
        SpinorFieldSet g = m.grad_rho_hat(n, 0);
        m.to_position(g);
        for (int j = 0; j <= tg.steps; ++j) {
            const double w = (j == 0 || j == tg.steps) ? 0.5 : 1.0;
            SpinorFieldSet moved = propagate_free(m, g, n, T - tg.t(j));
            SpinorFieldSet full = m.zero_fields();
            full.set_field(n, moved);
            src.axpy(cd(0.0, w * c.dt * ref.q[static_cast<std::size_t>(j)](0)), full);
        }
    }
    CHECK(max_abs_diff(r.states[0].psi, src) <= 1e-3 * max_abs(src));
}

TEST_CASE("finite propagation speed")
{
    Model m(cfg1d(1024, 100.0));
    SpinorFieldSet psi0 = m.zero_fields();
    for (int n = 0; n < m.n_fields(); ++n)
        for (int s = 0; s < m.spin(); ++s) {
            auto comp = psi0.component(n, s);
            for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = cd(1.0 + s, -n) * std::exp(-m.grid().radius(i) * m.grid().radius(i));
        }
    SystemState Y0{psi0, RVec::Constant(1, 0.5), RVec::Constant(1, 0.2)};
    const double T = 20.0;
    auto psi = at(m, Y0, T).psi;
    double far = 0.0, peak = max_abs(psi);
    for (int n = 0; n < m.n_fields(); ++n)
        for (int s = 0; s < m.spin(); ++s) {
            auto comp = psi.component(n, s);
            for (std::size_t i = 0; i < comp.size(); ++i)
                if (m.grid().radius(i) > 45.0) far = std::max(far, std::abs(comp[i]));
        }
    CHECK(far <= 1e-10 * peak);
}

TEST_CASE("box check")
{
    Model m(cfg1d(256, 40.0));
    SystemState Y0 = bump_state(m, 3.0, 61);
    auto r = evolve(m, Y0, 20.0, std::vector<double>{20.0});
    CHECK_FALSE(r.box_ok);
    CHECK(r.required_L > 40.0);
    EvolveOptions opt;
    opt.require_box = true;
    CHECK_THROWS_AS(evolve(m, Y0, 20.0, std::vector<double>{20.0}, opt), BoxSizeError);
    CHECK(evolve(m, Y0, 2.0, std::vector<double>{2.0}, opt).box_ok);
}

TEST_CASE("threaded field reconstruction is identical")
{
    Model m(cfg3d(16, 16.0));
    SystemState Y0 = bump_state(m, 3.0, 71);
    const std::vector<double> ts{1.0, 0.5, 2.0};
    EvolveOptions one, four;
    four.threads = 4;
    auto a = evolve(m, Y0, 2.0, ts, one), b = evolve(m, Y0, 2.0, ts, four);
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(max_abs_diff(a.states[i].psi, b.states[i].psi) == 0.0);
    // caller order is kept
    CHECK(max_abs_diff(a.states[1].psi, at(m, Y0, 0.5).psi) <= 1e-13 * max_abs(a.states[1].psi));
}

TEST_CASE("decay of forcing and local energy in 3D")
{
    ModelConfig c = cfg3d(128, 512.0 / 3.0);
    Model m(c);
    SystemState Y0 = bump_state(m, 3.0, 81);
    auto tg = TimeGrid::covering(80.0, c.dt);
    auto F = forcing(m, Y0.psi, tg);
    std::vector<double> t, v;
    for (int j = 0; j <= tg.steps; ++j) {
        t.push_back(tg.t(j));
        v.push_back(F[static_cast<std::size_t>(j)].norm());
    }
    const double width = 2.0 * M_PI / m.min_mass();
    auto fit = fit_envelope(t, v, width, 10.0, 80.0);
    MESSAGE("forcing slope " << fit.slope);
    CHECK(fit.slope <= -1.35);

    auto times = log_spaced(10.0, 80.0, 24);
    auto le = local_energy_decay(m, Y0, 2.0, times, width);
    MESSAGE("local energy slope " << le.slope);
    CHECK(le.slope <= -1.35);

    // negative control: no coupling, the bare oscillator does not decay
    Model z = m.with_coupling_scale(0.0);
    auto ctrl = local_energy_decay(z, Y0, 2.0, times, width);
    MESSAGE("control slope " << ctrl.slope);
    CHECK(std::abs(ctrl.slope) <= 0.2);
}
