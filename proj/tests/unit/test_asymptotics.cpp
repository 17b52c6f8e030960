#include <doctest.h>

#include <cmath>

#include "diracsim/asymptotics.hpp"
#include "diracsim/coupled.hpp"
#include "diracsim/pairing.hpp"
#include "diracsim/propagator.hpp"
#include "support.hpp"

using namespace diracsim;
using namespace support;

namespace {

ModelConfig small1d(double dt = 0.01)
{
    ModelConfig c = cfg1d(256, 40.0);
    c.dt = dt;
    return c;
}

SolvingKernel kernel_for(const Model& m, double T)
{
    return solving_kernel(kernel_time(m, TimeGrid::covering(T, m.config().dt)), m.V());
}

XiOptions loose(double T)
{
    XiOptions o;
    o.horizon = T;
    o.tail_tolerance = std::numeric_limits<double>::infinity();
    return o;
}

SpinorFieldSet grad_rho(const Model& m, int n, int l)
{
    SpinorFieldSet g = m.grad_rho_hat(n, l);
    m.to_position(g);
    return g;
}

// trapezoid weights on j = 0..J
double trap(int j, int J) { return (j == 0 || j == J) ? 0.5 : 1.0; }

double norm(const Model& m, const SpinorFieldSet& f) { return field_norm(m.grid(), f); }

SpinorFieldSet local_chi(const Model& m, int fields, double x0, std::uint64_t seed)
{
    SpinorFieldSet chi = bump_fields(m, 2.0, seed, fields);
    // shift by x0 along the first axis
    SpinorFieldSet out = chi;
    const int M = m.config().M;
    const int sh = static_cast<int>(std::lround(x0 / m.grid().h()));
    for (int n = 0; n < chi.fields(); ++n)
        for (int c = 0; c < chi.spin(); ++c) {
            auto src = chi.component(n, c);
            auto dst = out.component(n, c);
            for (int i = 0; i < M; ++i) dst[static_cast<std::size_t>((i + sh + M) % M)] = src[static_cast<std::size_t>(i)];
        }
    return out;
}

}  // namespace

TEST_CASE("Xi with the identity propagator and N = exp(-s) is grad rho")
{
    Model m(small1d());
    const double dt = 0.01;
    auto tg = TimeGrid::covering(40.0, dt);
    SolvingKernel sk;
    sk.grid = tg;
    for (int j = 0; j < tg.size(); ++j) {
        const RMat e = RMat::Identity(1, 1) * std::exp(-tg.t(j));
        sk.N.push_back(e);
        sk.Ndot.push_back(-e);
        sk.Nddot.push_back(e);
        sk.Sqq.push_back(e);
        sk.Sqp.push_back(e);
    }
    XiOptions o = loose(40.0);
    o.identity_propagator = true;
    auto xi = compute_xi(m, sk, o);
    auto x0 = xi_field(m, xi, 0, 0), x1 = xi_field(m, xi, 1, 0);
    SpinorFieldSet g = m.zero_fields();
    for (int n = 0; n < m.n_fields(); ++n) g.set_field(n, grad_rho(m, n, 0));
    CHECK(max_abs_diff(x0, g) <= 1e-5 * max_abs(g));
    CHECK(max_abs_diff(x1, -1.0 * g) <= 1e-5 * max_abs(g));
}

TEST_CASE("Xi matches position-space quadrature")
{
    Model m(small1d());
    const double T = 8.0;
    auto sk = kernel_for(m, T);
    auto xi = compute_xi(m, sk, loose(T));
    const int J = sk.grid.steps;
    for (int j = 0; j < 2; ++j) {
        const auto& Nj = j == 0 ? sk.N : sk.Ndot;
        SpinorFieldSet ref = m.zero_fields();
        for (int n = 0; n < m.n_fields(); ++n) {
            auto g = grad_rho(m, n, 0);
            SpinorFieldSet acc(1, m.spin(), m.grid().size());
            for (int i = 0; i <= J; ++i)
                acc.axpy(trap(i, J) * sk.grid.dt * Nj[static_cast<std::size_t>(i)](0, 0), propagate_free(m, g, n, sk.grid.t(i)));
            ref.set_field(n, acc);
        }
        auto got = xi_field(m, xi, j, 0);
        CHECK(max_abs_diff(got, ref) <= 1e-3 * max_abs(ref));
    }
}

TEST_CASE("dictionary vanishes without coupling")
{
    Model m(decoupled(small1d()));
    auto xi = compute_xi(m, kernel_for(m, 10.0), loose(10.0));
    CHECK(xi.tail[0] == 0.0);
    CHECK(max_abs(xi_field(m, xi, 0, 0)) == 0.0);
    SpinorFieldSet chi = local_chi(m, m.n_fields(), 0.0, 3);
    ThetaOptions to;
    to.horizon = 10.0;
    CHECK(max_abs(compute_theta(m, xi, chi.field(0), 0, 1, to)) == 0.0);
    Observable Z{chi, RVec::Constant(1, 1.0), RVec::Constant(1, 2.0)};
    CHECK(max_abs_diff(build_chiZ(m, Z, xi, to), chi) == 0.0);
    auto P = projection_P(m, chi, xi, 10.0);
    CHECK(max_abs_diff(P.psi, chi) <= 1e-13 * max_abs(chi));
    CHECK(P.q.norm() == 0.0);
    CHECK(P.p.norm() == 0.0);
    SystemState Y0{chi, RVec::Constant(1, 0.3), RVec::Constant(1, -0.2)};
    CHECK_THROWS_AS(residual_q(m, Y0, xi, 1.0, 5.0), DomainError);
    auto w = wave_operator_residual(m, Y0, 10.0, std::vector<double>{2.0, 5.0});
    for (double r : w.curve.residual) CHECK(r <= 1e-12);
}

TEST_CASE("theta matches position-space quadrature")
{
    Model m(small1d());
    const double T = 6.0;
    auto xi = compute_xi(m, kernel_for(m, T), loose(T));
    SpinorFieldSet chi = local_chi(m, 1, 3.0, 5);
    ThetaOptions to;
    to.horizon = T;
    const double dt = m.config().dt;
    const int J = static_cast<int>(std::lround(T / dt));
    for (auto [n, r] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 0}}) {
        auto got = compute_theta(m, xi, chi, n, r, to);
        SpinorFieldSet X = xi_field(m, xi, 0, 0).field(n);
        SpinorFieldSet gr = grad_rho(m, r, 0);
        gr *= cd(0.0, 1.0);
        SpinorFieldSet ref(1, m.spin(), m.grid().size());
        for (int i = 0; i <= J; ++i) {
            const double s = i * dt;
            const double g = real_pairing(m.grid(), propagate_free(m, gr, r, s), chi);
            ref.axpy(trap(i, J) * dt * g, propagate_free(m, X, n, s));
        }
        CHECK(max_abs_diff(got, ref) <= 2e-3 * max_abs(ref));
    }
    CHECK(max_abs(compute_theta(m, xi, m.zero_field(), 0, 1, to)) == 0.0);
}

TEST_CASE("chi^Z assembly")
{
    Model m(small1d());
    auto xi = compute_xi(m, kernel_for(m, 6.0), loose(6.0));
    ThetaOptions to;
    to.horizon = 6.0;
    Observable Zu{m.zero_fields(), RVec::Constant(1, 1.7), RVec::Zero(1)};
    auto cz = build_chiZ(m, Zu, xi, to);
    auto x0 = xi_field(m, xi, 0, 0);
    CHECK(max_abs_diff(cz, 1.7 * x0) <= 1e-13 * max_abs(x0));

    SpinorFieldSet chi = local_chi(m, m.n_fields(), -2.0, 7);
    Observable Z1{chi, RVec::Constant(1, 0.4), RVec::Constant(1, -0.9)};
    Observable Z2{m.zero_fields(), RVec::Constant(1, 0.0), RVec::Constant(1, 0.0)};
    Z2.chi = local_chi(m, m.n_fields(), 4.0, 8);
    Observable Zs{0.5 * Z1.chi + Z2.chi, 0.5 * Z1.u + Z2.u, 0.5 * Z1.v + Z2.v};
    auto a = build_chiZ(m, Z1, xi, to), b = build_chiZ(m, Z2, xi, to), s = build_chiZ(m, Zs, xi, to);
    CHECK(max_abs_diff(s, 0.5 * a + b) <= 1e-12 * max_abs(s));
    CHECK(std::isfinite(norm(m, s)));
}

TEST_CASE("horizon doubling stays within the tail bounds")
{
    Model m(cfg1d(4096, 400.0));
    auto sk = kernel_for(m, 200.0);
    auto a = compute_xi(m, sk, loose(100.0)), b = compute_xi(m, sk, loose(200.0));
    for (int j = 0; j < 2; ++j) {
        const double na = norm(m, xi_field(m, a, j, 0)), nb = norm(m, xi_field(m, b, j, 0));
        MESSAGE("j=" << j << " |Xi| " << na << " -> " << nb << " tail " << a.tail[static_cast<std::size_t>(j)]);
        CHECK(std::abs(na - nb) <= a.tail[static_cast<std::size_t>(j)]);
        CHECK(a.slope[static_cast<std::size_t>(j)] < -1.0);
    }
    SpinorFieldSet chi = local_chi(m, 1, 1.0, 9);
    ThetaOptions t1, t2;
    t1.horizon = 100.0;
    t2.horizon = 200.0;
    const double c1 = norm(m, compute_theta(m, b, chi, 0, 0, t1)) / norm(m, chi);
    const double c2 = norm(m, compute_theta(m, b, chi, 0, 0, t2)) / norm(m, chi);
    MESSAGE("theta constant " << c1 << " -> " << c2);
    CHECK(std::abs(c1 - c2) <= 0.05 * c2);
}

TEST_CASE("a horizon shorter than the decay is rejected")
{
    Model m(small1d(0.05));
    auto sk = kernel_for(m, 4.0);
    XiOptions o;
    o.horizon = 4.0;
    o.tail_tolerance = 1e-3;
    CHECK_THROWS_AS(compute_xi(m, sk, o), HorizonError);
    o.horizon = 8.0;
    CHECK_THROWS_AS(compute_xi(m, sk, o), HorizonError);
}

TEST_CASE("projection P: particle part and Z field")
{
    Model m(small1d());
    const double T = 6.0;
    auto xi = compute_xi(m, kernel_for(m, T), loose(T));
    SpinorFieldSet psi = local_chi(m, m.n_fields(), 1.0, 11);
    auto P = projection_P(m, psi, xi, T);
    CHECK(P.q(0) == doctest::Approx(real_pairing(m.grid(), psi, xi_field(m, xi, 0, 0))).epsilon(1e-10));
    CHECK(P.p(0) == doctest::Approx(real_pairing(m.grid(), psi, xi_field(m, xi, 1, 0))).epsilon(1e-10));

    // Z_n = i int_0^T W_n(s) d rho_n h(s) ds, h(s) = <psi, W(s) Xi^0>
    const double dt = m.config().dt;
    const int J = static_cast<int>(std::lround(T / dt));
    auto X = xi_field(m, xi, 0, 0);
    SpinorFieldSet ref = psi;
    for (int i = 0; i <= J; ++i) {
        const double s = i * dt;
        const double h = real_pairing(m.grid(), psi, propagate_free_set(m, X, s));
        for (int n = 0; n < m.n_fields(); ++n) {
            SpinorFieldSet full = m.zero_fields();
            full.set_field(n, propagate_free(m, grad_rho(m, n, 0), n, s));
            ref.axpy(cd(0.0, trap(i, J) * dt * h), full);
        }
    }
    CHECK(max_abs_diff(P.psi, ref) <= 1e-3 * max_abs(ref - psi));
    auto Z0 = projection_P(m, m.zero_fields(), xi, T);
    CHECK(max_abs(Z0.psi) == 0.0);
}

TEST_CASE("free oscillator")
{
    RMat V(2, 2);
    V << 2.0, 0.5, 0.5, 1.0;
    RVec q0(2), p0(2);
    q0 << 0.3, -1.0;
    p0 << 0.7, 0.2;
    auto [q, p] = free_oscillator(V, q0, p0, 3.7);
    auto [qb, pb] = free_oscillator(V, q, p, -3.7);
    CHECK((qb - q0).norm() <= 1e-13);
    CHECK((pb - p0).norm() <= 1e-13);
    const double e0 = 0.5 * (q0.dot(V * q0) + p0.squaredNorm()), e1 = 0.5 * (q.dot(V * q) + p.squaredNorm());
    CHECK(e1 == doctest::Approx(e0).epsilon(1e-13));
    // qddot = -V q by central difference
    const double h = 1e-4;
    auto [qp, pp] = free_oscillator(V, q0, p0, 3.7 + h);
    auto [qm, pm] = free_oscillator(V, q0, p0, 3.7 - h);
    CHECK(((qp - 2.0 * q + qm) / (h * h) + V * q).norm() <= 1e-5);
    CHECK(((qp - qm) / (2.0 * h) - p).norm() <= 1e-7);
}
