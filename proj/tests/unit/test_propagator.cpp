#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "diracsim/pairing.hpp"
#include "diracsim/propagator.hpp"
#include "support.hpp"

using namespace diracsim;
using namespace support;

namespace {

// e^{i k.x} v on the grid for an integer mode vector.
SpinorFieldSet plane_wave(const Model& m, const std::array<int, 3>& mode, const CVec& v)
{
    SpinorFieldSet f(1, m.spin(), m.grid().size());
    const double dk = 2.0 * pi / m.grid().L();
    for (std::size_t idx = 0; idx < m.grid().size(); ++idx) {
        const auto x = m.grid().position(idx);
        double phase = 0.0;
        for (int j = 0; j < m.dim(); ++j) phase += dk * mode[j] * x[j];
        for (int c = 0; c < m.spin(); ++c) f.component(0, c)[idx] = std::polar(1.0, phase) * v(c);
    }
    return f;
}

double rel(const SpinorFieldSet& a, const SpinorFieldSet& b) { return max_abs_diff(a, b) / max_abs(b); }

}  // namespace

TEST_CASE("closed-form multiplier equals the dense matrix exponential on plane waves")
{
    for (int d : {1, 3}) {
        Model m(d == 1 ? decoupled(cfg1d(64, 20.0)) : decoupled(cfg3d(16, 12.0)));
        std::mt19937_64 rng(42 + d);
        std::uniform_int_distribution<int> mode(-7, 7);
        std::uniform_real_distribution<double> tt(-5.0, 5.0);
        const auto& alg = m.algebra();
        for (int trial = 0; trial < 10; ++trial) {
            std::array<int, 3> md{mode(rng), d == 3 ? mode(rng) : 0, d == 3 ? mode(rng) : 0};
            const double t = tt(rng);
            const int n = trial % 2;
            CVec v = CVec::Zero(m.spin());
            for (int c = 0; c < m.spin(); ++c) v(c) = cd(std::cos(c + trial), std::sin(2.0 * c - trial));
            double k[3] = {0, 0, 0};
            for (int j = 0; j < d; ++j) k[j] = 2.0 * pi / m.grid().L() * md[j];
            // i psi_t = (-i alpha.grad + beta m) psi acting on e^{ik.x} gives alpha.k + beta m
            CMat D = alg.symbol(k, m.mass(n));
            CMat U = (cd(0.0, -t) * D).exp();
            // (alpha.k + beta m)^2 = (k^2 + m^2) I
            const double w2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + m.mass(n) * m.mass(n);
            CHECK((D * D - w2 * CMat::Identity(m.spin(), m.spin())).cwiseAbs().maxCoeff() <= 1e-12);
            auto out = propagate_free(m, plane_wave(m, md, v), n, t);
            auto expect = plane_wave(m, md, U * v);
            CHECK(rel(out, expect) <= 1e-12);
        }
    }
}

TEST_CASE("propagator identities in 1D")
{
    Model m(decoupled(cfg1d(4096, 400.0)));
    auto psi = random_fields(m, 7, 1);
    const double n0 = field_norm(m.grid(), psi);

    CHECK(rel(propagate_free(m, psi, 0, 0.0), psi) <= 1e-13);
    for (double t : {0.5, 3.7, 25.0, 100.0})
        CHECK(std::abs(field_norm(m.grid(), propagate_free(m, psi, 1, t)) - n0) <= 1e-12 * n0);

    auto a = propagate_free(m, propagate_free(m, psi, 0, 1.3), 0, 2.1);
    CHECK(rel(a, propagate_free(m, psi, 0, 3.4)) <= 1e-11);
    auto back = propagate_free(m, propagate_free(m, psi, 1, 17.0), 1, -17.0);
    CHECK(rel(back, psi) <= 1e-11);
}

TEST_CASE("propagator identities in 3D")
{
    Model m(decoupled(cfg3d(32, 24.0)));
    auto psi = random_fields(m, 8, 1);
    const double n0 = field_norm(m.grid(), psi);
    CHECK(rel(propagate_free(m, psi, 0, 0.0), psi) <= 1e-13);
    for (double t : {1.0, 50.0, 100.0})
        CHECK(std::abs(field_norm(m.grid(), propagate_free(m, psi, 0, t)) - n0) <= 1e-12 * n0);
    auto a = propagate_free(m, propagate_free(m, psi, 1, 0.7), 1, 4.1);
    CHECK(rel(a, propagate_free(m, psi, 1, 4.8)) <= 1e-11);
    CHECK(rel(propagate_free(m, propagate_free(m, psi, 0, 9.0), 0, -9.0), psi) <= 1e-11);
}

TEST_CASE("constant field rotates with exp(-i beta m t)")
{
    Model m(decoupled(cfg3d(8, 8.0)));
    CVec v(4);
    v << 1.0, cd(0.0, 2.0), -1.0, 0.5;
    auto psi = plane_wave(m, {0, 0, 0}, v);
    const double t = 2.3, mass = m.mass(1);
    auto out = propagate_free(m, psi, 1, t);
    for (int c = 0; c < 4; ++c) {
        const double sign = c < 2 ? 1.0 : -1.0;
        const cd expect = std::polar(1.0, -sign * mass * t) * v(c);
        CHECK(std::abs(out.component(0, c)[5] - expect) <= 1e-13);
    }
}

TEST_CASE("propagate_free_set evolves each field with its own mass")
{
    Model m(decoupled(cfg1d(256, 40.0)));
    auto psi = random_fields(m, 9);
    auto all = propagate_free_set(m, psi, 1.9);
    for (int n = 0; n < 2; ++n) {
        auto single = propagate_free(m, psi.field(n), n, 1.9);
        CHECK(max_abs_diff(all.field(n), single) == 0.0);
    }
    CHECK(rel(propagate_free_set(m, psi, 0.0), psi) <= 1e-13);
    // distinct masses give distinct evolutions of the same data
    SpinorFieldSet same = psi;
    same.set_field(1, psi.field(0));
    auto ev = propagate_free_set(m, same, 1.9);
    CHECK(max_abs_diff(ev.field(0), ev.field(1)) > 1e-3);
}

TEST_CASE("adjoint of W(t) is W(-t)")
{
    Model m(decoupled(cfg3d(16, 16.0)));
    auto psi = random_fields(m, 10);
    auto chi = random_fields(m, 11);
    const double scale = field_norm(m.grid(), psi) * field_norm(m.grid(), chi);
    CHECK(adjoint_check(m, psi, chi, 0.0) <= 1e-10 * scale);
    CHECK(adjoint_check(m, psi, chi, 3.7) <= 1e-10 * scale);
    CHECK(adjoint_check(m, psi, psi, 11.0) <= 1e-10 * scale);
}

TEST_CASE("local decay rejects degenerate input and small boxes")
{
    Model m(decoupled(cfg1d(512, 50.0)));
    std::vector<double> times{10, 20, 30};
    CHECK_THROWS_AS(measure_local_decay(m, m.zero_field(), 0, 2.0, times), DegenerateInputError);
    auto psi = bump_fields(m, 2.0, 1, 1);
    std::vector<double> late{10, 20, 40};
    CHECK_THROWS_AS(measure_local_decay(m, psi, 0, 2.0, late), BoxSizeError);
}

TEST_CASE("3D local decay of the free propagator")
{
    Model m(decoupled(cfg3d(128, 512.0 / 3.0)));
    auto psi = bump_fields(m, 2.0, 3, 1);
    auto times = log_spaced(10.0, 80.0, 24);
    auto fit = measure_local_decay(m, psi, 0, 2.0, times, 2.0 * pi / m.mass(0));
    MESSAGE("3D free local decay slope " << fit.slope);
    CHECK(fit.slope <= -1.35);
    CHECK(fit.slope >= -1.7);
}

TEST_CASE("1D local decay is recorded")
{
    Model m(decoupled(cfg1d(4096, 400.0)));
    auto psi = bump_fields(m, 2.0, 4, 1);
    auto times = log_spaced(10.0, 150.0, 24);
    auto fit = measure_local_decay(m, psi, 0, 2.0, times, 2.0 * pi / m.mass(0));
    MESSAGE("1D free local decay slope " << fit.slope);
    CHECK(fit.slope < 0.0);
}
