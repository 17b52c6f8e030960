#include <doctest.h>

#include "diracsim/kernel.hpp"
#include "diracsim/volterra.hpp"
#include "support.hpp"

using namespace diracsim;
using namespace support;

namespace {

MemoryKernel zero_kernel(int d, double dt, double T)
{
    MemoryKernel mk;
    mk.grid = TimeGrid::covering(T, dt);
    mk.H.assign(static_cast<std::size_t>(mk.grid.size()), RMat::Zero(d, d));
    return mk;
}

// H(t) = -exp(-t) with forcing chosen so that q(t) = sin t, q(0) = 0, q'(0) = 1.
double manufactured_error(double dt)
{
    const double V = 2.0, T = 10.0;
    MemoryKernel mk;
    mk.grid = TimeGrid::covering(T, dt);
    std::vector<RVec> F;
    for (int j = 0; j < mk.grid.size(); ++j) {
        const double t = mk.grid.t(j);
        mk.H.push_back(RMat::Constant(1, 1, -std::exp(-t)));
        // int_0^t exp(-(t-s)) sin s ds = (sin t - cos t + exp(-t)) / 2
        const double conv = 0.5 * (std::sin(t) - std::cos(t) + std::exp(-t));
        F.push_back(RVec::Constant(1, -std::sin(t) + V * std::sin(t) + conv));
    }
    auto sol = solve_particle(mk, F, RMat::Constant(1, 1, V), RVec::Zero(1), RVec::Ones(1));
    double e = 0.0;
    for (int j = 0; j < mk.grid.size(); ++j) e = std::max(e, std::abs(sol.q[static_cast<std::size_t>(j)](0) - std::sin(mk.grid.t(j))));
    return e;
}

}  // namespace

TEST_CASE("free oscillator closed form")
{
    // second-order phase error grows like kappa^3 dt^2 T / 24
    const double kappa = 1.0;
    auto mk = zero_kernel(1, 1e-3, 10.0);
    auto sol = solve_particle(mk, {}, RMat::Constant(1, 1, kappa * kappa), RVec::Ones(1), RVec::Zero(1));
    double e = 0.0;
    for (int j = 0; j < mk.grid.size(); ++j)
        e = std::max(e, std::abs(sol.q[static_cast<std::size_t>(j)](0) - std::cos(kappa * mk.grid.t(j))));
    CHECK(e <= 1e-6);

    auto zero = solve_particle(mk, {}, RMat::Constant(1, 1, 2.0), RVec::Zero(1), RVec::Zero(1));
    for (const auto& q : zero.q) CHECK(q(0) == 0.0);
}

TEST_CASE("manufactured solution converges at second order")
{
    const double e1 = manufactured_error(0.02), e2 = manufactured_error(0.01), e3 = manufactured_error(0.005);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    MESSAGE("errors " << e1 << " " << e2 << " " << e3);
    CHECK(o1 >= 1.8);
    CHECK(o1 <= 2.2);
    CHECK(o2 >= 1.8);
    CHECK(o2 <= 2.2);
}

TEST_CASE("grid checks")
{
    auto mk = zero_kernel(1, 0.1, 1.0);
    std::vector<RVec> shortF(3, RVec::Zero(1));
    CHECK_THROWS_AS(solve_particle(mk, shortF, RMat::Identity(1, 1), RVec::Zero(1), RVec::Zero(1)), ShapeError);
    std::vector<double> good{0.0, 0.1, 0.2, 0.3}, bad{0.0, 0.1, 0.25, 0.3};
    CHECK(uniform_grid(good).steps == 3);
    CHECK_THROWS_AS(uniform_grid(bad), DomainError);
}

TEST_CASE("solving kernel of the free oscillator")
{
    const double kappa = 1.3;
    auto mk = zero_kernel(1, 1e-3, 5.0);
    auto sk = solving_kernel(mk, RMat::Constant(1, 1, kappa * kappa));
    CHECK(sk.N[0](0, 0) == 0.0);
    CHECK(sk.Ndot[0](0, 0) == 1.0);
    CHECK(sk.Nddot[0](0, 0) == 0.0);
    double e = 0.0;
    for (int j = 0; j < mk.grid.size(); ++j)
        e = std::max(e, std::abs(sk.N[static_cast<std::size_t>(j)](0, 0) - std::sin(kappa * mk.grid.t(j)) / kappa));
    CHECK(e <= 1e-6);
    // int_0^inf exp(-lambda t) sin(kappa t) / kappa dt = 1 / (lambda^2 + kappa^2)
    auto long_mk = zero_kernel(1, 2e-3, 40.0);
    auto lk = solving_kernel(long_mk, RMat::Constant(1, 1, kappa * kappa));
    const cd lam(1.0, 0.5);
    CHECK(std::abs(laplace_transform(lk.N, 2e-3, lam)(0, 0) - 1.0 / (lam * lam + kappa * kappa)) <= 1e-6);
}

TEST_CASE("solving kernel reconstructs trajectories of the coupled kernel")
{
    Model m(cfg3d(32, 32.0));
    auto mk = kernel_time(m, TimeGrid::covering(20.0, 0.05));
    auto sk = solving_kernel(mk, m.V());
    CHECK(sk.N[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK((sk.Ndot[0] - RMat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sk.Nddot[0].cwiseAbs().maxCoeff() == 0.0);
    const RVec q0 = random_vec(3, 1), p0 = random_vec(3, 2);
    auto sol = solve_particle(mk, {}, m.V(), q0, p0);
    double e = 0.0, ep = 0.0;
    for (int j = 0; j < mk.grid.size(); ++j) {
        e = std::max(e, (sk.position(j, q0, p0) - sol.q[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff());
        ep = std::max(ep, (sk.momentum(j, q0, p0) - sol.p[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff());
    }
    CHECK(e <= 1e-9);
    CHECK(ep <= 1e-9);
}

TEST_CASE("discrete position response equals Ndot")
{
    Model m(cfg3d(32, 32.0));
    auto sk = solving_kernel(kernel_time(m, TimeGrid::covering(10.0, 0.04)), m.V());
    double e = 0.0, f = 0.0, g = 0.0;
    for (std::size_t j = 0; j < sk.N.size(); ++j) {
        e = std::max(e, (sk.Sqq[j] - sk.Ndot[j]).cwiseAbs().maxCoeff());
        f = std::max(f, (sk.Sqp[j] - sk.Nddot[j]).cwiseAbs().maxCoeff());
        g = std::max(g, sk.Nddot[j].cwiseAbs().maxCoeff());
    }
    CHECK(e <= 1e-12);
    CHECK(f <= 1e-2 * g);
}

TEST_CASE("solution map is linear")
{
    Model m(cfg3d(32, 32.0));
    auto mk = kernel_time(m, TimeGrid::covering(10.0, 0.05));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    auto randF = [&] {
        std::vector<RVec> F;
        for (int j = 0; j < mk.grid.size(); ++j) F.push_back(RVec::NullaryExpr(3, [&] { return g(rng); }));
        return F;
    };
    auto F1 = randF(), F2 = randF();
    const RVec a1 = random_vec(3, 4), b1 = random_vec(3, 5), a2 = random_vec(3, 6), b2 = random_vec(3, 7);
    auto s1 = solve_particle(mk, F1, m.V(), a1, b1);
    auto s2 = solve_particle(mk, F2, m.V(), a2, b2);
    std::vector<RVec> F12;
    for (std::size_t j = 0; j < F1.size(); ++j) F12.push_back(2.0 * F1[j] - 0.5 * F2[j]);
    auto s12 = solve_particle(mk, F12, m.V(), 2.0 * a1 - 0.5 * a2, 2.0 * b1 - 0.5 * b2);
    double e = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < F1.size(); ++j) {
        e = std::max(e, (s12.q[j] - 2.0 * s1.q[j] + 0.5 * s2.q[j]).cwiseAbs().maxCoeff());
        scale = std::max(scale, s12.q[j].cwiseAbs().maxCoeff());
    }
    CHECK(e <= 1e-10 * scale);
}

TEST_CASE("forced trajectories follow the solving-kernel representation")
{
    // q(t) = Ndot q0 + N p0 + int_0^t N(tau) F(t - tau) dtau; with the convolution
    // taken by the trapezoid rule this holds exactly for the discrete solution.
    Model m(cfg3d(32, 32.0));
    auto residual = [&](double dt) {
        auto mk = kernel_time(m, TimeGrid::covering(10.0, dt));
        auto sk = solving_kernel(mk, m.V());
        std::vector<RVec> F;
        for (int j = 0; j < mk.grid.size(); ++j) {
            const double t = mk.grid.t(j);
            F.push_back(RVec::Constant(3, std::sin(1.3 * t)) + 0.3 * RVec::Unit(3, 1) * std::cos(0.4 * t));
        }
        const RVec q0 = random_vec(3, 8), p0 = random_vec(3, 9);
        auto sol = solve_particle(mk, F, m.V(), q0, p0);
        double e = 0.0;
        for (int j = 0; j < mk.grid.size(); ++j) {
            RVec conv = RVec::Zero(3);
            for (int k = 0; k <= j; ++k) {
                const double w = (k == 0 || k == j) ? 0.5 : 1.0;
                conv += w * dt * sk.N[static_cast<std::size_t>(k)] * F[static_cast<std::size_t>(j - k)];
            }
            RVec rep = sk.Ndot[static_cast<std::size_t>(j)] * q0 + sk.N[static_cast<std::size_t>(j)] * p0 + conv;
            e = std::max(e, (rep - sol.q[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff());
        }
        return e;
    };
    CHECK(residual(0.02) <= 1e-8);
    CHECK(residual(0.05) <= 1e-8);
}

TEST_CASE("decay fits")
{
    auto mk = zero_kernel(3, 0.05, 100.0);
    auto sk = solving_kernel(mk, RMat::Identity(3, 3) * 2.0);
    auto kd = fit_kernel_decay(sk, 10.0, 100.0, 2.0 * pi);
    CHECK(std::abs(kd.N.slope) <= 0.05);
    CHECK(std::abs(kd.Ndot.slope) <= 0.05);
    CHECK_THROWS_AS(fit_kernel_decay(sk, 10.0, 80.0, 2.0 * pi), DomainError);
}

TEST_CASE("3D solving kernel decays like t^-3/2")
{
    for (auto masses : {std::vector<double>{1.0, 1.5}, std::vector<double>{1.0, 1.0}}) {
        Model m(cfg3d(128, 512.0 / 3.0, masses));
        auto sk = solving_kernel(kernel_time(m, TimeGrid::covering(100.0, 0.05)), m.V());
        auto kd = fit_kernel_decay(sk, 10.0, 100.0, 2.0 * pi / m.min_mass());
        MESSAGE("slopes " << kd.N.slope << " " << kd.Ndot.slope << " " << kd.Nddot.slope);
        CHECK(kd.N.slope <= -1.35);
        CHECK(kd.Ndot.slope <= -1.35);
        CHECK(kd.Nddot.slope <= -1.35);
    }
}

TEST_CASE("Laplace transform of the solving kernel is the inverse resolvent")
{
    Model m(cfg3d(64, 256.0 / 3.0));
    auto sk = solving_kernel(kernel_time(m, TimeGrid::covering(70.0, 0.005)), m.V());
    const double r = laplace_check(m, sk, {cd(1.0, 0.0), cd(0.3, 2.0), cd(0.5, -1.0), cd(0.8, 0.5), cd(2.0, 3.0)});
    MESSAGE("laplace residual " << r);
    CHECK(r <= 1e-4);
    CHECK_THROWS_AS(laplace_check(m, sk, {cd(0.1, 0.0)}), DomainError);
}
