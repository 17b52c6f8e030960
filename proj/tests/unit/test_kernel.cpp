#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "diracsim/decay_fit.hpp"
#include "diracsim/kernel.hpp"
#include "diracsim/oscillatory.hpp"
#include "diracsim/volterra.hpp"
#include "support.hpp"

using namespace diracsim;
using namespace support;

namespace {

Model with_amplitudes(ModelConfig c, std::vector<double> amp)
{
    c.coupling.amplitudes.assign(static_cast<std::size_t>(c.n_fields), amp);
    c.V_auto = false;
    c.V = RMat::Identity(c.dimension, c.dimension) * 50.0;
    return Model(c);
}

}  // namespace

TEST_CASE("spectral weight signs follow beta")
{
    auto upper = with_amplitudes(cfg3d(16, 16.0), {1, 0, 0, 0});
    auto lower = with_amplitudes(cfg3d(16, 16.0), {0, 0, 1, 0});
    auto bu = spectral_weight(upper).B[0];
    auto bl = spectral_weight(lower).B[0];
    for (std::size_t i = 0; i < bu.size(); ++i) {
        CHECK(bu[i] >= 0.0);
        CHECK(bl[i] <= 0.0);
        CHECK(bu[i] == doctest::Approx(-bl[i]));
    }
}

TEST_CASE("Gaussian coupling has B(0) = (2 pi)^d")
{
    for (int d : {1, 3}) {
        auto c = d == 1 ? cfg1d(512, 40.0) : cfg3d(32, 24.0);
        c.coupling.radius = 1.0;
        auto m = with_amplitudes(c, d == 1 ? std::vector<double>{1, 0} : std::vector<double>{1, 0, 0, 0});
        const double expect = std::pow(2.0 * pi, d);
        CHECK(std::abs(spectral_weight(m).B[0][0] - expect) <= 1e-6 * expect);
    }
}

TEST_CASE("kernel_time basic structure")
{
    Model m(cfg3d(32, 32.0));
    auto mk = kernel_time(m, TimeGrid{0.1, 50});
    CHECK(mk.H[0].cwiseAbs().maxCoeff() == 0.0);
    for (const auto& H : mk.H) CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // recurrence vs direct evaluation of the sine sum
    CHECK((mk.H[37] - kernel_time_at(m, 3.7)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("kernel_time matches the propagator pairing")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> tt(0.0, 30.0);
    for (int d : {1, 3}) {
        Model m(d == 1 ? cfg1d(1024, 100.0) : cfg3d(32, 32.0));
        for (int i = 0; i < 5; ++i) {
            const double t = tt(rng);
            const RMat a = kernel_time_at(m, t);
            const RMat b = kernel_direct(m, t);
            CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8);
        }
        CHECK(kernel_direct(m, 0.0).cwiseAbs().maxCoeff() <= 1e-12);
        Model z(decoupled(d == 1 ? cfg1d(256, 40.0) : cfg3d(16, 16.0)));
        CHECK(kernel_direct(z, 1.3).cwiseAbs().maxCoeff() == 0.0);
        CHECK(kernel_time_at(z, 1.3).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("htilde equals the Laplace transform of H")
{
    Model m(cfg3d(32, 32.0));
    const double dt = 0.0025;
    auto mk = kernel_time(m, TimeGrid::covering(25.0, dt));
    for (cd lambda : {cd(1.0, 0.0), cd(0.5, 1.0), cd(2.0, -3.0)}) {
        const CMat L = laplace_transform(mk.H, dt, lambda);
        CHECK((L - htilde(m, lambda)).cwiseAbs().maxCoeff() <= 1e-5);
    }
    CHECK_THROWS_AS(htilde(m, cd(0.0, 1.0)), DomainError);
    CHECK_THROWS_AS(htilde(m, cd(-0.1, 0.0)), DomainError);
}

TEST_CASE("htilde is a Riemann sum over the grid")
{
    Model m(cfg1d(256, 30.0));
    const cd lambda(0.7, 0.4);
    auto sw = spectral_weight(m);
    cd direct = 0.0;
    for (int n = 0; n < m.n_fields(); ++n)
        for (std::size_t idx = 0; idx < m.grid().size(); ++idx) {
            const double k = m.fourier().wavevector(idx)[0];
            direct += m.mass(n) * k * k * sw.B[static_cast<std::size_t>(n)][idx] /
                      (k * k + m.mass(n) * m.mass(n) + lambda * lambda);
        }
    direct /= m.grid().L();
    CHECK(std::abs(htilde(m, lambda)(0, 0) - direct) <= 1e-13 * std::abs(direct));
}

TEST_CASE("htilde vanishes for large real lambda")
{
    Model m(cfg3d(32, 32.0));
    double prev = htilde(m, 10.0).norm() * 10.0;
    for (double l : {100.0, 1000.0}) {
        const double v = htilde(m, l).norm() * l;
        CHECK(v < prev);
        prev = v;
    }
    auto r = resolvent(m, cd(1000.0, 0.0));
    CHECK((r.inverse * 1e6 - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("decoupled resolvent is singular at the oscillator frequencies")
{
    auto c = decoupled(cfg3d(8, 8.0));
    c.V = RMat::Identity(3, 3) * 4.0;
    c.V(2, 2) = 9.0;
    Model m(c);
    const CMat zero = CMat::Zero(3, 3);
    auto at = [&](double w) { return resolvent_from_htilde(m, cd(0.0, w), zero); };
    CHECK_FALSE(at(2.0).invertible);
    CHECK_FALSE(at(3.0).invertible);
    CHECK(at(2.5).invertible);
    CHECK((at(2.5).N - (m.V() - 6.25 * RMat::Identity(3, 3)).cast<cd>()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("condition A2")
{
    auto z = decoupled(cfg3d(16, 16.0));
    z.V = RMat::Identity(3, 3) * 1.5;
    auto rep = check_A2(Model(z));
    CHECK(rep.K.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rep.pass_A2);
    z.V = RMat::Identity(3, 3) * 0.9;
    CHECK_FALSE(check_A2(Model(z)).pass_A2);
    CHECK((suggest_V(Model(decoupled(cfg3d(16, 16.0))), 1.0) - 2.0 * RMat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);

    Model m(cfg3d(32, 32.0));
    auto r = check_A2(m);
    CHECK(r.min_eig_A2 >= 0.5 - 1e-9);
    CHECK(r.min_eig_A2 <= 0.5 + 1e-9);
    CHECK(r.pass_A3);
    CHECK((r.K - r.K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<RMat>(r.K).eigenvalues().minCoeff() >= -1e-14);
    CHECK_THROWS_AS(suggest_V(m, 0.0), DomainError);

    // K is quadratic in the coupling
    const RMat K1 = a2_matrix(m);
    const RMat K3 = a2_matrix(m.with_coupling_scale(3.0));
    CHECK((K3 - 9.0 * K1).cwiseAbs().maxCoeff() <= 1e-12 * K3.cwiseAbs().maxCoeff());
}

TEST_CASE("3D memory kernel decays like t^-3/2")
{
    Model m(cfg3d(128, 512.0 / 3.0));
    auto mk = kernel_time(m, TimeGrid::covering(80.0, 0.05));
    std::vector<double> t, v;
    for (int j = 0; j < mk.grid.size(); ++j) {
        t.push_back(mk.grid.t(j));
        v.push_back(mk.H[static_cast<std::size_t>(j)].cwiseAbs().maxCoeff());
    }
    auto fit = fit_envelope(t, v, 2.0 * pi / m.min_mass(), 10.0, 80.0);
    MESSAGE("kernel decay slope " << fit.slope);
    CHECK(fit.slope <= -1.35);
}
