#include "diracsim/volterra.hpp"

#include <cmath>

namespace diracsim {

TrajectorySolution solve_particle(const MemoryKernel& H, const std::vector<RVec>& F, const RMat& V, const RVec& q0,
                                  const RVec& p0)
{
    const TimeGrid& tg = H.grid;
    const int J = tg.size();
    const int d = static_cast<int>(V.rows());
    if (static_cast<int>(H.H.size()) != J) throw ShapeError("solve_particle: kernel samples do not match the grid");
    if (!F.empty() && static_cast<int>(F.size()) != J) throw ShapeError("solve_particle: forcing samples do not match the grid");
    if (q0.size() != d || p0.size() != d) throw ShapeError("solve_particle: initial data have the wrong dimension");
    for (const auto& h : H.H)
        if (h.rows() != d || h.cols() != d) throw ShapeError("solve_particle: kernel matrices have the wrong size");
    const double dt = tg.dt;
    const std::size_t dd = static_cast<std::size_t>(d) * d;

    std::vector<double> h(static_cast<std::size_t>(J) * dd);
    for (int j = 0; j < J; ++j)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) h[j * dd + a * d + b] = H.H[static_cast<std::size_t>(j)](a, b);
    std::vector<double> q(static_cast<std::size_t>(J) * d), p(static_cast<std::size_t>(J) * d),
        acc(static_cast<std::size_t>(J) * d);

    auto rhs = [&](int n, double* out) {
        // -V q_n + dt [ H_n q_0 / 2 + sum_{j=1}^{n-1} H_{n-j} q_j + H_0 q_n / 2 ] + F_n
        const double* qn = &q[static_cast<std::size_t>(n) * d];
        for (int a = 0; a < d; ++a) {
            double s = 0.0;
            for (int b = 0; b < d; ++b) s -= V(a, b) * qn[b];
            out[a] = s;
        }
        if (n > 0) {
            std::vector<double> conv(static_cast<std::size_t>(d), 0.0);
            auto add = [&](int lag, int j, double w) {
                const double* hl = &h[static_cast<std::size_t>(lag) * dd];
                const double* qj = &q[static_cast<std::size_t>(j) * d];
                for (int a = 0; a < d; ++a) {
                    double s = 0.0;
                    for (int b = 0; b < d; ++b) s += hl[a * d + b] * qj[b];
                    conv[static_cast<std::size_t>(a)] += w * s;
                }
            };
            add(n, 0, 0.5);
            for (int j = 1; j < n; ++j) add(n - j, j, 1.0);
            add(0, n, 0.5);
            for (int a = 0; a < d; ++a) out[a] += dt * conv[static_cast<std::size_t>(a)];
        }
        if (!F.empty())
            for (int a = 0; a < d; ++a) out[a] += F[static_cast<std::size_t>(n)](a);
    };

    for (int a = 0; a < d; ++a) {
        q[static_cast<std::size_t>(a)] = q0(a);
        p[static_cast<std::size_t>(a)] = p0(a);
    }
    rhs(0, &acc[0]);
    std::vector<double> half(static_cast<std::size_t>(d));
    for (int n = 0; n + 1 < J; ++n) {
        const std::size_t o = static_cast<std::size_t>(n) * d, o1 = o + d;
        for (int a = 0; a < d; ++a) {
            half[static_cast<std::size_t>(a)] = p[o + a] + 0.5 * dt * acc[o + a];
            q[o1 + a] = q[o + a] + dt * half[static_cast<std::size_t>(a)];
        }
        rhs(n + 1, &acc[o1]);
        for (int a = 0; a < d; ++a) p[o1 + a] = half[static_cast<std::size_t>(a)] + 0.5 * dt * acc[o1 + a];
    }

    TrajectorySolution sol;
    sol.grid = tg;
    sol.q.resize(static_cast<std::size_t>(J));
    sol.p.resize(static_cast<std::size_t>(J));
    sol.a.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        sol.q[static_cast<std::size_t>(j)] = Eigen::Map<const RVec>(&q[static_cast<std::size_t>(j) * d], d);
        sol.p[static_cast<std::size_t>(j)] = Eigen::Map<const RVec>(&p[static_cast<std::size_t>(j) * d], d);
        sol.a[static_cast<std::size_t>(j)] = Eigen::Map<const RVec>(&acc[static_cast<std::size_t>(j) * d], d);
    }
    return sol;
}

TimeGrid uniform_grid(std::span<const double> times)
{
    if (times.size() < 2) throw DomainError("time grid needs at least two points");
    if (std::abs(times[0]) > 1e-12) throw DomainError("time grid must start at 0");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw DomainError("time grid must be increasing");
    for (std::size_t j = 0; j < times.size(); ++j)
        if (std::abs(times[j] - j * dt) > 1e-9 * (1.0 + std::abs(times[j])))
            throw DomainError("non-uniform time grid rejected");
    TimeGrid g;
    g.dt = dt;
    g.steps = static_cast<int>(times.size()) - 1;
    return g;
}

RVec SolvingKernel::position(int j, const RVec& q0, const RVec& p0) const
{
    return Sqq[static_cast<std::size_t>(j)] * q0 + N[static_cast<std::size_t>(j)] * p0;
}

RVec SolvingKernel::momentum(int j, const RVec& q0, const RVec& p0) const
{
    return Sqp[static_cast<std::size_t>(j)] * q0 + Ndot[static_cast<std::size_t>(j)] * p0;
}

SolvingKernel solving_kernel(const MemoryKernel& H, const RMat& V)
{
    const int d = static_cast<int>(V.rows());
    const int J = H.grid.size();
    SolvingKernel sk;
    sk.grid = H.grid;
    for (auto* v : {&sk.N, &sk.Ndot, &sk.Nddot, &sk.Sqq, &sk.Sqp}) v->assign(static_cast<std::size_t>(J), RMat::Zero(d, d));
    for (int i = 0; i < d; ++i) {
        RVec e = RVec::Unit(d, i), z = RVec::Zero(d);
        auto sp = solve_particle(H, {}, V, z, e);
        auto sq = solve_particle(H, {}, V, e, z);
        for (int j = 0; j < J; ++j) {
            const auto u = static_cast<std::size_t>(j);
            sk.N[u].col(i) = sp.q[u];
            sk.Ndot[u].col(i) = sp.p[u];
            sk.Nddot[u].col(i) = sp.a[u];
            sk.Sqq[u].col(i) = sq.q[u];
            sk.Sqp[u].col(i) = sq.p[u];
        }
    }
    return sk;
}

std::vector<double> kernel_norms(const SolvingKernel& sk, int order)
{
    const auto& src = order == 0 ? sk.N : order == 1 ? sk.Ndot : sk.Nddot;
    std::vector<double> out;
    out.reserve(src.size());
    for (const auto& m : src) out.push_back(m.norm());
    return out;
}

KernelDecay fit_kernel_decay(const SolvingKernel& sk, double t0, double t1, double envelope_width)
{
    if (!(t0 > 0.0) || t1 < 10.0 * t0 * (1.0 - 1e-12)) throw DomainError("decay window shorter than one decade rejected");
    if (t1 > sk.grid.T() + 1e-9) throw DomainError("decay window extends past the solving-kernel horizon");
    std::vector<double> t(static_cast<std::size_t>(sk.grid.size()));
    for (int j = 0; j < sk.grid.size(); ++j) t[static_cast<std::size_t>(j)] = sk.grid.t(j);
    KernelDecay kd;
    kd.N = fit_envelope(t, kernel_norms(sk, 0), envelope_width, t0, t1);
    kd.Ndot = fit_envelope(t, kernel_norms(sk, 1), envelope_width, t0, t1);
    kd.Nddot = fit_envelope(t, kernel_norms(sk, 2), envelope_width, t0, t1);
    return kd;
}

CMat laplace_transform(const std::vector<RMat>& f, double dt, cd lambda)
{
    const int r = static_cast<int>(f.front().rows()), c = static_cast<int>(f.front().cols());
    CMat out(r, c);
    std::vector<double> series(f.size());
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < c; ++b) {
            for (std::size_t j = 0; j < f.size(); ++j) series[j] = f[j](a, b);
            out(a, b) = filon_integral(std::span<const double>(series), dt, -lambda);
        }
    return out;
}

double laplace_check(const Model& m, const SolvingKernel& sk, const std::vector<cd>& lambdas)
{
    const int d = m.dim();
    double worst = 0.0;
    for (cd lam : lambdas) {
        if (lam.real() <= 0.0) throw DomainError("laplace_check needs Re lambda > 0");
        if (std::exp(-lam.real() * sk.grid.T()) > 1e-8)
            throw DomainError("insufficient horizon: exp(-Re lambda T) exceeds 1e-8");
        auto rs = resolvent(m, lam);
        if (!rs.invertible) throw DomainError("resolvent singular at a laplace_check sample");
        CMat LN = laplace_transform(sk.N, sk.grid.dt, lam);
        CMat LNd = laplace_transform(sk.Ndot, sk.grid.dt, lam);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                CVec num = LNd.col(i) + LN.col(j);
                CVec pred = rs.inverse * (lam * CVec::Unit(d, i) + CVec::Unit(d, j));
                worst = std::max(worst, (num - pred).cwiseAbs().maxCoeff());
            }
    }
    return worst;
}

}  // namespace diracsim
