#include "diracsim/shell_ops.hpp"

#include <cmath>

#include "diracsim/parallel.hpp"
#include "diracsim/propagator.hpp"

namespace diracsim {

ShellOp& ShellOp::operator+=(const ShellOp& o)
{
    if (o.c.size() != c.size()) throw ShapeError("ShellOp size mismatch");
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] += o.c[i];
        s[i] += o.s[i];
    }
    return *this;
}

ShellOp& ShellOp::operator*=(cd a)
{
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] *= a;
        s[i] *= a;
    }
    return *this;
}

ShellOp compose(const ShellOp& a, const ShellOp& b, const std::vector<double>& omega)
{
    // (c1 - i s1 D)(c2 - i s2 D) = c1 c2 - s1 s2 w^2 - i (c1 s2 + s1 c2) D
    ShellOp r = ShellOp::zero(a.c.size());
    for (std::size_t i = 0; i < a.c.size(); ++i) {
        const double w2 = omega[i] * omega[i];
        r.c[i] = a.c[i] * b.c[i] - a.s[i] * b.s[i] * w2;
        r.s[i] = a.c[i] * b.s[i] + a.s[i] * b.c[i];
    }
    return r;
}

std::vector<ShellOp> integrate_against_propagator(const std::vector<std::vector<double>>& rows, double dt,
                                                  const std::vector<double>& omega, int threads)
{
    // int f(s) exp(-i w s) ds = C - i S w with C = int f cos, S w = int f sin.
    auto F = fourier_integrals(rows, dt, omega, threads);
    const std::size_t nw = omega.size();
    std::vector<ShellOp> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        ShellOp op = ShellOp::zero(nw);
        for (std::size_t w = 0; w < nw; ++w) {
            const cd v = F[r * nw + w];
            op.c[w] = v.real();
            op.s[w] = -v.imag() / omega[w];
        }
        out.push_back(std::move(op));
    }
    return out;
}

ShellOp integrate_against_propagator(std::span<const double> f, double dt, const std::vector<double>& omega)
{
    std::vector<std::vector<double>> rows{std::vector<double>(f.begin(), f.end())};
    return integrate_against_propagator(rows, dt, omega)[0];
}

void gradient_rho_at(const Model& m, int n, int l, std::size_t idx, cd* out)
{
    const double kl = m.fourier().wavevector(idx)[l];
    for (int c = 0; c < m.spin(); ++c) out[c] = cd(0.0, kl) * m.rho_hat().component(n, c)[idx];
}

namespace {

struct Rows {
    int spin, dim;
    int col[3][4];
    cd val[3][4];
    double beta[4];
    explicit Rows(const DiracAlgebra& a) : spin(a.spin), dim(a.dim)
    {
        for (int j = 0; j < dim; ++j)
            for (int r = 0; r < spin; ++r)
                for (int c = 0; c < spin; ++c)
                    if (std::abs(a.alpha[j](r, c)) > 0.0) {
                        col[j][r] = c;
                        val[j][r] = a.alpha[j](r, c);
                    }
        for (int r = 0; r < spin; ++r) beta[r] = a.beta(r, r).real();
    }
    void apply(const std::array<double, 3>& k, double m, const cd* in, cd* out) const
    {
        for (int r = 0; r < spin; ++r) {
            cd acc = beta[r] * m * in[r];
            for (int j = 0; j < dim; ++j) acc += val[j][r] * k[j] * in[col[j][r]];
            out[r] = acc;
        }
    }
};

}  // namespace

void add_gradient_source(const Model& m, int n, const std::vector<ShellOp>& ops, cd* out)
{
    const auto& fg = m.fourier();
    const std::size_t P = m.grid().size();
    const int spin = m.spin();
    const int d = m.dim();
    if (static_cast<int>(ops.size()) != d) throw ShapeError("add_gradient_source expects one operator per direction");
    const Rows sym(m.algebra());
    const double mass = m.mass(n);
    const cd I(0.0, 1.0);
    const cd* rho[4];
    for (int c = 0; c < spin; ++c) rho[c] = m.rho_hat().component(n, c).data();
    for (std::size_t idx = 0; idx < P; ++idx) {
        bool nz = false;
        for (int c = 0; c < spin; ++c) nz = nz || rho[c][idx] != cd(0.0);
        if (!nz) continue;
        const auto k = fg.wavevector(idx);
        const auto sh = fg.shell(idx);
        cd cc = 0.0, ss = 0.0;
        for (int l = 0; l < d; ++l) {
            cc += ops[static_cast<std::size_t>(l)].c[sh] * cd(0.0, k[l]);
            ss += ops[static_cast<std::size_t>(l)].s[sh] * cd(0.0, k[l]);
        }
        cd u[4], w[4], dw[4];
        for (int c = 0; c < spin; ++c) {
            u[c] = cc * rho[c][idx];
            w[c] = ss * rho[c][idx];
        }
        sym.apply(k, mass, w, dw);
        for (int c = 0; c < spin; ++c) out[static_cast<std::size_t>(c) * P + idx] += u[c] - I * dw[c];
    }
}

void apply_shell_op(const Model& m, int n, const ShellOp& op, const cd* in, cd* out)
{
    apply_shell_operator(m, n, std::span<const cd>(op.c), std::span<const cd>(op.s), in, out);
}

namespace {

template <class YAt>
ShellPairing pairing_impl(const Model& m, int n, const cd* x_hat, YAt y_at)
{
    const auto& fg = m.fourier();
    const std::size_t P = m.grid().size();
    const int spin = m.spin();
    const Rows sym(m.algebra());
    const double mass = m.mass(n);
    ShellPairing sp{std::vector<cd>(fg.shell_count(), cd(0.0)), std::vector<cd>(fg.shell_count(), cd(0.0))};
    for (std::size_t idx = 0; idx < P; ++idx) {
        cd y[4], dy[4];
        if (!y_at(idx, y)) continue;
        cd x[4];
        bool nz = false;
        for (int c = 0; c < spin; ++c) {
            x[c] = x_hat[static_cast<std::size_t>(c) * P + idx];
            nz = nz || x[c] != cd(0.0);
        }
        if (!nz) continue;
        const auto k = fg.wavevector(idx);
        sym.apply(k, mass, y, dy);
        cd a = 0.0, b = 0.0;
        for (int c = 0; c < spin; ++c) {
            a += std::conj(x[c]) * y[c];
            b += std::conj(x[c]) * dy[c];
        }
        const auto sh = fg.shell(idx);
        sp.a[sh] += a;
        sp.b[sh] += b;
    }
    return sp;
}

}  // namespace

ShellPairing shell_pairing(const Model& m, int n, const cd* x_hat, const cd* y_hat)
{
    const std::size_t P = m.grid().size();
    const int spin = m.spin();
    return pairing_impl(m, n, x_hat, [&](std::size_t idx, cd* y) {
        bool nz = false;
        for (int c = 0; c < spin; ++c) {
            y[c] = y_hat[static_cast<std::size_t>(c) * P + idx];
            nz = nz || y[c] != cd(0.0);
        }
        return nz;
    });
}

ShellPairing shell_pairing_gradient(const Model& m, int n, const cd* x_hat, int l)
{
    const int spin = m.spin();
    return pairing_impl(m, n, x_hat, [&](std::size_t idx, cd* y) {
        gradient_rho_at(m, n, l, idx, y);
        bool nz = false;
        for (int c = 0; c < spin; ++c) nz = nz || y[c] != cd(0.0);
        return nz;
    });
}

std::vector<double> pairing_series(const Model& m, int n, const ShellPairing& sp, double t0, double dt, int count)
{
    const auto& om = m.shell_omega(n);
    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    const cd I(0.0, 1.0);
    for (std::size_t s = 0; s < om.size(); ++s) {
        if (sp.a[s] == cd(0.0) && sp.b[s] == cd(0.0)) continue;
        const double w = om[s];
        const cd step = std::polar(1.0, w * dt);
        cd ph = 0.0;
        for (int j = 0; j < count; ++j) {
            if (j % 128 == 0) ph = std::polar(1.0, w * (t0 + j * dt));
            out[static_cast<std::size_t>(j)] += (ph.real() * sp.a[s] + I * (ph.imag() / w) * sp.b[s]).real();
            ph *= step;
        }
    }
    const double inv = 1.0 / m.grid().volume();
    for (auto& v : out) v *= inv;
    return out;
}

}  // namespace diracsim
