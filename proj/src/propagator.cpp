#include "diracsim/propagator.hpp"

#include <algorithm>
#include <cmath>

#include "diracsim/pairing.hpp"

namespace diracsim {

namespace {

// alpha_j and beta in the standard representation have one nonzero per row.
struct SparseSymbol {
    int spin = 0;
    int dim = 0;
    int col[3][4];
    cd val[3][4];
    double beta[4];

    explicit SparseSymbol(const DiracAlgebra& a) : spin(a.spin), dim(a.dim)
    {
        for (int j = 0; j < dim; ++j)
            for (int r = 0; r < spin; ++r) {
                int nz = 0;
                for (int c = 0; c < spin; ++c)
                    if (std::abs(a.alpha[j](r, c)) > 0.0) {
                        col[j][r] = c;
                        val[j][r] = a.alpha[j](r, c);
                        ++nz;
                    }
                if (nz != 1) throw Error("unexpected Dirac matrix sparsity");
            }
        for (int r = 0; r < spin; ++r) beta[r] = a.beta(r, r).real();
    }
};

template <class Coef>
void shell_operator_impl(const Model& m, int n, std::span<const Coef> c, std::span<const Coef> s, const cd* in,
                         cd* out)
{
    const auto& fg = m.fourier();
    const std::size_t P = m.grid().size();
    if (c.size() != fg.shell_count() || s.size() != fg.shell_count())
        throw ShapeError("shell operator coefficients do not match the shell count");
    const SparseSymbol sym(m.algebra());
    const double mass = m.mass(n);
    const int spin = sym.spin;
    const cd I(0.0, 1.0);
    for (std::size_t idx = 0; idx < P; ++idx) {
        const auto k = fg.wavevector(idx);
        const auto sh = fg.shell(idx);
        cd psi[4], dpsi[4];
        for (int r = 0; r < spin; ++r) psi[r] = in[static_cast<std::size_t>(r) * P + idx];
        for (int r = 0; r < spin; ++r) {
            cd acc = sym.beta[r] * mass * psi[r];
            for (int j = 0; j < sym.dim; ++j) acc += sym.val[j][r] * k[j] * psi[sym.col[j][r]];
            dpsi[r] = acc;
        }
        const cd cc = c[sh];
        const cd ss = s[sh];
        for (int r = 0; r < spin; ++r) out[static_cast<std::size_t>(r) * P + idx] = cc * psi[r] - I * ss * dpsi[r];
    }
}

}  // namespace

PropagatorCache make_propagator_cache(const Model& m, int n, double t)
{
    PropagatorCache pc;
    pc.field = n;
    pc.t = t;
    const auto& w = m.shell_omega(n);
    pc.cos_wt.resize(w.size());
    pc.sin_wt_over_w.resize(w.size());
    for (std::size_t s = 0; s < w.size(); ++s) {
        pc.cos_wt[s] = std::cos(w[s] * t);
        pc.sin_wt_over_w[s] = std::sin(w[s] * t) / w[s];
    }
    return pc;
}

void apply_shell_operator(const Model& m, int n, std::span<const double> c, std::span<const double> s, const cd* in,
                          cd* out)
{
    shell_operator_impl<double>(m, n, c, s, in, out);
}

void apply_shell_operator(const Model& m, int n, std::span<const cd> c, std::span<const cd> s, const cd* in, cd* out)
{
    shell_operator_impl<cd>(m, n, c, s, in, out);
}

void apply_dirac_symbol(const Model& m, int n, const cd* in, cd* out)
{
    const std::size_t ns = m.fourier().shell_count();
    std::vector<cd> c(ns, cd(0.0)), s(ns, cd(0.0, 1.0));
    // c - i s D with c = 0, s = i gives D.
    shell_operator_impl<cd>(m, n, c, s, in, out);
}

void propagate_hat(const Model& m, int n, double t, const cd* in, cd* out)
{
    auto pc = make_propagator_cache(m, n, t);
    apply_shell_operator(m, n, std::span<const double>(pc.cos_wt), std::span<const double>(pc.sin_wt_over_w), in,
                         out);
}

SpinorFieldSet propagate_free(const Model& m, const SpinorFieldSet& psi0, int n, double t)
{
    if (psi0.fields() != 1 || psi0.spin() != m.spin() || psi0.points() != m.grid().size())
        throw ShapeError("propagate_free: expected a single spinor field on the model grid");
    if (n < 0 || n >= m.n_fields()) throw ShapeError("propagate_free: field index out of range");
    SpinorFieldSet f = psi0;
    m.to_fourier(f);
    propagate_hat(m, n, t, f.field_data(0), f.field_data(0));
    m.to_position(f);
    return f;
}

SpinorFieldSet propagate_free_set(const Model& m, const SpinorFieldSet& psi0, double t)
{
    if (psi0.fields() != m.n_fields() || psi0.spin() != m.spin() || psi0.points() != m.grid().size())
        throw ShapeError("propagate_free_set: shape does not match the model");
    SpinorFieldSet f = psi0;
    m.to_fourier(f);
    for (int n = 0; n < f.fields(); ++n) propagate_hat(m, n, t, f.field_data(n), f.field_data(n));
    m.to_position(f);
    return f;
}

double adjoint_check(const Model& m, const SpinorFieldSet& psi, const SpinorFieldSet& chi, double t)
{
    psi.require_same_shape(chi, "adjoint_check");
    const auto& g = m.grid();
    double a = real_pairing(g, propagate_free_set(m, psi, t), chi);
    double b = real_pairing(g, psi, propagate_free_set(m, chi, -t));
    return std::abs(a - b);
}

double support_radius(const Grid& g, const SpinorFieldSet& psi, double rel_threshold)
{
    const std::size_t P = g.size();
    std::vector<double> mag(P, 0.0);
    for (int n = 0; n < psi.fields(); ++n)
        for (int c = 0; c < psi.spin(); ++c) {
            auto comp = psi.component(n, c);
            for (std::size_t idx = 0; idx < P; ++idx) mag[idx] += std::norm(comp[idx]);
        }
    const double peak = *std::max_element(mag.begin(), mag.end());
    const double cut = rel_threshold * rel_threshold * peak;
    double r = 0.0;
    for (std::size_t idx = 0; idx < P; ++idx)
        if (mag[idx] > cut) r = std::max(r, g.radius(idx));
    return r;
}

DecayFit measure_local_decay(const Model& m, const SpinorFieldSet& psi0, int n, double R,
                             std::span<const double> times, double envelope_width)
{
    const auto& g = m.grid();
    if (times.empty()) throw DomainError("measure_local_decay: no sample times");
    if (psi0.squared_sum() == 0.0) throw DegenerateInputError("degenerate input: initial field is identically zero");
    double tmax = 0.0;
    for (double t : times) tmax = std::max(tmax, std::abs(t));
    const double R1 = support_radius(g, psi0);
    if (!(g.L() > 2.0 * (tmax + R1 + R)))
        throw BoxSizeError("box too small: need L > 2 (T + R1 + R) = " + std::to_string(2.0 * (tmax + R1 + R)));
    SpinorFieldSet hat = psi0;
    m.to_fourier(hat);
    std::vector<double> vals(times.size());
    SpinorFieldSet work = hat;
    for (std::size_t i = 0; i < times.size(); ++i) {
        propagate_hat(m, n, times[i], hat.field_data(0), work.field_data(0));
        m.to_position(work);
        vals[i] = local_field_norm(g, work, R);
    }
    std::vector<double> ts(times.begin(), times.end());
    if (envelope_width > 0.0) return fit_envelope(ts, vals, envelope_width, ts.front(), ts.back());
    return fit_power_law(ts, vals);
}

}  // namespace diracsim
