#include "diracsim/predictor.hpp"

#include <cmath>

#include "diracsim/parallel.hpp"

namespace diracsim {

CMat lambda_symbol(const Model& m, int n, const std::array<cd, 3>& zeta)
{
    const DiracAlgebra& al = m.algebra();
    const int s = al.spin;
    CMat A1 = CMat::Zero(s, s);
    CMat A2 = al.beta.cast<cd>() * m.mass(n);
    for (int j = 0; j < al.dim; ++j) {
        A1 += al.alpha[j].real().cast<cd>() * zeta[j];
        A2 += al.alpha[j].imag().cast<cd>() * zeta[j];
    }
    CMat L(2 * s, 2 * s);
    L << A1, -A2, A2, A1;
    return L;
}

CMat lambda_multiplier(const Model& m, int n, const std::array<double, 3>& k)
{
    return lambda_symbol(m, n, {cd(0.0, k[0]), cd(0.0, k[1]), cd(0.0, k[2])});
}

CMat real_propagator_multiplier(const Model& m, int n, const std::array<double, 3>& k, double t)
{
    const double w = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + m.mass(n) * m.mass(n));
    const int s2 = 2 * m.spin();
    return CMat::Identity(s2, s2) * std::cos(w * t) - lambda_multiplier(m, n, k) * (std::sin(w * t) / w);
}

CMat limit_map(const Model& m, const CMat& q0, const std::array<double, 3>& k)
{
    const int s2 = 2 * m.spin();
    const int N = m.n_fields();
    if (q0.rows() != s2 * N || q0.cols() != s2 * N) throw ShapeError("limit_map: density must be 2sN x 2sN");
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    std::vector<CMat> lam(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) lam[n] = lambda_multiplier(m, n, k);
    CMat out = CMat::Zero(q0.rows(), q0.cols());
    for (int n = 0; n < N; ++n)
        for (int r = 0; r < N; ++r) {
            if (m.mass(n) != m.mass(r)) continue;
            const double P = 1.0 / (k2 + m.mass(n) * m.mass(n));
            const CMat q = q0.block(n * s2, r * s2, s2, s2);
            out.block(n * s2, r * s2, s2, s2) = 0.5 * (q + P * lam[n] * q * lam[r].adjoint());
        }
    return out;
}

LimitDensity::LimitDensity(const Model& m, const CovarianceModel& cov) : model_(m), cov_(cov)
{
    auto rep = validate_covariance(m, cov);
    if (!rep.ok) throw DomainError("invalid covariance: " + rep.message);
}

CMat LimitDensity::at(std::size_t idx) const
{
    return limit_map(model_, cov_.at(idx), model_.fourier().wavevector(idx));
}

LimitDensity limit_density(const Model& m, const CovarianceModel& cov) { return LimitDensity(m, cov); }

std::vector<std::vector<cd>> real_transforms(const Model& m, const SpinorFieldSet& chi)
{
    chi.require_same_shape(m.zero_fields(), "real_transforms");
    const Grid& g = m.grid();
    const std::size_t P = g.size();
    const int s = m.spin();
    std::vector<std::vector<cd>> X(static_cast<std::size_t>(2 * s * m.n_fields()), std::vector<cd>(P));
    std::vector<cd> buf(P);
    for (int n = 0; n < m.n_fields(); ++n)
        for (int c = 0; c < s; ++c) {
            auto comp = chi.component(n, c);
            std::copy(comp.begin(), comp.end(), buf.begin());
            m.fft().forward(buf.data());
            auto& re = X[static_cast<std::size_t>(n * 2 * s + c)];
            auto& im = X[static_cast<std::size_t>(n * 2 * s + s + c)];
            for (std::size_t k = 0; k < P; ++k) {
                const cd b = std::conj(buf[g.negate(k)]);
                re[k] = 0.5 * (buf[k] + b);
                im[k] = cd(0.0, -0.5) * (buf[k] - b);
            }
        }
    return X;
}

namespace {

template <class AtFn>
cd form_sum(const Model& m, int D, const AtFn& at, bool diag_only_scalar, const std::vector<double>* density,
            const std::vector<std::vector<cd>>& X1, const std::vector<std::vector<cd>>& X2, int threads)
{
    const std::size_t P = m.grid().size();
    // Fixed blocks so that the reduction order does not depend on the thread count.
    const std::size_t block = 4096;
    const std::size_t nb = (P + block - 1) / block;
    std::vector<double> re(nb), im(nb);
    parallel_for(nb, threads, [&](std::size_t b) {
        cd acc = 0.0;
        CVec x1(D), x2(D);
        for (std::size_t k = b * block; k < std::min(P, (b + 1) * block); ++k) {
            if (diag_only_scalar) {
                cd dot = 0.0;
                for (int a = 0; a < D; ++a) dot += std::conj(X1[a][k]) * X2[a][k];
                acc += (*density)[k] * dot;
            } else {
                for (int a = 0; a < D; ++a) {
                    x1(a) = X1[a][k];
                    x2(a) = X2[a][k];
                }
                acc += x1.dot(at(k) * x2);
            }
        }
        re[b] = acc.real();
        im[b] = acc.imag();
    });
    return cd(pairwise_sum(re), pairwise_sum(im)) / m.grid().volume();
}

double checked_real(cd q)
{
    if (std::abs(q.imag()) > 1e-10 * std::max(std::abs(q.real()), 1e-300) && std::abs(q.imag()) > 1e-300)
        throw DomainError("quadratic form has imaginary residue " + std::to_string(q.imag()) +
                          " (density symmetry broken)");
    return q.real();
}

}  // namespace

double bilinear_form(const Model& m, const CovarianceModel& q, const SpinorFieldSet& chi1,
                     const SpinorFieldSet& chi2, int threads)
{
    auto X1 = real_transforms(m, chi1);
    auto X2 = &chi1 == &chi2 ? X1 : real_transforms(m, chi2);
    return form_sum(m, q.D, [&](std::size_t k) { return q.at(k); }, q.diagonal(), &q.density, X1, X2, threads)
        .real();
}

double bilinear_form(const Model& m, const LimitDensity& q, const SpinorFieldSet& chi1, const SpinorFieldSet& chi2,
                     int threads)
{
    auto X1 = real_transforms(m, chi1);
    auto X2 = &chi1 == &chi2 ? X1 : real_transforms(m, chi2);
    return form_sum(m, q.D(), [&](std::size_t k) { return q.at(k); }, false, nullptr, X1, X2, threads).real();
}

double quad_form(const Model& m, const CovarianceModel& q, const SpinorFieldSet& chi, int threads)
{
    auto X = real_transforms(m, chi);
    return checked_real(
        form_sum(m, q.D, [&](std::size_t k) { return q.at(k); }, q.diagonal(), &q.density, X, X, threads));
}

double quad_form(const Model& m, const LimitDensity& q, const SpinorFieldSet& chi, int threads)
{
    auto X = real_transforms(m, chi);
    return checked_real(form_sum(m, q.D(), [&](std::size_t k) { return q.at(k); }, false, nullptr, X, X, threads));
}

Prediction predict_QZ(const Model& m, const CovarianceModel& cov, const Observable& Z, const XiFamily& xi,
                      const ThetaOptions& opt, int threads)
{
    SpinorFieldSet chiZ = build_chiZ(m, Z, xi, opt);
    Prediction p;
    p.Q = quad_form(m, limit_density(m, cov), chiZ, threads);
    p.charfunc = std::exp(-0.5 * p.Q);
    return p;
}

double predict_cross(const Model& m, const CovarianceModel& cov, const Observable& Z1, const Observable& Z2,
                     const XiFamily& xi, const ThetaOptions& opt, int threads)
{
    SpinorFieldSet c1 = build_chiZ(m, Z1, xi, opt);
    SpinorFieldSet c2 = build_chiZ(m, Z2, xi, opt);
    return bilinear_form(m, limit_density(m, cov), c1, c2, threads);
}

}  // namespace diracsim
