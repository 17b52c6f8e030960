#include "diracsim/kernel.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "diracsim/pairing.hpp"
#include "diracsim/propagator.hpp"

namespace diracsim {

SpectralWeight spectral_weight(const Model& m)
{
    SpectralWeight sw;
    const auto& beta = m.algebra().beta;
    const std::size_t P = m.grid().size();
    for (int n = 0; n < m.n_fields(); ++n) {
        std::vector<double> B(P, 0.0);
        for (int c = 0; c < m.spin(); ++c) {
            const double sign = beta(c, c).real();
            auto r = m.rho_hat().component(n, c);
            for (std::size_t idx = 0; idx < P; ++idx) B[idx] += sign * std::norm(r[idx]);
        }
        sw.B.push_back(std::move(B));
    }
    return sw;
}

KernelWeights kernel_weights(const Model& m)
{
    const auto& fg = m.fourier();
    const int d = m.dim();
    const std::size_t ns = fg.shell_count();
    const double inv_vol = 1.0 / m.grid().volume();
    auto sw = spectral_weight(m);
    KernelWeights kw;
    kw.dim = d;
    for (int n = 0; n < m.n_fields(); ++n) {
        std::vector<double> w(ns * d * d, 0.0);
        const auto& B = sw.B[static_cast<std::size_t>(n)];
        for (std::size_t idx = 0; idx < B.size(); ++idx) {
            if (B[idx] == 0.0) continue;
            const auto k = fg.wavevector(idx);
            double* blk = &w[fg.shell(idx) * d * d];
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) blk[i * d + j] += k[i] * k[j] * B[idx];
        }
        for (auto& v : w) v *= m.mass(n) * inv_vol;
        kw.w.push_back(std::move(w));
    }
    return kw;
}

MemoryKernel kernel_time(const Model& m, const TimeGrid& tg)
{
    const int d = m.dim();
    const auto kw = kernel_weights(m);
    const std::size_t ns = m.fourier().shell_count();
    const int J = tg.size();
    std::vector<double> acc(static_cast<std::size_t>(J) * d * d, 0.0);
    for (int n = 0; n < m.n_fields(); ++n) {
        const auto& om = m.shell_omega(n);
        for (std::size_t s = 0; s < ns; ++s) {
            const double* blk = &kw.w[static_cast<std::size_t>(n)][s * d * d];
            bool nonzero = false;
            for (int e = 0; e < d * d; ++e) nonzero = nonzero || blk[e] != 0.0;
            if (!nonzero) continue;
            const double w = om[s];
            const cd step = std::polar(1.0, w * tg.dt);
            cd phase = 1.0;
            for (int j = 0; j < J; ++j) {
                if (j % 128 == 0) phase = std::polar(1.0, w * tg.t(j));
                const double f = phase.imag() / w;
                double* out = &acc[static_cast<std::size_t>(j) * d * d];
                for (int e = 0; e < d * d; ++e) out[e] += blk[e] * f;
                phase *= step;
            }
        }
    }
    MemoryKernel mk;
    mk.grid = tg;
    mk.H.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        RMat H(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) H(a, b) = acc[(static_cast<std::size_t>(j) * d + a) * d + b];
        mk.H[static_cast<std::size_t>(j)] = 0.5 * (H + H.transpose());
    }
    mk.H[0].setZero();
    return mk;
}

RMat kernel_time_at(const Model& m, double t)
{
    const int d = m.dim();
    const auto kw = kernel_weights(m);
    RMat H = RMat::Zero(d, d);
    for (int n = 0; n < m.n_fields(); ++n) {
        const auto& om = m.shell_omega(n);
        for (std::size_t s = 0; s < om.size(); ++s) {
            const double f = std::sin(om[s] * t) / om[s];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) H(a, b) += kw.at(n, s, a, b) * f;
        }
    }
    return H;
}

RMat kernel_direct(const Model& m, double t)
{
    const int d = m.dim();
    const auto& g = m.grid();
    RMat H = RMat::Zero(d, d);
    for (int n = 0; n < m.n_fields(); ++n) {
        std::vector<SpinorFieldSet> grad, moved;
        for (int l = 0; l < d; ++l) {
            SpinorFieldSet gh = m.grad_rho_hat(n, l);
            SpinorFieldSet w = gh;
            propagate_hat(m, n, t, gh.field_data(0), w.field_data(0));
            w *= cd(0.0, 1.0);
            m.to_position(w);
            m.to_position(gh);
            grad.push_back(std::move(gh));
            moved.push_back(std::move(w));
        }
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) H(k, l) += real_pairing(g, grad[static_cast<std::size_t>(k)], moved[static_cast<std::size_t>(l)]);
    }
    return H;
}

CMat htilde(const Model& m, cd lambda)
{
    if (!(lambda.real() > 0.0)) throw DomainError("htilde needs Re lambda > 0; use the imaginary-axis limit instead");
    const int d = m.dim();
    const auto kw = kernel_weights(m);
    const cd l2 = lambda * lambda;
    CMat Ht = CMat::Zero(d, d);
    for (int n = 0; n < m.n_fields(); ++n) {
        const auto& om = m.shell_omega(n);
        for (std::size_t s = 0; s < om.size(); ++s) {
            const cd f = 1.0 / (om[s] * om[s] + l2);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) Ht(a, b) += kw.at(n, s, a, b) * f;
        }
    }
    return Ht;
}

ResolventSample resolvent_from_htilde(const Model& m, cd lambda, const CMat& Ht)
{
    const int d = m.dim();
    ResolventSample r;
    r.lambda = lambda;
    r.Htilde = Ht;
    r.N = lambda * lambda * CMat::Identity(d, d) + m.V().cast<cd>() - Ht;
    Eigen::JacobiSVD<CMat> svd(r.N);
    const auto& sv = svd.singularValues();
    r.min_singular_value = sv.minCoeff();
    r.invertible = r.min_singular_value > 1e-13 * std::max(1.0, sv.maxCoeff());
    if (r.invertible) r.inverse = r.N.inverse();
    return r;
}

ResolventSample resolvent(const Model& m, cd lambda) { return resolvent_from_htilde(m, lambda, htilde(m, lambda)); }

RMat a2_matrix(const Model& m)
{
    const int d = m.dim();
    const double ms = m.min_mass();
    const auto kw = kernel_weights(m);
    const auto& fg = m.fourier();
    RMat K = RMat::Zero(d, d);
    for (int n = 0; n < m.n_fields(); ++n) {
        const double mn = m.mass(n);
        for (std::size_t s = 0; s < fg.shell_count(); ++s) {
            const double den = fg.shell_k2(s) + mn * mn - ms * ms;
            if (den <= 0.0) continue;  // k = 0 on the lightest channel, where k_i k_j = 0
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) K(a, b) += kw.at(n, s, a, b) / den;
        }
    }
    return 0.5 * (K + K.transpose());
}

ConditionReport check_A2(const Model& m)
{
    ConditionReport rep;
    const int d = m.dim();
    const double ms = m.min_mass();
    rep.K = a2_matrix(m);
    RMat A = m.V() - ms * ms * RMat::Identity(d, d) - rep.K;
    rep.min_eig_A2 = Eigen::SelfAdjointEigenSolver<RMat>(0.5 * (A + A.transpose())).eigenvalues().minCoeff();
    rep.pass_A2 = rep.min_eig_A2 > 0.0;
    auto sw = spectral_weight(m);
    const auto& fg = m.fourier();
    double mn = std::numeric_limits<double>::infinity();
    for (int n = 0; n < m.n_fields(); ++n) {
        const auto& B = sw.B[static_cast<std::size_t>(n)];
        for (std::size_t idx = 0; idx < B.size(); ++idx) {
            if (fg.k2(idx) == 0.0) continue;
            double mag = 0.0;
            for (int c = 0; c < m.spin(); ++c) mag += std::norm(m.rho_hat().component(n, c)[idx]);
            if (mag == 0.0) {
                ++rep.A3_underflow;
                continue;
            }
            mn = std::min(mn, B[idx]);
        }
    }
    rep.A3_min = mn;
    rep.pass_A3 = mn > 0.0;
    return rep;
}

RMat suggest_V(const Model& m, double margin)
{
    if (!(margin > 0.0)) throw DomainError("suggest_V: margin must be positive");
    const int d = m.dim();
    const double ms = m.min_mass();
    return (ms * ms + margin) * RMat::Identity(d, d) + a2_matrix(m);
}

}  // namespace diracsim
