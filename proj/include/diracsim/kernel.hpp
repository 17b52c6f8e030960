#pragma once
#include <vector>

#include "diracsim/model.hpp"
#include "diracsim/oscillatory.hpp"

namespace diracsim {

// B_n(k) = conj(rho^_n(k)) . beta rho^_n(k) on the Fourier grid.
struct SpectralWeight {
    std::vector<std::vector<double>> B;
};

SpectralWeight spectral_weight(const Model& m);

// Shell sums (m_n / L^d) sum_{k in shell} k_i k_j B_n(k), stored per field as
// shell-major d x d blocks.
struct KernelWeights {
    int dim = 0;
    std::vector<std::vector<double>> w;
    double at(int n, std::size_t shell, int i, int j) const
    {
        return w[static_cast<std::size_t>(n)][(shell * dim + i) * dim + j];
    }
};

KernelWeights kernel_weights(const Model& m);

struct MemoryKernel {
    TimeGrid grid;
    std::vector<RMat> H;
};

// H_kl(t) = (2 pi)^-d sum_n m_n int k_k k_l B_n(k) sin(omega_n t) / omega_n dk
// as a Riemann sum on the Fourier grid.
MemoryKernel kernel_time(const Model& m, const TimeGrid& tg);
RMat kernel_time_at(const Model& m, double t);

// H_kl(t) = sum_n <d_k rho_n, W_n(t) i d_l rho_n> through the propagator.
RMat kernel_direct(const Model& m, double t);

// H~(lambda) for Re lambda > 0.
CMat htilde(const Model& m, cd lambda);

struct ResolventSample {
    cd lambda;
    CMat Htilde;
    CMat N;
    double min_singular_value = 0.0;
    bool invertible = false;
    CMat inverse;
};

// N(lambda) = lambda^2 + V - H~(lambda); Re lambda > 0.
ResolventSample resolvent(const Model& m, cd lambda);
// Same assembly for a caller-supplied H~ (e.g. a boundary value on the imaginary axis).
ResolventSample resolvent_from_htilde(const Model& m, cd lambda, const CMat& Ht);

struct ConditionReport {
    RMat K;
    double min_eig_A2 = 0.0;
    // Min of B_n over k != 0, skipping modes where rho_hat_n underflows to 0.
    double A3_min = 0.0;
    std::size_t A3_underflow = 0;
    bool pass_A2 = false;
    bool pass_A3 = false;
};

// K_ij = (2 pi)^-d sum_n m_n int k_i k_j B_n / (k^2 + m_n^2 - m_*^2) dk
RMat a2_matrix(const Model& m);
ConditionReport check_A2(const Model& m);
// m_*^2 I + K + margin I
RMat suggest_V(const Model& m, double margin);

}  // namespace diracsim
