#pragma once
#include <array>
#include <vector>

#include "diracsim/model.hpp"

namespace diracsim {

// Continuous extension of B_n(k) off the Fourier grid: the trigonometric
// interpolant B_n(k) = sum_z c_n(z) cos(k.z), with c_n the inverse DFT of the grid
// values truncated to |c| > cutoff * max|c|. Exact at grid points.
class SpectralInterpolant {
public:
    explicit SpectralInterpolant(const Model& m, double cutoff = 1e-15, int chebyshev_nodes = 160);

    int dim() const { return dim_; }
    double B(int n, const std::array<double, 3>& k) const;
    // A_ij(r) = int over the unit sphere of theta_i theta_j B_n(r theta); closed-form
    // angular integration term by term (two-point sum in 1D).
    RMat angular_moment_exact(int n, double r) const;
    // Chebyshev interpolant of angular_moment_exact on [0, r_max].
    RMat angular_moment(int n, double r) const;
    // int_{|k| = r} k_i k_j B_n(k) dS: product Gauss rule with `nodes` polar and
    // 2 * nodes azimuthal points in 3D, the two points +-r in 1D.
    RMat surface_integral(int n, double r, int nodes = 48) const;
    // Radial cut beyond which B is treated as zero: the smaller of pi/h and the
    // radius where the angular moments fall below 1e-15 of their peak.
    double r_max() const { return r_max_; }
    // Distinct lags up to the symmetry z -> -z.
    std::size_t lag_count(int n) const { return lags_[static_cast<std::size_t>(n)].size(); }

private:
    struct Lag {
        double z[3];
        double c;
    };
    // Lags grouped by |z|: sum of c and of c z_i z_j / |z|^2.
    struct LagShell {
        double r;
        double c;
        double zz[3][3];
    };
    int dim_;
    double r_max_;
    std::vector<std::vector<Lag>> lags_;
    std::vector<std::vector<LagShell>> shells_;
    std::vector<double> nodes_;
    std::vector<std::vector<RMat>> table_;
};

// H~(i omega + 0): real part by principal-value radial quadrature of the closed-form
// angular moments, imaginary part from the surface integral over every open channel
// m_n < |omega|. Throws within 1e-6 of a branch point +-m_n.
CMat imag_limit(const Model& m, const SpectralInterpolant& si, double omega);

// Continuum H~(lambda) at lambda = eps + i omega by radial quadrature.
CMat htilde_continuum(const Model& m, const SpectralInterpolant& si, double omega, double eps);

// Richardson extrapolation of htilde_continuum to eps -> 0 through the given
// geometric sequence of eps values (ratio 10 by default).
CMat htilde_eps_limit(const Model& m, const SpectralInterpolant& si, double omega,
                      const std::vector<double>& eps = {1e-2, 1e-3, 1e-4});

struct InvertibilityPoint {
    double omega;
    double min_singular_value;
    CMat Htilde;
};

struct InvertibilityScan {
    std::vector<InvertibilityPoint> points;
    double min_singular_value = 0.0;
    double argmin_omega = 0.0;
    bool singular = false;
};

// min singular value of N(i omega + 0) = -omega^2 + V - H~(i omega + 0) on the grid.
InvertibilityScan invertibility_scan(const Model& m, const SpectralInterpolant& si, const std::vector<double>& omegas,
                                     double singular_tol = 1e-8);

// Uniform omega grid on [lo, hi] with points within `gap` of +-m_n removed.
std::vector<double> scan_grid(const Model& m, double lo, double hi, int count, double gap = 1e-3);

}  // namespace diracsim
