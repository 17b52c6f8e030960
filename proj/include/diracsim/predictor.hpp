#pragma once
#include <array>
#include <complex>

#include "diracsim/asymptotics.hpp"
#include "diracsim/ensemble.hpp"
#include "diracsim/model.hpp"

namespace diracsim {

// Lambda_n(zeta) = [[a.zeta, -(b.zeta + beta m_n)], [b.zeta + beta m_n, a.zeta]]
// with alpha_j = a_j + i b_j, acting on (Re psi, Im psi). The real form of the
// free equation is d/dt (phi, pi) = -Lambda_n(grad) (phi, pi).
CMat lambda_symbol(const Model& m, int n, const std::array<cd, 3>& zeta);

// Fourier multiplier of Lambda_n(grad) for the exp(-i k.x) transform used
// throughout, i.e. lambda_symbol at zeta = i k.
CMat lambda_multiplier(const Model& m, int n, const std::array<double, 3>& k);

// cos(w t) I - Lambda_n(i k) sin(w t) / w, the free flow on transforms of the
// real and imaginary parts.
CMat real_propagator_multiplier(const Model& m, int n, const std::array<double, 3>& k, double t);

// Time average of the free flow applied to a D x D density at wave vector k:
// block (n, n') is 1/2 (q + Lambda_n q Lambda_n'^* / w^2) for equal masses, 0 otherwise.
CMat limit_map(const Model& m, const CMat& q0, const std::array<double, 3>& k);

// q^_inf, assembled per k on demand (3D grids are too large to store D x D per point).
class LimitDensity {
public:
    LimitDensity(const Model& m, const CovarianceModel& cov);
    CMat at(std::size_t idx) const;
    int D() const { return cov_.D; }
    const CovarianceModel& initial() const { return cov_; }

private:
    Model model_;
    CovarianceModel cov_;
};

LimitDensity limit_density(const Model& m, const CovarianceModel& cov);

// Q(chi1, chi2) = (1/L^d) Re sum_k X1^* q(k) X2, X = h^d DFT of the real parts.
// Throws DomainError when the imaginary residue of Q(chi, chi) exceeds 1e-10 relative.
double quad_form(const Model& m, const CovarianceModel& q, const SpinorFieldSet& chi, int threads = 1);
double quad_form(const Model& m, const LimitDensity& q, const SpinorFieldSet& chi, int threads = 1);
double bilinear_form(const Model& m, const LimitDensity& q, const SpinorFieldSet& chi1, const SpinorFieldSet& chi2,
                     int threads = 1);
double bilinear_form(const Model& m, const CovarianceModel& q, const SpinorFieldSet& chi1,
                     const SpinorFieldSet& chi2, int threads = 1);

// Real-part transforms X of every (field, component, part), D vectors of size points.
std::vector<std::vector<cd>> real_transforms(const Model& m, const SpinorFieldSet& chi);

struct Prediction {
    double Q = 0.0;
    // exp(-Q / 2)
    double charfunc = 1.0;
};

Prediction predict_QZ(const Model& m, const CovarianceModel& cov, const Observable& Z, const XiFamily& xi,
                      const ThetaOptions& opt = {}, int threads = 1);
// Q_inf(Z1, Z2)
double predict_cross(const Model& m, const CovarianceModel& cov, const Observable& Z1, const Observable& Z2,
                     const XiFamily& xi, const ThetaOptions& opt = {}, int threads = 1);

}  // namespace diracsim
