#pragma once
#include <span>
#include <vector>

#include "diracsim/decay_fit.hpp"
#include "diracsim/model.hpp"

namespace diracsim {

// cos(omega t) and sin(omega t)/omega per shell for field n.
struct PropagatorCache {
    int field = 0;
    double t = 0.0;
    std::vector<double> cos_wt;
    std::vector<double> sin_wt_over_w;
};

PropagatorCache make_propagator_cache(const Model& m, int n, double t);

// out(k) = [c(k) I - i s(k) (alpha.k + beta m_n)] in(k) for one k-space field
// (spin * points values starting at in/out, which may alias). c and s are
// indexed by shell.
void apply_shell_operator(const Model& m, int n, std::span<const double> c, std::span<const double> s, const cd* in,
                          cd* out);
void apply_shell_operator(const Model& m, int n, std::span<const cd> c, std::span<const cd> s, const cd* in, cd* out);

// out(k) = (alpha.k + beta m_n) in(k)
void apply_dirac_symbol(const Model& m, int n, const cd* in, cd* out);

// k-space propagation of field n by W_n(t).
void propagate_hat(const Model& m, int n, double t, const cd* in, cd* out);

// W_n(t) psi0 for a single spinor field (position space in and out).
SpinorFieldSet propagate_free(const Model& m, const SpinorFieldSet& psi0, int n, double t);

// W(t) applied field by field.
SpinorFieldSet propagate_free_set(const Model& m, const SpinorFieldSet& psi0, double t);

// |<W(t) psi, chi> - <psi, W(-t) chi>|
double adjoint_check(const Model& m, const SpinorFieldSet& psi, const SpinorFieldSet& chi, double t);

// Largest |x| at which |psi| exceeds rel_threshold times its peak (0: any nonzero value).
double support_radius(const Grid& g, const SpinorFieldSet& psi, double rel_threshold = 0.0);

// Fit of log ||W_n(t) psi0||_{|x|<R} against log(1 + t) over `times`. With
// envelope_width > 0 the running-maximum envelope is fitted instead on [t0, t1]
// = [times.front(), times.back()].
DecayFit measure_local_decay(const Model& m, const SpinorFieldSet& psi0, int n, double R,
                             std::span<const double> times, double envelope_width = 0.0);

}  // namespace diracsim
