#pragma once
#include "diracsim/fields.hpp"
#include "diracsim/grid.hpp"

namespace diracsim {

// <psi, chi> = sum_n Re int conj(psi_n) . chi_n dx on the grid.
double real_pairing(const Grid& g, const SpinorFieldSet& psi, const SpinorFieldSet& chi);

// <psi, chi> + q.u + p.v
double observable_pairing(const Grid& g, const SystemState& Y, const Observable& Z);

// Squared local energy seminorm: int_{|x|<R} |psi|^2 dx + |q|^2 + |p|^2.
double local_seminorm(const Grid& g, const SystemState& Y, double R);

// L^2 norm of psi restricted to |x| < R.
double local_field_norm(const Grid& g, const SpinorFieldSet& psi, double R);

double field_norm(const Grid& g, const SpinorFieldSet& psi);

// || <x>^sigma psi ||, <x> = sqrt(1 + |x|^2).
double weighted_norm(const Grid& g, const SpinorFieldSet& psi, double sigma);

// sqrt(||psi||_sigma^2 + |q|^2 + |p|^2)
double weighted_state_norm(const Grid& g, const SystemState& Y, double sigma);

// Pairing of two k-space fields: (1/L^d) Re sum_k conj(a) . b, which equals the
// position-space pairing of their inverse transforms.
double fourier_pairing(const Grid& g, const SpinorFieldSet& a_hat, const SpinorFieldSet& b_hat);

}  // namespace diracsim
