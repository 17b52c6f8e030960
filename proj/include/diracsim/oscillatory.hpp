#pragma once
#include <span>
#include <utility>
#include <vector>

#include "diracsim/types.hpp"

namespace diracsim {

// (int_0^1 (1-u) e^{z u} du, int_0^1 u e^{z u} du)
std::pair<cd, cd> filon_weights(cd z);

// int_0^{(J) dt} f(s) e^{z s} ds with f piecewise linear through samples f_j = f(j dt).
cd filon_integral(std::span<const double> f, double dt, cd z);
cd filon_integral(std::span<const cd> f, double dt, cd z);

// Batched transforms: out[i * omegas.size() + w] = int_0^T f_i(s) exp(-i omega_w s) ds,
// with f_i the i-th row of `rows` (each of length J+1, uniform step dt).
std::vector<cd> fourier_integrals(const std::vector<std::vector<double>>& rows, double dt,
                                  std::span<const double> omegas, int threads = 1);

// Uniform grid t_j = j dt, j = 0..steps.
struct TimeGrid {
    double dt = 0.0;
    int steps = 0;
    double t(int j) const { return j * dt; }
    double T() const { return steps * dt; }
    int size() const { return steps + 1; }
    // Index of t on the grid; throws when t is not a grid point.
    int index_of(double t) const;
    static TimeGrid covering(double T, double dt);
};

}  // namespace diracsim
