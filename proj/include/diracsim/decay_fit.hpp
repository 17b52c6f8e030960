#pragma once
#include <span>
#include <vector>

namespace diracsim {

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    // Points actually used by the regression.
    std::vector<double> times;
    std::vector<double> values;
};

// Ordinary least squares of log(v) against log(1 + t). Throws DegenerateInputError
// when every value is zero or fewer than two positive points remain.
DecayFit fit_power_law(std::span<const double> t, std::span<const double> v);

// max of v over samples with t_i <= t_j <= t_i + width (a forward window, so a
// monotone decreasing series is its own envelope); within `width` of the last
// sample the window is the final stretch of that length.
std::vector<double> running_max(std::span<const double> t, std::span<const double> v, double width);

// Power-law fit of the running-maximum envelope on [t0, t1], regressed on `points`
// log-spaced sample times. width <= 0 fits the raw values.
DecayFit fit_envelope(std::span<const double> t, std::span<const double> v, double width, double t0, double t1,
                      int points = 24);

std::vector<double> log_spaced(double t0, double t1, int n);

double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace diracsim
