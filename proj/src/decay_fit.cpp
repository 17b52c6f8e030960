#include "diracsim/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diracsim/types.hpp"

namespace diracsim {

DecayFit fit_power_law(std::span<const double> t, std::span<const double> v)
{
    if (t.size() != v.size()) throw ShapeError("fit_power_law: length mismatch");
    DecayFit fit;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (v[i] > 0.0 && std::isfinite(v[i])) {
            fit.times.push_back(t[i]);
            fit.values.push_back(v[i]);
        }
    }
    if (fit.times.size() < 2) throw DegenerateInputError("degenerate input: no decay can be fitted to zero data");
    const std::size_t n = fit.times.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log1p(fit.times[i]);
        double y = std::log(fit.values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    if (den <= 0.0) throw DegenerateInputError("degenerate input: fit abscissae coincide");
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

std::vector<double> running_max(std::span<const double> t, std::span<const double> v, double width)
{
    if (t.size() != v.size()) throw ShapeError("running_max: length mismatch");
    std::vector<double> out(v.size());
    if (v.empty()) return out;
    // near the end of the data the window slides back so it keeps its full width
    const double t_end = t.back();
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double start = std::max(t.front(), std::min(t[i], t_end - width));
        while (lo < i && t[lo] < start) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < v.size() && t[hi + 1] <= start + width) ++hi;
        double m = v[i];
        for (std::size_t j = lo; j <= hi; ++j) m = std::max(m, v[j]);
        out[i] = m;
    }
    return out;
}

std::vector<double> log_spaced(double t0, double t1, int n)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[i] = t0 * std::pow(t1 / t0, n == 1 ? 0.0 : double(i) / (n - 1));
    return out;
}

DecayFit fit_envelope(std::span<const double> t, std::span<const double> v, double width, double t0, double t1,
                      int points)
{
    if (t.size() != v.size()) throw ShapeError("fit_envelope: length mismatch");
    std::vector<double> env = width > 0.0 ? running_max(t, v, width) : std::vector<double>(v.begin(), v.end());
    std::vector<double> ft, fv;
    std::size_t last = t.size();
    for (double target : log_spaced(t0, t1, points)) {
        auto it = std::lower_bound(t.begin(), t.end(), target);
        std::size_t j = static_cast<std::size_t>(it - t.begin());
        if (j == t.size()) j = t.size() - 1;
        if (j > 0 && std::abs(t[j - 1] - target) < std::abs(t[j] - target)) --j;
        if (j == last) continue;
        last = j;
        ft.push_back(t[j]);
        fv.push_back(env[j]);
    }
    return fit_power_law(ft, fv);
}

namespace {

std::vector<double> ranks(std::span<const double> x)
{
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        double avg = 0.5 * double(i + j);
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("spearman: need two equal-length series");
    auto rx = ranks(x);
    auto ry = ranks(y);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace diracsim
