#include "diracsim/oscillatory.hpp"

#include <cmath>

#include "diracsim/parallel.hpp"

namespace diracsim {

std::pair<cd, cd> filon_weights(cd z)
{
    // E0 = int_0^1 e^{zu} du, E1 = int_0^1 u e^{zu} du
    cd E0, E1;
    if (std::abs(z) < 0.5) {
        E0 = 0.0;
        E1 = 0.0;
        cd term = 1.0;  // z^n / n!
        for (int n = 0; n < 30; ++n) {
            E0 += term / double(n + 1);
            E1 += term / double(n + 2);
            term *= z / double(n + 1);
        }
    } else {
        cd ez = std::exp(z);
        E0 = (ez - 1.0) / z;
        E1 = (ez * (z - 1.0) + 1.0) / (z * z);
    }
    return {E0 - E1, E1};
}

template <class T>
static cd filon_impl(std::span<const T> f, double dt, cd z)
{
    if (f.size() < 2) return 0.0;
    auto [w0, w1] = filon_weights(z * dt);
    const cd step = std::exp(z * dt);
    cd phase = 1.0;
    cd acc = 0.0;
    for (std::size_t j = 0; j + 1 < f.size(); ++j) {
        if (j % 128 == 0) phase = std::exp(z * (double(j) * dt));
        acc += phase * (cd(f[j]) * w0 + cd(f[j + 1]) * w1);
        phase *= step;
    }
    return acc * dt;
}

cd filon_integral(std::span<const double> f, double dt, cd z) { return filon_impl(f, dt, z); }

cd filon_integral(std::span<const cd> f, double dt, cd z) { return filon_impl(f, dt, z); }

std::vector<cd> fourier_integrals(const std::vector<std::vector<double>>& rows, double dt,
                                  std::span<const double> omegas, int threads)
{
    const std::size_t nf = rows.size();
    const std::size_t nw = omegas.size();
    std::vector<cd> out(nf * nw, cd(0.0));
    if (nf == 0) return out;
    const std::size_t len = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != len) throw ShapeError("fourier_integrals: rows differ in length");
    if (len < 2) return out;
    parallel_for(nw, threads, [&](std::size_t w) {
        const cd z(0.0, -omegas[w]);
        auto [w0, w1] = filon_weights(z * dt);
        const cd step = std::exp(z * dt);
        std::vector<cd> sum(nf, cd(0.0));
        cd phase = 1.0;
        for (std::size_t j = 0; j + 1 < len; ++j) {
            if (j % 128 == 0) phase = std::exp(z * (double(j) * dt));
            const cd a = phase * w0;
            const cd b = phase * w1;
            for (std::size_t i = 0; i < nf; ++i) sum[i] += a * rows[i][j] + b * rows[i][j + 1];
            phase *= step;
        }
        for (std::size_t i = 0; i < nf; ++i) out[i * nw + w] = sum[i] * dt;
    });
    return out;
}

int TimeGrid::index_of(double t) const
{
    double x = t / dt;
    long j = std::lround(x);
    if (std::abs(x - double(j)) > 1e-6 || j < 0 || j > steps)
        throw DomainError("time " + std::to_string(t) + " is not on the integration grid");
    return static_cast<int>(j);
}

TimeGrid TimeGrid::covering(double T, double dt)
{
    if (!(dt > 0.0) || T < 0.0) throw DomainError("invalid time grid");
    TimeGrid g;
    g.dt = dt;
    g.steps = static_cast<int>(std::ceil(T / dt - 1e-9));
    return g;
}

}  // namespace diracsim
