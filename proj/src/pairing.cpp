#include "diracsim/pairing.hpp"

#include <cmath>

namespace diracsim {

namespace {

void require_state(const SystemState& Y, const Observable& Z)
{
    Y.psi.require_same_shape(Z.chi, "observable_pairing");
    if (Y.q.size() != Z.u.size() || Y.p.size() != Z.v.size())
        throw ShapeError("observable_pairing: particle vector sizes differ");
}

double raw_dot(const SpinorFieldSet& a, const SpinorFieldSet& b)
{
    a.require_same_shape(b, "real_pairing");
    auto x = a.data();
    auto y = b.data();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    return s;
}

}  // namespace

double real_pairing(const Grid& g, const SpinorFieldSet& psi, const SpinorFieldSet& chi)
{
    if (psi.points() != g.size()) throw ShapeError("real_pairing: field does not live on this grid");
    return raw_dot(psi, chi) * g.cell_volume();
}

double fourier_pairing(const Grid& g, const SpinorFieldSet& a_hat, const SpinorFieldSet& b_hat)
{
    return raw_dot(a_hat, b_hat) / g.volume();
}

double observable_pairing(const Grid& g, const SystemState& Y, const Observable& Z)
{
    require_state(Y, Z);
    return real_pairing(g, Y.psi, Z.chi) + Y.q.dot(Z.u) + Y.p.dot(Z.v);
}

double local_field_norm(const Grid& g, const SpinorFieldSet& psi, double R)
{
    if (R > 0.5 * g.L() * (1.0 + 1e-12)) throw DomainError("local seminorm radius exceeds half the box");
    double s = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (g.radius(idx) >= R) continue;
        for (int n = 0; n < psi.fields(); ++n)
            for (int c = 0; c < psi.spin(); ++c) s += std::norm(psi.component(n, c)[idx]);
    }
    return std::sqrt(s * g.cell_volume());
}

double local_seminorm(const Grid& g, const SystemState& Y, double R)
{
    double f = local_field_norm(g, Y.psi, R);
    return f * f + Y.q.squaredNorm() + Y.p.squaredNorm();
}

double field_norm(const Grid& g, const SpinorFieldSet& psi) { return std::sqrt(psi.squared_sum() * g.cell_volume()); }

double weighted_norm(const Grid& g, const SpinorFieldSet& psi, double sigma)
{
    double s = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        double r = g.radius(idx);
        double w = std::pow(1.0 + r * r, sigma);
        double a = 0.0;
        for (int n = 0; n < psi.fields(); ++n)
            for (int c = 0; c < psi.spin(); ++c) a += std::norm(psi.component(n, c)[idx]);
        s += w * a;
    }
    return std::sqrt(s * g.cell_volume());
}

double weighted_state_norm(const Grid& g, const SystemState& Y, double sigma)
{
    double f = weighted_norm(g, Y.psi, sigma);
    return std::sqrt(f * f + Y.q.squaredNorm() + Y.p.squaredNorm());
}

}  // namespace diracsim
