#include "diracsim/imag_axis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <Eigen/SVD>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "diracsim/kernel.hpp"

namespace diracsim {

namespace {

// j1(x)/x and j2(x)
std::pair<double, double> bessel_terms(double x)
{
    if (x < 1.0) {
        // j_n(x) = x^n sum_k (-x^2/2)^k / (k! (2n+2k+1)!!)
        const double y = -0.5 * x * x;
        double t1 = 1.0 / 3.0, t2 = 1.0 / 15.0, s1 = 0.0, s2 = 0.0;
        for (int k = 0; k < 12; ++k) {
            s1 += t1;
            s2 += t2;
            t1 *= y / ((k + 1) * (2.0 * k + 5.0));
            t2 *= y / ((k + 1) * (2.0 * k + 7.0));
        }
        return {s1, x * x * s2};
    }
    const double s = std::sin(x), c = std::cos(x);
    const double j1 = s / (x * x) - c / x;
    const double j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
    return {j1 / x, j2};
}

class Quadrature {
public:
    Quadrature() : ws_(gsl_integration_workspace_alloc(limit)) { gsl_set_error_handler_off(); }
    ~Quadrature() { gsl_integration_workspace_free(ws_); }
    Quadrature(const Quadrature&) = delete;
    Quadrature& operator=(const Quadrature&) = delete;

    double regular(const std::function<double(double)>& f, double a, double b, double epsabs)
    {
        auto fn = wrap(f);
        double res = 0.0, err = 0.0;
        gsl_integration_qag(&fn, a, b, epsabs, 1e-11, limit, GSL_INTEG_GAUSS41, ws_, &res, &err);
        return res;
    }

    double with_points(const std::function<double(double)>& f, std::vector<double> pts, double epsabs)
    {
        auto fn = wrap(f);
        double res = 0.0, err = 0.0;
        gsl_integration_qagp(&fn, pts.data(), pts.size(), epsabs, 1e-11, limit, ws_, &res, &err);
        return res;
    }

    // PV int_a^b f(x) / (x - c) dx
    double cauchy(const std::function<double(double)>& f, double a, double b, double c, double epsabs)
    {
        auto fn = wrap(f);
        double res = 0.0, err = 0.0;
        gsl_integration_qawc(&fn, a, b, c, epsabs, 1e-11, limit, ws_, &res, &err);
        return res;
    }

private:
    static constexpr std::size_t limit = 2000;

    static double trampoline(double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); }

    gsl_function wrap(const std::function<double(double)>& f)
    {
        gsl_function g;
        g.function = &trampoline;
        g.params = const_cast<std::function<double(double)>*>(&f);
        return g;
    }

    gsl_integration_workspace* ws_;
};

void check_branch_distance(const Model& m, double omega)
{
    for (int n = 0; n < m.n_fields(); ++n)
        if (std::abs(std::abs(omega) - m.mass(n)) < 1e-6)
            throw DomainError("omega = " + std::to_string(omega) + " lies at a branch point +-m_n");
}

double radial_prefactor(int d) { return std::pow(2.0 * pi, -d); }

}  // namespace

SpectralInterpolant::SpectralInterpolant(const Model& m, double cutoff, int chebyshev_nodes) : dim_(m.dim())
{
    const auto& g = m.grid();
    const std::size_t P = g.size();
    const auto sw = spectral_weight(m);
    for (int n = 0; n < m.n_fields(); ++n) {
        std::vector<cd> buf(P);
        for (std::size_t i = 0; i < P; ++i) buf[i] = sw.B[static_cast<std::size_t>(n)][i];
        m.fft().inverse_raw(buf.data());
        double mx = 0.0;
        for (auto& v : buf) {
            v /= double(P);
            mx = std::max(mx, std::abs(v.real()));
        }
        std::vector<Lag> lags;
        std::map<long, LagShell> by_radius;
        if (mx > 0.0) {
            for (std::size_t i = 0; i < P; ++i) {
                const double c = buf[i].real();
                if (std::abs(c) <= cutoff * mx) continue;
                const auto x = g.position(i);
                const auto ijk = g.unravel(i);
                long key = 0;
                for (int a = 0; a < dim_; ++a) key += long(g.signed_index(ijk[a])) * g.signed_index(ijk[a]);
                auto& sh = by_radius[key];
                sh.r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                sh.c += c;
                if (sh.r > 0.0)
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b) sh.zz[a][b] += c * x[a] * x[b] / (sh.r * sh.r);
                // keep one lag of each +-z pair with doubled weight
                const std::size_t j = g.negate(i);
                if (j == i) lags.push_back({{x[0], x[1], x[2]}, c});
                else if (i < j) lags.push_back({{x[0], x[1], x[2]}, 2.0 * c});
            }
        }
        std::vector<LagShell> shells;
        for (auto& [key, sh] : by_radius) shells.push_back(sh);
        lags_.push_back(std::move(lags));
        shells_.push_back(std::move(shells));
    }

    // radial cut
    const double zone = pi / g.h();
    double peak = 0.0;
    std::vector<double> prof(201);
    for (int i = 0; i <= 200; ++i) {
        double r = zone * i / 200.0;
        double v = 0.0;
        for (int n = 0; n < m.n_fields(); ++n) v += std::abs(angular_moment_exact(n, r).trace());
        prof[static_cast<std::size_t>(i)] = v * std::pow(r, dim_ + 1);
        peak = std::max(peak, prof[static_cast<std::size_t>(i)]);
    }
    r_max_ = zone;
    if (peak > 0.0) {
        int last = 200;
        while (last > 1 && prof[static_cast<std::size_t>(last)] < 1e-15 * peak) --last;
        r_max_ = std::min(zone, zone * std::min(200, last + 2) / 200.0);
    }

    const int N = chebyshev_nodes;
    for (int k = 0; k <= N; ++k) nodes_.push_back(0.5 * r_max_ * (1.0 - std::cos(pi * k / N)));
    for (int n = 0; n < m.n_fields(); ++n) {
        std::vector<RMat> t;
        for (double r : nodes_) t.push_back(angular_moment_exact(n, r));
        table_.push_back(std::move(t));
    }
}

double SpectralInterpolant::B(int n, const std::array<double, 3>& k) const
{
    double s = 0.0;
    for (const auto& l : lags_[static_cast<std::size_t>(n)]) s += l.c * std::cos(k[0] * l.z[0] + k[1] * l.z[1] + k[2] * l.z[2]);
    return s;
}

RMat SpectralInterpolant::angular_moment_exact(int n, double r) const
{
    const int d = dim_;
    RMat A = RMat::Zero(d, d);
    const auto& shells = shells_[static_cast<std::size_t>(n)];
    if (d == 1) {
        double s = 0.0;
        for (const auto& sh : shells) s += sh.c * std::cos(r * sh.r);
        A(0, 0) = 2.0 * s;
        return A;
    }
    for (const auto& sh : shells) {
        if (sh.r == 0.0) {
            A.diagonal().array() += sh.c / 3.0;
            continue;
        }
        auto [a, b] = bessel_terms(r * sh.r);
        for (int i = 0; i < 3; ++i) {
            A(i, i) += sh.c * a;
            for (int j = 0; j < 3; ++j) A(i, j) -= b * sh.zz[i][j];
        }
    }
    return 4.0 * pi * A;
}

RMat SpectralInterpolant::angular_moment(int n, double r) const
{
    const int d = dim_;
    if (r < 0.0 || r > r_max_) return RMat::Zero(d, d);
    const auto& tab = table_[static_cast<std::size_t>(n)];
    const int N = static_cast<int>(nodes_.size()) - 1;
    RMat num = RMat::Zero(d, d);
    double den = 0.0;
    for (int k = 0; k <= N; ++k) {
        double diff = r - nodes_[static_cast<std::size_t>(k)];
        if (diff == 0.0) return tab[static_cast<std::size_t>(k)];
        double w = (k % 2 == 0 ? 1.0 : -1.0) * ((k == 0 || k == N) ? 0.5 : 1.0) / diff;
        num += w * tab[static_cast<std::size_t>(k)];
        den += w;
    }
    return num / den;
}

RMat SpectralInterpolant::surface_integral(int n, double r, int nodes) const
{
    const int d = dim_;
    RMat S = RMat::Zero(d, d);
    if (d == 1) {
        S(0, 0) = r * r * (B(n, {r, 0.0, 0.0}) + B(n, {-r, 0.0, 0.0}));
        return S;
    }
    // Gauss-Legendre in cos(theta) times the trapezoid rule in phi.
    gsl_integration_glfixed_table* gl = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nodes));
    const int nphi = 2 * nodes;
    for (int i = 0; i < nodes; ++i) {
        double z = 0.0, wz = 0.0;
        gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &z, &wz, gl);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int k = 0; k < nphi; ++k) {
            const double phi = 2.0 * pi * k / nphi;
            const double th[3] = {rho * std::cos(phi), rho * std::sin(phi), z};
            const double b = wz * B(n, {r * th[0], r * th[1], r * th[2]});
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) S(a, c) += th[a] * th[c] * b;
        }
    }
    gsl_integration_glfixed_table_free(gl);
    return S * (2.0 * pi / nphi) * std::pow(r, 4);
}

CMat imag_limit(const Model& m, const SpectralInterpolant& si, double omega)
{
    check_branch_distance(m, omega);
    const int d = m.dim();
    const double R = si.r_max();
    const double pre = radial_prefactor(d);
    CMat H = CMat::Zero(d, d);
    Quadrature q;
    for (int n = 0; n < m.n_fields(); ++n) {
        const double mn = m.mass(n);
        const double a = omega * omega - mn * mn;
        double scale = 0.0;
        for (int k = 0; k <= 40; ++k) {
            double r = R * k / 40.0;
            scale = std::max(scale, std::pow(r, d + 1) * si.angular_moment(n, r).cwiseAbs().maxCoeff());
        }
        const double epsabs = 1e-14 * std::max(scale, 1e-300) * R;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                auto g = [&](double r) { return std::pow(r, d + 1) * si.angular_moment(n, r)(i, j); };
                double re;
                if (a > 0.0 && std::sqrt(a) < R) {
                    const double kap = std::sqrt(a);
                    re = q.cauchy([&](double r) { return g(r) / (r + kap); }, 0.0, R, kap, epsabs);
                } else {
                    re = q.regular([&](double r) { return g(r) / (r * r - a); }, 0.0, R, epsabs);
                }
                re *= pre * mn;
                H(i, j) += re;
                if (i != j) H(j, i) += re;
            }
        if (a > 0.0) {
            const double kap = std::sqrt(a);
            if (kap < R) {
                RMat S = si.surface_integral(n, kap);
                double sgn = omega > 0.0 ? 1.0 : -1.0;
                H += cd(0.0, -sgn * pi * pre * mn / (2.0 * kap)) * S.cast<cd>();
            }
        }
    }
    return H;
}

CMat htilde_continuum(const Model& m, const SpectralInterpolant& si, double omega, double eps)
{
    const int d = m.dim();
    const double R = si.r_max();
    const double pre = radial_prefactor(d);
    CMat H = CMat::Zero(d, d);
    Quadrature q;
    for (int n = 0; n < m.n_fields(); ++n) {
        const double mn = m.mass(n);
        // r^2 + m^2 - (omega - i eps)^2 = r^2 - a + i b
        const double a = omega * omega - mn * mn - eps * eps;
        const double b = 2.0 * omega * eps;
        std::vector<double> pts{0.0};
        if (a > 0.0) {
            const double kap = std::sqrt(a);
            const double w = std::abs(b) / (2.0 * kap);
            for (double f : {-1000.0, -100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, 1000.0}) {
                double p = kap + f * w;
                if (p > pts.back() && p < R) pts.push_back(p);
            }
        }
        pts.push_back(R);
        double scale = 0.0;
        for (int k = 0; k <= 40; ++k) {
            double r = R * k / 40.0;
            scale = std::max(scale, std::pow(r, d + 1) * si.angular_moment(n, r).cwiseAbs().maxCoeff());
        }
        const double epsabs = 1e-13 * std::max(scale, 1e-300);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                auto g = [&](double r) { return std::pow(r, d + 1) * si.angular_moment(n, r)(i, j); };
                auto fre = [&](double r) {
                    double x = r * r - a;
                    return g(r) * x / (x * x + b * b);
                };
                auto fim = [&](double r) {
                    double x = r * r - a;
                    return -g(r) * b / (x * x + b * b);
                };
                cd v(q.with_points(fre, pts, epsabs), q.with_points(fim, pts, epsabs));
                v *= pre * mn;
                H(i, j) += v;
                if (i != j) H(j, i) += v;
            }
    }
    return H;
}

CMat htilde_eps_limit(const Model& m, const SpectralInterpolant& si, double omega, const std::vector<double>& eps)
{
    if (eps.size() < 2) throw DomainError("htilde_eps_limit needs at least two eps values");
    std::vector<CMat> level;
    for (double e : eps) level.push_back(htilde_continuum(m, si, omega, e));
    double ratio = eps[0] / eps[1];
    for (std::size_t order = 1; level.size() > 1; ++order) {
        double f = std::pow(ratio, double(order));
        std::vector<CMat> next;
        for (std::size_t i = 0; i + 1 < level.size(); ++i) next.push_back((f * level[i + 1] - level[i]) / (f - 1.0));
        level = std::move(next);
    }
    return level[0];
}

InvertibilityScan invertibility_scan(const Model& m, const SpectralInterpolant& si, const std::vector<double>& omegas,
                                     double singular_tol)
{
    InvertibilityScan scan;
    scan.min_singular_value = std::numeric_limits<double>::infinity();
    const int d = m.dim();
    for (double w : omegas) {
        for (int n = 0; n < m.n_fields(); ++n)
            if (std::abs(std::abs(w) - m.mass(n)) < 1e-3)
                throw DomainError("scan point " + std::to_string(w) + " is closer than 1e-3 to a branch point");
        CMat Ht = imag_limit(m, si, w);
        CMat N = -w * w * CMat::Identity(d, d) + m.V().cast<cd>() - Ht;
        double sv = Eigen::JacobiSVD<CMat>(N).singularValues().minCoeff();
        scan.points.push_back({w, sv, Ht});
        if (sv < scan.min_singular_value) {
            scan.min_singular_value = sv;
            scan.argmin_omega = w;
        }
    }
    scan.singular = scan.min_singular_value <= singular_tol;
    return scan;
}

std::vector<double> scan_grid(const Model& m, double lo, double hi, int count, double gap)
{
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        double w = lo + (hi - lo) * i / std::max(1, count - 1);
        bool ok = true;
        for (int n = 0; n < m.n_fields(); ++n) ok = ok && std::abs(std::abs(w) - m.mass(n)) >= gap;
        if (ok) out.push_back(w);
    }
    return out;
}

}  // namespace diracsim
