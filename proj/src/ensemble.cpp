#include "diracsim/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diracsim/coupled.hpp"
#include "diracsim/pairing.hpp"
#include "diracsim/parallel.hpp"

namespace diracsim {

namespace {

int real_dim(const Model& m) { return 2 * m.spin() * m.n_fields(); }

RMat default_particle(const Model& m, const RMat& particle)
{
    const int d2 = 2 * m.dim();
    if (particle.size() == 0) return RMat::Zero(d2, d2);
    if (particle.rows() != d2 || particle.cols() != d2)
        throw ShapeError("particle covariance must be " + std::to_string(d2) + "x" + std::to_string(d2));
    return particle;
}

// Hermitian PSD square root with negative eigenvalues clipped.
CMat psd_root(const CMat& a)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()));
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

RMat psd_root(const RMat& a)
{
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (a + a.transpose()));
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Fejer kernel h/n (sin(n th/2) / sin(th/2))^2, the lattice transform of max(0, 1 - |j|/n).
double fejer(double theta, int n, double h)
{
    const double s = std::sin(0.5 * theta);
    if (std::abs(s) < 1e-12) return h * n;
    const double r = std::sin(0.5 * n * theta) / s;
    return h / n * r * r;
}

// out[i] = sum_{j<n} in[i - j] along every axis (periodic).
void box_filter(const Grid& g, int n, std::vector<double>& f)
{
    const int M = g.M();
    const int d = g.dim();
    std::vector<double> line(static_cast<std::size_t>(M)), out(static_cast<std::size_t>(M));
    for (int a = 0; a < d; ++a) {
        std::size_t stride = 1;
        for (int b = a + 1; b < d; ++b) stride *= static_cast<std::size_t>(M);
        const std::size_t lines = g.size() / static_cast<std::size_t>(M);
        for (std::size_t li = 0; li < lines; ++li) {
            const std::size_t base = (li / stride) * stride * M + li % stride;
            for (int i = 0; i < M; ++i) line[i] = f[base + i * stride];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += line[(M - j) % M];
            for (int i = 0; i < M; ++i) {
                out[i] = acc;
                acc += line[(i + 1) % M] - line[((i + 1 - n) % M + M) % M];
            }
            for (int i = 0; i < M; ++i) f[base + i * stride] = out[i];
        }
    }
}

}  // namespace

CMat CovarianceModel::at(std::size_t idx) const
{
    if (!full.empty()) return full[idx];
    return CMat::Identity(D, D) * density[idx];
}

CovarianceModel triangular_covariance(const Model& m, double range, double variance, const RMat& particle)
{
    const Grid& g = m.grid();
    if (!(range > 0.0) || !(variance >= 0.0)) throw DomainError("triangular covariance needs range > 0, variance >= 0");
    CovarianceModel c;
    c.kind = CovarianceKind::FiniteRange;
    c.D = real_dim(m);
    c.points = g.size();
    c.lattice_range = std::max(1, static_cast<int>(std::lround(range / g.h())));
    if (2 * c.lattice_range >= g.M()) throw DomainError("covariance range does not fit in the box");
    c.range = c.lattice_range * g.h();
    c.variance = variance;
    c.particle = default_particle(m, particle);
    c.density.resize(g.size());
    std::vector<double> axis(static_cast<std::size_t>(g.M()));
    for (int i = 0; i < g.M(); ++i) axis[i] = fejer(2.0 * pi * i / g.M(), c.lattice_range, g.h());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto ijk = g.unravel(idx);
        double v = variance;
        for (int a = 0; a < g.dim(); ++a) v *= axis[ijk[a]];
        c.density[idx] = v;
    }
    return c;
}

CovarianceModel gaussian_spectral_covariance(const Model& m, double length, double variance, const RMat& particle)
{
    const Grid& g = m.grid();
    if (!(length > 0.0) || !(variance >= 0.0)) throw DomainError("gaussian covariance needs length > 0, variance >= 0");
    CovarianceModel c;
    c.kind = CovarianceKind::SpectralGaussian;
    c.D = real_dim(m);
    c.points = g.size();
    c.range = length;
    c.variance = variance;
    c.particle = default_particle(m, particle);
    c.density.resize(g.size());
    const double norm = variance * std::pow(2.0 * pi * length * length, 0.5 * g.dim());
    const double dk = 2.0 * pi / g.L();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto ijk = g.unravel(idx);
        double k2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double k = g.signed_index(ijk[a]) * dk;
            k2 += k * k;
        }
        c.density[idx] = norm * std::exp(-0.5 * length * length * k2);
    }
    return c;
}

CovarianceModel general_covariance(const Model& m, std::vector<CMat> qhat, const RMat& particle)
{
    const Grid& g = m.grid();
    if (qhat.size() != g.size()) throw ShapeError("general covariance needs one matrix per grid point");
    CovarianceModel c;
    c.kind = CovarianceKind::General;
    c.D = real_dim(m);
    c.points = g.size();
    for (const auto& q : qhat)
        if (q.rows() != c.D || q.cols() != c.D) throw ShapeError("general covariance blocks must be D x D");
    c.full = std::move(qhat);
    c.particle = default_particle(m, particle);
    return c;
}

CovarianceReport validate_covariance(const Model& m, const CovarianceModel& cov)
{
    const Grid& g = m.grid();
    CovarianceReport r;
    if (cov.points != g.size() || cov.D != real_dim(m)) throw ShapeError("covariance does not match the model grid");
    double scale = 0.0;
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        double lo;
        if (cov.diagonal()) {
            lo = cov.density[idx];
            scale = std::max(scale, std::abs(lo));
        } else {
            const CMat& q = cov.full[idx];
            const std::size_t neg = g.negate(idx);
            r.conjugate_asymmetry = std::max(r.conjugate_asymmetry, (cov.full[neg] - q.conjugate()).cwiseAbs().maxCoeff());
            r.conjugate_asymmetry = std::max(r.conjugate_asymmetry, (q - q.adjoint()).cwiseAbs().maxCoeff());
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (q + q.adjoint()), Eigen::EigenvaluesOnly);
            lo = es.eigenvalues()(0);
            scale = std::max(scale, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        if (lo < r.min_eigenvalue) {
            r.min_eigenvalue = lo;
            r.worst_index = idx;
        }
    }
    const double tol = 1e-12 * std::max(scale, 1e-300);
    std::ostringstream msg;
    if (r.min_eigenvalue < -std::max(1e-12, tol)) {
        r.ok = false;
        auto k = m.fourier().wavevector(r.worst_index);
        msg << "indefinite spectral density: eigenvalue " << r.min_eigenvalue << " at k = (" << k[0];
        for (int a = 1; a < g.dim(); ++a) msg << ", " << k[a];
        msg << ") (index " << r.worst_index << "); ";
    }
    if (r.conjugate_asymmetry > 1e-12 * std::max(scale, 1.0)) {
        r.ok = false;
        msg << "qhat(-k) != conj qhat(k) or not Hermitian (" << r.conjugate_asymmetry << "); ";
    }
    if (cov.kind != CovarianceKind::SpectralGaussian && cov.range > 0.0) {
        // Inverse transform of every entry; nothing may survive beyond the range.
        const int D = cov.diagonal() ? 1 : cov.D;
        std::vector<cd> buf(g.size());
        double peak = 0.0, leak = 0.0;
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                for (std::size_t idx = 0; idx < g.size(); ++idx)
                    buf[idx] = cov.diagonal() ? cd(cov.density[idx]) : cov.full[idx](a, b);
                m.fft().inverse(buf.data());
                for (std::size_t idx = 0; idx < g.size(); ++idx) {
                    const double v = std::abs(buf[idx]);
                    peak = std::max(peak, v);
                    auto x = g.position(idx);
                    bool outside = false;
                    for (int ax = 0; ax < g.dim(); ++ax) outside |= std::abs(x[ax]) >= cov.range - 1e-9 * g.h();
                    if (outside) leak = std::max(leak, v);
                }
            }
        r.range_leak = peak > 0.0 ? leak / peak : 0.0;
        if (r.range_leak > 1e-10) {
            r.ok = false;
            msg << "correlation extends beyond range " << cov.range << " (relative " << r.range_leak << "); ";
        }
    }
    Eigen::SelfAdjointEigenSolver<RMat> pes(cov.particle, Eigen::EigenvaluesOnly);
    if (cov.particle.size() > 0 && pes.eigenvalues()(0) < -1e-12) {
        r.ok = false;
        msg << "particle covariance is indefinite; ";
    }
    r.message = msg.str();
    return r;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream)
{
    std::uint64_t x = splitmix64(master_seed ^ splitmix64(stream));
    for (auto& s : s_) {
        x = splitmix64(x);
        s = x;
    }
}

// xoshiro256**
std::uint64_t Rng::next()
{
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * pi * u2);
}

Sampler::Sampler(const Model& m, const CovarianceModel& cov, const SamplerOptions& opt)
    : model_(m), cov_(cov), opt_(opt)
{
    auto rep = validate_covariance(m, cov);
    if (!rep.ok) throw DomainError("invalid covariance: " + rep.message);
    const double hd = m.grid().cell_volume();
    if (opt.law == InitialLaw::ShotNoise) {
        if (cov.kind != CovarianceKind::FiniteRange || !cov.diagonal())
            throw DomainError("shot-noise sampling needs the triangular finite-range covariance");
        if (!(opt.shot_probability > 0.0 && opt.shot_probability <= 1.0))
            throw DomainError("shot probability must lie in (0, 1]");
    } else if (cov.diagonal()) {
        root_density_.resize(cov.density.size());
        for (std::size_t i = 0; i < cov.density.size(); ++i)
            root_density_[i] = std::sqrt(std::max(0.0, cov.density[i]) / hd);
    } else {
        root_full_.resize(cov.full.size());
        for (std::size_t i = 0; i < cov.full.size(); ++i) root_full_[i] = psd_root(CMat(cov.full[i] / hd));
    }
    particle_root_ = psd_root(cov.particle);
}

SystemState Sampler::sample(std::uint64_t master_seed, std::uint64_t index) const
{
    const Grid& g = model_.grid();
    const std::size_t P = g.size();
    const int s = model_.spin();
    const int N = model_.n_fields();
    Rng rng(master_seed, index);
    SystemState Y = model_.zero_state();

    if (opt_.law == InitialLaw::ShotNoise) {
        const int n = cov_.lattice_range;
        const double amp = std::sqrt(cov_.variance / (opt_.shot_probability * std::pow(n, g.dim())));
        std::vector<double> f(P);
        for (int fi = 0; fi < N; ++fi)
            for (int part = 0; part < 2; ++part)
                for (int c = 0; c < s; ++c) {
                    for (std::size_t x = 0; x < P; ++x) {
                        const bool hit = rng.uniform() < opt_.shot_probability;
                        const bool neg = (rng.next() >> 63) != 0;
                        f[x] = hit ? (neg ? -amp : amp) : 0.0;
                    }
                    box_filter(g, n, f);
                    auto comp = Y.psi.component(fi, c);
                    for (std::size_t x = 0; x < P; ++x) comp[x] += part == 0 ? cd(f[x]) : cd(0.0, f[x]);
                }
    } else if (cov_.diagonal()) {
        std::vector<cd> w(P);
        for (int fi = 0; fi < N; ++fi)
            for (int c = 0; c < s; ++c) {
                // Real and imaginary parts share one transform: the filter is real and even.
                for (std::size_t x = 0; x < P; ++x) {
                    const double re = rng.normal();
                    const double im = rng.normal();
                    w[x] = cd(re, im);
                }
                model_.fft().forward_raw(w.data());
                for (std::size_t k = 0; k < P; ++k) w[k] *= root_density_[k];
                model_.fft().inverse_raw(w.data());
                auto comp = Y.psi.component(fi, c);
                for (std::size_t x = 0; x < P; ++x) comp[x] = w[x] / static_cast<double>(P);
            }
    } else {
        const int D = cov_.D;
        std::vector<std::vector<cd>> w(static_cast<std::size_t>(D), std::vector<cd>(P));
        for (int a = 0; a < D; ++a) {
            for (std::size_t x = 0; x < P; ++x) w[a][x] = rng.normal();
            model_.fft().forward_raw(w[a].data());
        }
        CVec in(D), out(D);
        for (std::size_t k = 0; k < P; ++k) {
            for (int a = 0; a < D; ++a) in(a) = w[a][k];
            out = root_full_[k] * in;
            for (int a = 0; a < D; ++a) w[a][k] = out(a);
        }
        for (int a = 0; a < D; ++a) model_.fft().inverse_raw(w[a].data());
        for (int fi = 0; fi < N; ++fi)
            for (int c = 0; c < s; ++c) {
                auto comp = Y.psi.component(fi, c);
                const auto& re = w[static_cast<std::size_t>(fi * 2 * s + c)];
                const auto& im = w[static_cast<std::size_t>(fi * 2 * s + s + c)];
                for (std::size_t x = 0; x < P; ++x)
                    comp[x] = cd(re[x].real(), im[x].real()) / static_cast<double>(P);
            }
    }

    const int d = model_.dim();
    RVec z(2 * d);
    for (int i = 0; i < 2 * d; ++i) z(i) = rng.normal();
    RVec qp = particle_root_ * z;
    Y.q = qp.head(d);
    Y.p = qp.tail(d);
    return Y;
}

SystemState sample_initial(const Model& m, const CovarianceModel& cov, std::uint64_t master_seed,
                           std::uint64_t sample_index, const SamplerOptions& opt)
{
    return Sampler(m, cov, opt).sample(master_seed, sample_index);
}

double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& x)
{
    const double M = static_cast<double>(x.size());
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) return {*lo, 0.0};
    const double mean = pairwise_sum(x) / M;
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - mean) * (x[i] - mean);
    const double var = pairwise_sum(dev) / (M - 1.0);
    return {mean, std::sqrt(var / M)};
}

std::vector<double> pair_all(const Grid& g, std::span<const SystemState> samples, const Observable& Z)
{
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = observable_pairing(g, samples[i], Z);
    return out;
}

}  // namespace

CorrelationEstimate estimate_correlation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw ShapeError("estimate_correlation: sample counts differ");
    if (a.size() < 2) throw DomainError("estimate_correlation needs at least 2 samples");
    std::vector<double> x(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] * b[i];
    auto [mean, se] = mean_and_se(x);
    return {mean, se, a.size()};
}

CorrelationEstimate estimate_correlation(const Grid& g, std::span<const SystemState> samples, const Observable& Z1,
                                         const Observable& Z2)
{
    auto a = pair_all(g, samples, Z1);
    auto b = pair_all(g, samples, Z2);
    return estimate_correlation(a, b);
}

CharfuncEstimate estimate_charfunc(std::span<const double> pairings)
{
    if (pairings.size() < 2) throw DomainError("estimate_charfunc needs at least 2 samples");
    std::vector<double> c(pairings.size()), s(pairings.size());
    for (std::size_t i = 0; i < pairings.size(); ++i) {
        c[i] = std::cos(pairings[i]);
        s[i] = std::sin(pairings[i]);
    }
    auto [cm, cse] = mean_and_se(c);
    auto [sm, sse] = mean_and_se(s);
    return {cd(cm, sm), cse, sse, pairings.size()};
}

CharfuncEstimate estimate_charfunc(const Grid& g, std::span<const SystemState> samples, const Observable& Z)
{
    return estimate_charfunc(pair_all(g, samples, Z));
}

GaussianityStats gaussianity_stats(std::span<const double> pairings)
{
    const std::size_t M = pairings.size();
    if (M < 100) throw DomainError("gaussianity_stats needs at least 100 samples");
    const double mean = pairwise_sum(pairings) / static_cast<double>(M);
    std::vector<double> d2(M), d4(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double d = pairings[i] - mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = pairwise_sum(d2) / static_cast<double>(M);
    const double m4 = pairwise_sum(d4) / static_cast<double>(M);
    if (!(m2 > 0.0)) throw DegenerateInputError("gaussianity_stats: zero variance");
    GaussianityStats st;
    st.samples = M;
    st.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    st.standard_error = std::sqrt(24.0 / static_cast<double>(M));
    st.gaussian = std::abs(st.excess_kurtosis) <= 4.0 * st.standard_error;
    return st;
}

GaussianityStats gaussianity_stats(const Grid& g, std::span<const SystemState> samples, const Observable& Z)
{
    return gaussianity_stats(pair_all(g, samples, Z));
}

Observable make_observable(const Model& m, const ObservableSpec& spec)
{
    const Grid& g = m.grid();
    const int d = m.dim();
    Observable Z = m.zero_observable();
    if (spec.field >= 0) {
        if (spec.field >= m.n_fields() || spec.component < 0 || spec.component >= m.spin())
            throw DomainError("observable '" + spec.id + "': field or component out of range");
        if (!spec.center.empty() && static_cast<int>(spec.center.size()) != d)
            throw ShapeError("observable '" + spec.id + "': center has the wrong dimension");
        if (!(spec.radius > 0.0)) throw DomainError("observable '" + spec.id + "': radius must be positive");
        auto comp = Z.chi.component(spec.field, spec.component);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            auto x = g.position(idx);
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double dx = x[a] - (spec.center.empty() ? 0.0 : spec.center[a]);
                dx -= g.L() * std::round(dx / g.L());
                r2 += dx * dx;
            }
            const double u = 1.0 - r2 / (spec.radius * spec.radius);
            if (u <= 0.0) continue;
            const double v = spec.amplitude * u * u * u * u;
            comp[idx] = spec.imaginary ? cd(0.0, v) : cd(v);
        }
    }
    auto fill = [&](const std::vector<double>& src, RVec& dst, const char* what) {
        if (src.empty()) return;
        if (static_cast<int>(src.size()) != d)
            throw ShapeError("observable '" + spec.id + "': " + what + " has the wrong dimension");
        for (int a = 0; a < d; ++a) dst(a) = src[a];
    };
    fill(spec.u, Z.u, "u");
    fill(spec.v, Z.v, "v");
    return Z;
}

EnsembleResult run_ensemble(const Model& m, const EnsembleSpec& spec)
{
    if (spec.samples < 1) throw DomainError("ensemble needs at least one sample");
    if (spec.times.empty()) throw DomainError("ensemble needs output times");
    const double dt = m.config().dt;
    std::vector<int> idx;
    for (double t : spec.times) {
        if (t < 0.0) throw DomainError("ensemble output times must be nonnegative");
        idx.push_back(static_cast<int>(std::lround(t / dt)));
    }
    const int last = *std::max_element(idx.begin(), idx.end());
    Evolver ev(m, std::max(last, 1) * dt);
    Sampler sampler(m, spec.cov, spec.sampler);

    EnsembleResult r;
    for (int i : idx) r.times.push_back(i * dt);
    const std::size_t nt = idx.size(), nz = spec.observables.size(), M = static_cast<std::size_t>(spec.samples);
    r.pairings.assign(nt, std::vector<std::vector<double>>(nz, std::vector<double>(M, 0.0)));

    parallel_for(M, spec.threads, [&](std::size_t i) {
        SystemState Y0 = sampler.sample(spec.seed, i);
        TrajectorySolution traj = ev.trajectory(Y0);
        ev.fields(Y0, traj, idx, [&](std::size_t ti, SpinorFieldSet&& psi) {
            SystemState Y{std::move(psi), traj.q[static_cast<std::size_t>(idx[ti])],
                          traj.p[static_cast<std::size_t>(idx[ti])]};
            for (std::size_t z = 0; z < nz; ++z)
                r.pairings[ti][z][i] = observable_pairing(m.grid(), Y, spec.observables[z]);
        });
    });
    return r;
}

}  // namespace diracsim
