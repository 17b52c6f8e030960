#pragma once
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diracsim/model.hpp"

namespace diracsim {

enum class CovarianceKind { FiniteRange, SpectralGaussian, General };

// Spectral density of a translation-invariant initial field law in the real
// representation: index n * 2s + i is Re psi_{n,i} for i < s and Im psi_{n,i-s}
// otherwise. E X(k) X(k')^* = L^d qhat(k) delta_kk' with X = h^d DFT of the real
// components.
struct CovarianceModel {
    CovarianceKind kind = CovarianceKind::FiniteRange;
    int D = 0;
    std::size_t points = 0;
    // Correlation range (finite-range kind: the lattice range n h) or length.
    double range = 0.0;
    // Lattice width of the triangle, n = range / h (finite-range kind).
    int lattice_range = 0;
    double variance = 1.0;
    // Diagonal kinds: qhat(k) = density[k] * I.
    std::vector<double> density;
    // General kind: one D x D matrix per grid index.
    std::vector<CMat> full;
    // Covariance of (q0, p0), 2d x 2d.
    RMat particle;

    CMat at(std::size_t idx) const;
    bool diagonal() const { return full.empty(); }
};

// Position correlation variance * prod_axes max(0, 1 - |x_i| / a) per real
// component, a rounded to a whole number of cells; fields independent.
CovarianceModel triangular_covariance(const Model& m, double range, double variance, const RMat& particle);
// qhat = variance (2 pi l^2)^{d/2} exp(-l^2 |k|^2 / 2) per real component.
CovarianceModel gaussian_spectral_covariance(const Model& m, double length, double variance, const RMat& particle);
CovarianceModel general_covariance(const Model& m, std::vector<CMat> qhat, const RMat& particle);

struct CovarianceReport {
    bool ok = true;
    double min_eigenvalue = 0.0;
    std::size_t worst_index = 0;
    // max |qhat(-k) - conj qhat(k)|
    double conjugate_asymmetry = 0.0;
    // max |q0(x)| beyond the declared range, relative to q0(0) (finite-range kind)
    double range_leak = 0.0;
    std::string message;
};

CovarianceReport validate_covariance(const Model& m, const CovarianceModel& cov);

// Gaussian, or Bernoulli box-pulse shot noise with the same covariance (needs
// the finite-range kind).
enum class InitialLaw { Gaussian, ShotNoise };

struct SamplerOptions {
    InitialLaw law = InitialLaw::Gaussian;
    // Pulse probability per site and real component.
    double shot_probability = 0.006;
};

// Precomputes square roots of qhat; sample() is const and thread-safe.
class Sampler {
public:
    Sampler(const Model& m, const CovarianceModel& cov, const SamplerOptions& opt = {});
    SystemState sample(std::uint64_t master_seed, std::uint64_t index) const;

private:
    Model model_;
    CovarianceModel cov_;
    SamplerOptions opt_;
    std::vector<double> root_density_;
    std::vector<CMat> root_full_;
    RMat particle_root_;
};

SystemState sample_initial(const Model& m, const CovarianceModel& cov, std::uint64_t master_seed,
                           std::uint64_t sample_index, const SamplerOptions& opt = {});

// SplitMix64 step; stream seeds are splitmix(master ^ splitmix(index)).
std::uint64_t splitmix64(std::uint64_t x);

// Counter-seeded generator with its own uniform and normal transforms so that
// values do not depend on the standard library implementation.
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream);
    std::uint64_t next();
    double uniform();
    double normal();

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

double pairwise_sum(std::span<const double> v);

struct CorrelationEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

// Mean of a_i b_i with standard error sd / sqrt(M).
CorrelationEstimate estimate_correlation(std::span<const double> a, std::span<const double> b);
CorrelationEstimate estimate_correlation(const Grid& g, std::span<const SystemState> samples, const Observable& Z1,
                                         const Observable& Z2);

struct CharfuncEstimate {
    std::complex<double> value;
    double se_real = 0.0;
    double se_imag = 0.0;
    std::size_t samples = 0;
};

CharfuncEstimate estimate_charfunc(std::span<const double> pairings);
CharfuncEstimate estimate_charfunc(const Grid& g, std::span<const SystemState> samples, const Observable& Z);

struct GaussianityStats {
    double excess_kurtosis = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    // |kurtosis| <= 4 standard errors
    bool gaussian = true;
};

GaussianityStats gaussianity_stats(std::span<const double> pairings);
GaussianityStats gaussianity_stats(const Grid& g, std::span<const SystemState> samples, const Observable& Z);

// Bump (1 - r^2/R^2)^4 in one real component of one field, plus particle parts.
struct ObservableSpec {
    std::string id;
    int field = -1;  // -1: no field part
    int component = 0;
    bool imaginary = false;
    std::vector<double> center;
    double radius = 2.0;
    double amplitude = 1.0;
    std::vector<double> u;
    std::vector<double> v;
};

Observable make_observable(const Model& m, const ObservableSpec& spec);

struct EnsembleSpec {
    CovarianceModel cov;
    SamplerOptions sampler;
    std::uint64_t seed = 1;
    int samples = 100;
    std::vector<double> times;
    std::vector<Observable> observables;
    int threads = 1;
};

// pairings[t][z][sample] = <Y_sample(t), Z_z>
struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::vector<std::vector<double>>> pairings;
};

// Samples and evolves every member (times rounded to the time grid); results do
// not depend on the thread count.
EnsembleResult run_ensemble(const Model& m, const EnsembleSpec& spec);

}  // namespace diracsim
