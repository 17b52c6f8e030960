#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diracsim/config.hpp"
#include "diracsim/ensemble.hpp"
#include "diracsim/model.hpp"

namespace diracsim {

// Seeded bump data: every field component gets a complex normal amplitude times
// (1 - r^2/R^2)^4; q0 and p0 are normal unless given.
struct InitialSpec {
    double radius = 3.0;
    double amplitude = 1.0;
    std::uint64_t seed = 81;
    std::vector<double> q0;
    std::vector<double> p0;
};

struct CovarianceSpec {
    std::string kind = "triangular";  // triangular | spectral-gaussian
    double range = 2.0;
    double variance = 1.0;
    double particle_variance = 1.0;
    std::string law = "gaussian";  // gaussian | shot-noise
    double shot_probability = 0.006;
};

struct ExperimentSettings {
    std::uint64_t seed = 1;
    int threads = 0;  // 0: available parallelism
    double T = 80.0;
    double fit_t0 = 10.0;
    double fit_t1 = 80.0;
    double envelope_width = 0.0;  // 0: 2 pi / m_min
    double local_radius = 2.0;
    InitialSpec initial;

    double kernel_T = 100.0;
    int kernel_stride = 10;

    int simulate_stride = 10;
    std::vector<double> snapshots;

    double xi_horizon = 100.0;
    std::optional<double> xi_tail_tolerance;
    double residual_t0 = 10.0;
    double residual_t1 = 60.0;
    int projection_points = 12;
    double sigma = 2.0;
    double wave_T = 80.0;
    std::vector<double> wave_times{10.0, 20.0, 40.0};

    bool has_ensemble = false;
    CovarianceSpec covariance;
    int samples = 400;
    std::vector<double> times{60.0};
    std::vector<ObservableSpec> observables;
    bool write_samples = true;
};

struct LoadedConfig {
    ModelConfig model;
    ExperimentSettings exp;
    nlohmann::json json;
    // Hash of the effective configuration (after command-line overrides).
    std::string hash;
};

// Accepts {"model": {...}, ...experiment keys} or a bare model object. Every
// schema violation is listed in the thrown ConfigError.
LoadedConfig parse_config(const nlohmann::json& j);
LoadedConfig load_config(const std::string& path);
nlohmann::json experiment_to_json(const ExperimentSettings& e);
void rehash(LoadedConfig& c);

SystemState initial_state(const Model& m, const InitialSpec& spec);
CovarianceModel covariance_from_spec(const Model& m, const CovarianceSpec& spec);
SamplerOptions sampler_from_spec(const CovarianceSpec& spec);

// Exit codes: 0 success, 2 model violates A2/A3, 1 any other error.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace diracsim
