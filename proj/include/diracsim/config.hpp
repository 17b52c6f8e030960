#pragma once
#include <string>
#include <vector>

#include "json.hpp"

#include "diracsim/types.hpp"

namespace diracsim {

enum class CouplingKind { CompactSupport, GaussianDecay };

// rho_n(x) = amplitudes[n][c] * g(|x|) with g(r) = (1 - r^2/R^2)^4 on r < R
// (compact) or exp(-r^2 / (2 R^2)) (gaussian decay).
struct CouplingSpec {
    CouplingKind kind = CouplingKind::GaussianDecay;
    double radius = 1.0;
    std::vector<std::vector<double>> amplitudes;
};

struct ModelConfig {
    int dimension = 1;
    int n_fields = 1;
    std::vector<double> masses;
    RMat V;
    // When set, V is replaced by m_*^2 I + K + margin I at model construction.
    bool V_auto = false;
    double V_margin = 0.5;
    CouplingSpec coupling;
    double L = 0.0;
    int M = 0;
    double dt = 0.01;

    int spin() const { return dimension == 3 ? 4 : 2; }
    // Every schema violation, empty when valid.
    std::vector<std::string> problems() const;
    void validate() const;
};

ModelConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ModelConfig& c);
// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const ModelConfig& c);
std::string hash_text(const std::string& s);

}  // namespace diracsim
