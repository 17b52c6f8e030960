#include "diracsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace diracsim {

using nlohmann::json;

std::vector<std::string> ModelConfig::problems() const
{
    std::vector<std::string> out;
    if (dimension != 1 && dimension != 3) out.push_back("dimension must be 1 or 3");
    if (n_fields < 1) out.push_back("n_fields must be at least 1");
    if (static_cast<int>(masses.size()) != n_fields) out.push_back("masses must have n_fields entries");
    for (std::size_t n = 0; n < masses.size(); ++n)
        if (!(masses[n] > 0.0)) out.push_back("mass " + std::to_string(n) + " must be positive");
    if (!V_auto) {
        if (V.rows() != dimension || V.cols() != dimension) {
            out.push_back("V must be a dimension x dimension matrix");
        } else {
            if ((V - V.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + V.cwiseAbs().maxCoeff()))
                out.push_back("V must be symmetric");
            else if (Eigen::SelfAdjointEigenSolver<RMat>(V).eigenvalues().minCoeff() <= 0.0)
                out.push_back("V must be positive definite");
        }
    } else if (!(V_margin > 0.0)) {
        out.push_back("V margin must be positive");
    }
    if (!(coupling.radius > 0.0)) out.push_back("coupling radius must be positive");
    if (static_cast<int>(coupling.amplitudes.size()) != n_fields) {
        out.push_back("coupling amplitudes must have n_fields rows");
    } else {
        for (const auto& row : coupling.amplitudes)
            if (static_cast<int>(row.size()) != spin()) {
                out.push_back("each coupling amplitude row needs one entry per spinor component");
                break;
            }
    }
    if (!(L > 0.0)) out.push_back("grid.L must be positive");
    if (M < 2 || (M & (M - 1)) != 0) out.push_back("grid.M must be a power of two");
    if (!(dt > 0.0)) out.push_back("dt must be positive");
    return out;
}

void ModelConfig::validate() const
{
    auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid model configuration:";
    for (const auto& s : p) msg += "\n  - " + s;
    throw ConfigError(msg);
}

ModelConfig config_from_json(const json& j)
{
    ModelConfig c;
    std::vector<std::string> shape;
    // Runs one read; a type error is recorded and parsing continues.
    auto guard = [&](const char* what, auto&& f) {
        try {
            f();
        } catch (const json::exception&) {
            shape.push_back(std::string(what) + " has the wrong type or shape");
        }
    };
    if (!j.is_object()) throw ConfigError("invalid model configuration:\n  - model must be a JSON object");
    guard("dimension", [&] { c.dimension = j.value("dimension", 1); });
    guard("n_fields", [&] { c.n_fields = j.value("n_fields", 1); });
    guard("masses", [&] {
        if (j.contains("masses")) c.masses = j.at("masses").get<std::vector<double>>();
        else c.masses.assign(static_cast<std::size_t>(std::max(c.n_fields, 0)), 1.0);
    });
    if (!j.contains("V") || j.at("V").is_null() || (j.at("V").is_string() && j.at("V") == "auto")) {
        c.V_auto = true;
    } else {
        guard("V", [&] {
            auto flat = j.at("V").get<std::vector<double>>();
            const int d = c.dimension;
            if (static_cast<int>(flat.size()) != d * d) {
                shape.push_back("V must have dimension^2 entries (row-major)");
                c.V_auto = true;
                return;
            }
            c.V.resize(d, d);
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s) c.V(r, s) = flat[static_cast<std::size_t>(r * d + s)];
        });
    }
    guard("V_margin", [&] { c.V_margin = j.value("V_margin", 0.5); });
    if (j.contains("coupling")) {
        const auto& cj = j.at("coupling");
        guard("coupling.kind", [&] {
            std::string kind = cj.value("kind", std::string("gaussian-decay"));
            if (kind == "gaussian-decay") c.coupling.kind = CouplingKind::GaussianDecay;
            else if (kind == "compact-support") c.coupling.kind = CouplingKind::CompactSupport;
            else shape.push_back("unknown coupling kind '" + kind + "'");
        });
        guard("coupling.radius", [&] { c.coupling.radius = cj.value("radius", 1.0); });
        guard("coupling.amplitudes", [&] {
            if (cj.contains("amplitudes"))
                c.coupling.amplitudes = cj.at("amplitudes").get<std::vector<std::vector<double>>>();
        });
    }
    if (c.coupling.amplitudes.empty() && (c.dimension == 1 || c.dimension == 3)) {
        const int s = c.spin();
        for (int n = 0; n < c.n_fields; ++n) {
            std::vector<double> row(static_cast<std::size_t>(s), 0.0);
            row[0] = 1.0;
            c.coupling.amplitudes.push_back(row);
        }
    }
    if (!j.contains("grid")) {
        shape.push_back("missing grid section");
    } else {
        guard("grid.L", [&] { c.L = j.at("grid").at("L").get<double>(); });
        guard("grid.M", [&] { c.M = j.at("grid").at("M").get<int>(); });
    }
    guard("dt", [&] { c.dt = j.value("dt", 0.01); });
    auto all = shape;
    for (auto& p : c.problems()) all.push_back(std::move(p));
    if (!all.empty()) {
        std::string msg = "invalid model configuration:";
        for (const auto& s : all) msg += "\n  - " + s;
        throw ConfigError(msg);
    }
    return c;
}


json config_to_json(const ModelConfig& c)
{
    json j;
    j["dimension"] = c.dimension;
    j["n_fields"] = c.n_fields;
    j["masses"] = c.masses;
    if (c.V_auto) {
        j["V"] = "auto";
        j["V_margin"] = c.V_margin;
    } else {
        std::vector<double> flat;
        for (int r = 0; r < c.V.rows(); ++r)
            for (int s = 0; s < c.V.cols(); ++s) flat.push_back(c.V(r, s));
        j["V"] = flat;
    }
    j["coupling"] = {{"kind", c.coupling.kind == CouplingKind::GaussianDecay ? "gaussian-decay" : "compact-support"},
                     {"radius", c.coupling.radius},
                     {"amplitudes", c.coupling.amplitudes}};
    j["grid"] = {{"L", c.L}, {"M", c.M}};
    j["dt"] = c.dt;
    return j;
}

std::string hash_text(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const ModelConfig& c) { return hash_text(config_to_json(c).dump()); }

}  // namespace diracsim
