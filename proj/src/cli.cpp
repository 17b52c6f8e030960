#include "diracsim/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"

#include "diracsim/asymptotics.hpp"
#include "diracsim/coupled.hpp"
#include "diracsim/csv.hpp"
#include "diracsim/kernel.hpp"
#include "diracsim/pairing.hpp"
#include "diracsim/parallel.hpp"
#include "diracsim/predictor.hpp"
#include "diracsim/propagator.hpp"
#include "diracsim/volterra.hpp"

namespace diracsim {

using nlohmann::json;

namespace {

// Collects every schema problem instead of stopping at the first.
struct Reader {
    std::vector<std::string> problems;

    void unknown_keys(const json& j, const std::string& where, const std::set<std::string>& known)
    {
        if (!j.is_object()) {
            problems.push_back(where + " must be an object");
            return;
        }
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.count(it.key())) problems.push_back(where + ": unknown key '" + it.key() + "'");
    }

    template <class T>
    void read(const json& j, const std::string& key, T& dst, const std::string& where)
    {
        if (!j.contains(key) || j.at(key).is_null()) return;
        try {
            dst = j.at(key).get<T>();
        } catch (const json::exception&) {
            problems.push_back(where + "." + key + " has the wrong type");
        }
    }

    void positive(double v, const std::string& what)
    {
        if (!(v > 0.0)) problems.push_back(what + " must be positive");
    }
};

const std::set<std::string> top_keys{"model",      "seed",     "threads",    "T",       "fit",
                                     "local_radius", "initial", "kernel",     "simulate", "dictionary",
                                     "ensemble"};

ObservableSpec parse_observable(Reader& r, const json& j, std::size_t i)
{
    const std::string where = "ensemble.observables[" + std::to_string(i) + "]";
    ObservableSpec o;
    r.unknown_keys(j, where, {"id", "field", "component", "part", "center", "radius", "amplitude", "u", "v"});
    if (!j.is_object()) return o;
    o.id = "Z" + std::to_string(i);
    r.read(j, "id", o.id, where);
    r.read(j, "field", o.field, where);
    r.read(j, "component", o.component, where);
    std::string part = "re";
    r.read(j, "part", part, where);
    if (part != "re" && part != "im") r.problems.push_back(where + ".part must be 're' or 'im'");
    o.imaginary = part == "im";
    r.read(j, "center", o.center, where);
    r.read(j, "radius", o.radius, where);
    r.read(j, "amplitude", o.amplitude, where);
    r.read(j, "u", o.u, where);
    r.read(j, "v", o.v, where);
    if (o.id.empty() || o.id.find(',') != std::string::npos)
        r.problems.push_back(where + ".id must be nonempty and contain no comma");
    return o;
}

}  // namespace

nlohmann::json experiment_to_json(const ExperimentSettings& e)
{
    json j;
    j["seed"] = e.seed;
    j["T"] = e.T;
    j["fit"] = {{"t0", e.fit_t0}, {"t1", e.fit_t1}, {"envelope_width", e.envelope_width}};
    j["local_radius"] = e.local_radius;
    j["initial"] = {{"radius", e.initial.radius},
                    {"amplitude", e.initial.amplitude},
                    {"seed", e.initial.seed},
                    {"q0", e.initial.q0},
                    {"p0", e.initial.p0}};
    j["kernel"] = {{"T", e.kernel_T}, {"stride", e.kernel_stride}};
    j["simulate"] = {{"stride", e.simulate_stride}, {"snapshots", e.snapshots}};
    j["dictionary"] = {{"xi_horizon", e.xi_horizon},
                       {"xi_tail_tolerance", e.xi_tail_tolerance ? json(*e.xi_tail_tolerance) : json(nullptr)},
                       {"residual_window", {e.residual_t0, e.residual_t1}},
                       {"projection_points", e.projection_points},
                       {"sigma", e.sigma},
                       {"wave_T", e.wave_T},
                       {"wave_times", e.wave_times}};
    if (e.has_ensemble) {
        json obs = json::array();
        for (const auto& o : e.observables)
            obs.push_back({{"id", o.id},
                           {"field", o.field},
                           {"component", o.component},
                           {"part", o.imaginary ? "im" : "re"},
                           {"center", o.center},
                           {"radius", o.radius},
                           {"amplitude", o.amplitude},
                           {"u", o.u},
                           {"v", o.v}});
        const auto& c = e.covariance;
        j["ensemble"] = {{"covariance",
                          {{"kind", c.kind},
                           {"range", c.range},
                           {"variance", c.variance},
                           {"particle_variance", c.particle_variance}}},
                         {"law", c.law},
                         {"shot_probability", c.shot_probability},
                         {"samples", e.samples},
                         {"times", e.times},
                         {"observables", obs},
                         {"write_samples", e.write_samples}};
    }
    return j;
}

void rehash(LoadedConfig& c)
{
    json full = {{"model", config_to_json(c.model)}, {"experiment", experiment_to_json(c.exp)}};
    c.hash = hash_text(full.dump());
}

LoadedConfig parse_config(const json& j)
{
    Reader r;
    LoadedConfig c;
    c.json = j;
    if (!j.is_object()) throw ConfigError("invalid configuration:\n  - top level must be a JSON object");
    const bool wrapped = j.contains("model");
    const json& mj = wrapped ? j.at("model") : j;
    try {
        c.model = config_from_json(mj);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        std::size_t pos = msg.find('\n');
        if (pos == std::string::npos) {
            r.problems.push_back(msg);
        } else {
            std::istringstream in(msg.substr(pos + 1));
            std::string line;
            while (std::getline(in, line)) {
                const auto p = line.find("- ");
                r.problems.push_back(p == std::string::npos ? line : line.substr(p + 2));
            }
        }
    }
    if (wrapped) {
        r.unknown_keys(j, "config", top_keys);
        r.unknown_keys(mj, "model", {"dimension", "n_fields", "masses", "V", "V_margin", "coupling", "grid", "dt"});
    }
    const json& e = j;
    ExperimentSettings& x = c.exp;
    r.read(e, "seed", x.seed, "config");
    r.read(e, "threads", x.threads, "config");
    r.read(e, "T", x.T, "config");
    r.read(e, "local_radius", x.local_radius, "config");
    if (e.contains("fit")) {
        const json& f = e.at("fit");
        r.unknown_keys(f, "fit", {"t0", "t1", "envelope_width"});
        r.read(f, "t0", x.fit_t0, "fit");
        r.read(f, "t1", x.fit_t1, "fit");
        r.read(f, "envelope_width", x.envelope_width, "fit");
    }
    if (e.contains("initial")) {
        const json& f = e.at("initial");
        r.unknown_keys(f, "initial", {"radius", "amplitude", "seed", "q0", "p0"});
        r.read(f, "radius", x.initial.radius, "initial");
        r.read(f, "amplitude", x.initial.amplitude, "initial");
        r.read(f, "seed", x.initial.seed, "initial");
        r.read(f, "q0", x.initial.q0, "initial");
        r.read(f, "p0", x.initial.p0, "initial");
    }
    if (e.contains("kernel")) {
        const json& f = e.at("kernel");
        r.unknown_keys(f, "kernel", {"T", "stride"});
        r.read(f, "T", x.kernel_T, "kernel");
        r.read(f, "stride", x.kernel_stride, "kernel");
    }
    if (e.contains("simulate")) {
        const json& f = e.at("simulate");
        r.unknown_keys(f, "simulate", {"stride", "snapshots"});
        r.read(f, "stride", x.simulate_stride, "simulate");
        r.read(f, "snapshots", x.snapshots, "simulate");
    }
    if (e.contains("dictionary")) {
        const json& f = e.at("dictionary");
        r.unknown_keys(f, "dictionary",
                       {"xi_horizon", "xi_tail_tolerance", "residual_window", "projection_points", "sigma", "wave_T",
                        "wave_times"});
        r.read(f, "xi_horizon", x.xi_horizon, "dictionary");
        if (f.contains("xi_tail_tolerance") && !f.at("xi_tail_tolerance").is_null()) {
            double tol = 0.0;
            r.read(f, "xi_tail_tolerance", tol, "dictionary");
            x.xi_tail_tolerance = tol;
        }
        std::vector<double> win;
        r.read(f, "residual_window", win, "dictionary");
        if (!win.empty()) {
            if (win.size() != 2) r.problems.push_back("dictionary.residual_window needs two entries");
            else {
                x.residual_t0 = win[0];
                x.residual_t1 = win[1];
            }
        }
        r.read(f, "projection_points", x.projection_points, "dictionary");
        r.read(f, "sigma", x.sigma, "dictionary");
        r.read(f, "wave_T", x.wave_T, "dictionary");
        r.read(f, "wave_times", x.wave_times, "dictionary");
    }
    if (e.contains("ensemble")) {
        x.has_ensemble = true;
        const json& f = e.at("ensemble");
        r.unknown_keys(f, "ensemble",
                       {"covariance", "law", "shot_probability", "samples", "times", "observables", "write_samples"});
        if (f.contains("covariance")) {
            const json& cj = f.at("covariance");
            r.unknown_keys(cj, "ensemble.covariance", {"kind", "range", "variance", "particle_variance"});
            r.read(cj, "kind", x.covariance.kind, "ensemble.covariance");
            r.read(cj, "range", x.covariance.range, "ensemble.covariance");
            r.read(cj, "variance", x.covariance.variance, "ensemble.covariance");
            r.read(cj, "particle_variance", x.covariance.particle_variance, "ensemble.covariance");
        }
        r.read(f, "law", x.covariance.law, "ensemble");
        r.read(f, "shot_probability", x.covariance.shot_probability, "ensemble");
        r.read(f, "samples", x.samples, "ensemble");
        r.read(f, "times", x.times, "ensemble");
        r.read(f, "write_samples", x.write_samples, "ensemble");
        if (f.contains("observables")) {
            const json& oj = f.at("observables");
            if (!oj.is_array()) r.problems.push_back("ensemble.observables must be an array");
            else
                for (std::size_t i = 0; i < oj.size(); ++i) x.observables.push_back(parse_observable(r, oj[i], i));
        }
        if (x.observables.empty()) r.problems.push_back("ensemble.observables must list at least one observable");
        std::set<std::string> ids;
        for (const auto& o : x.observables)
            if (!ids.insert(o.id).second) r.problems.push_back("duplicate observable id '" + o.id + "'");
        if (x.covariance.kind != "triangular" && x.covariance.kind != "spectral-gaussian")
            r.problems.push_back("ensemble.covariance.kind must be 'triangular' or 'spectral-gaussian'");
        if (x.covariance.law != "gaussian" && x.covariance.law != "shot-noise")
            r.problems.push_back("ensemble.law must be 'gaussian' or 'shot-noise'");
        if (x.covariance.law == "shot-noise" && x.covariance.kind != "triangular")
            r.problems.push_back("shot-noise law needs the triangular covariance");
        r.positive(x.covariance.range, "ensemble.covariance.range");
        if (x.covariance.variance < 0.0) r.problems.push_back("ensemble.covariance.variance must be nonnegative");
        if (x.covariance.particle_variance < 0.0)
            r.problems.push_back("ensemble.covariance.particle_variance must be nonnegative");
        if (x.samples < 2) r.problems.push_back("ensemble.samples must be at least 2");
        if (x.times.empty()) r.problems.push_back("ensemble.times must not be empty");
        for (double t : x.times)
            if (t < 0.0) r.problems.push_back("ensemble.times must be nonnegative");
    }
    r.positive(x.T, "T");
    r.positive(x.kernel_T, "kernel.T");
    r.positive(x.local_radius, "local_radius");
    r.positive(x.initial.radius, "initial.radius");
    r.positive(x.xi_horizon, "dictionary.xi_horizon");
    if (x.kernel_stride < 1 || x.simulate_stride < 1) r.problems.push_back("strides must be at least 1");
    if (!(x.fit_t0 > 0.0 && x.fit_t1 > x.fit_t0)) r.problems.push_back("fit window must satisfy 0 < t0 < t1");
    if (!(x.residual_t0 > 0.0 && x.residual_t1 > x.residual_t0))
        r.problems.push_back("dictionary.residual_window must satisfy 0 < t0 < t1");
    if (x.projection_points < 2) r.problems.push_back("dictionary.projection_points must be at least 2");
    if (x.threads < 0) r.problems.push_back("threads must be nonnegative");

    if (!r.problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : r.problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    rehash(c);
    return c;
}

LoadedConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

SystemState initial_state(const Model& m, const InitialSpec& spec)
{
    const Grid& g = m.grid();
    Rng rng(spec.seed, 0);
    SystemState Y = m.zero_state();
    for (int n = 0; n < m.n_fields(); ++n)
        for (int c = 0; c < m.spin(); ++c) {
            const double re = rng.normal();
            const double im = rng.normal();
            const cd a = spec.amplitude * cd(re, im);
            auto comp = Y.psi.component(n, c);
            for (std::size_t idx = 0; idx < g.size(); ++idx) {
                const double r = g.radius(idx);
                if (r < spec.radius) comp[idx] = a * std::pow(1.0 - r * r / (spec.radius * spec.radius), 4);
            }
        }
    auto fill = [&](const std::vector<double>& v, RVec& dst, const char* what) {
        if (v.empty()) {
            for (int i = 0; i < m.dim(); ++i) dst(i) = rng.normal();
            return;
        }
        if (static_cast<int>(v.size()) != m.dim()) throw ConfigError(std::string("initial.") + what + " has the wrong size");
        for (int i = 0; i < m.dim(); ++i) dst(i) = v[i];
    };
    fill(spec.q0, Y.q, "q0");
    fill(spec.p0, Y.p, "p0");
    return Y;
}

CovarianceModel covariance_from_spec(const Model& m, const CovarianceSpec& s)
{
    const RMat part = RMat::Identity(2 * m.dim(), 2 * m.dim()) * s.particle_variance;
    if (s.kind == "spectral-gaussian") return gaussian_spectral_covariance(m, s.range, s.variance, part);
    return triangular_covariance(m, s.range, s.variance, part);
}

SamplerOptions sampler_from_spec(const CovarianceSpec& s)
{
    SamplerOptions o;
    o.law = s.law == "shot-noise" ? InitialLaw::ShotNoise : InitialLaw::Gaussian;
    o.shot_probability = s.shot_probability;
    return o;
}

namespace {

struct Context {
    LoadedConfig cfg;
    Model model;
    std::filesystem::path out;
    int threads;
    std::ostream& log;

    CsvMeta meta(const std::string& command, std::vector<std::string> notes = {}) const
    {
        return {command, cfg.hash, cfg.exp.seed, std::move(notes)};
    }
    std::string path(const std::string& name) const { return (out / name).string(); }
    double width() const
    {
        return cfg.exp.envelope_width > 0.0 ? cfg.exp.envelope_width : 2.0 * pi / model.min_mass();
    }
};

std::string str(double v) { return format_number(v); }

double on_grid(double t, double dt) { return std::round(t / dt) * dt; }

int cmd_check(Context& c)
{
    const Model& m = c.model;
    auto rep = check_A2(m);
    const double defect = anticommutation_defect(m.algebra());
    const double vmin = Eigen::SelfAdjointEigenSolver<RMat>(m.V()).eigenvalues().minCoeff();
    CsvWriter w(c.path("conditions.csv"), c.meta("check-conditions"), {"quantity", "value"});
    w.row(std::vector<std::string>{"min_eig_A2", str(rep.min_eig_A2)});
    w.row(std::vector<std::string>{"A3_min", str(rep.A3_min)});
    w.row(std::vector<std::string>{"A3_underflow_modes", std::to_string(rep.A3_underflow)});
    w.row(std::vector<std::string>{"pass_A2", rep.pass_A2 ? "1" : "0"});
    w.row(std::vector<std::string>{"pass_A3", rep.pass_A3 ? "1" : "0"});
    w.row(std::vector<std::string>{"anticommutation_defect", str(defect)});
    w.row(std::vector<std::string>{"min_eig_V", str(vmin)});
    for (int i = 0; i < rep.K.rows(); ++i)
        for (int j = 0; j < rep.K.cols(); ++j)
            w.row(std::vector<std::string>{"K_" + std::to_string(i) + std::to_string(j), str(rep.K(i, j))});
    w.close();
    c.log << "min_eig_A2 = " << rep.min_eig_A2 << (rep.pass_A2 ? " (pass)" : " (FAIL)") << "\n";
    c.log << "A3_min = " << rep.A3_min << (rep.pass_A3 ? " (pass)" : " (FAIL)") << "\n";
    c.log << "anticommutation defect = " << defect << ", min eig V = " << vmin << "\n";
    return rep.pass_A2 && rep.pass_A3 ? 0 : 2;
}

struct KernelData {
    TimeGrid tg;
    MemoryKernel H;
    SolvingKernel sk;
};

KernelData compute_kernel(const Context& c, double T)
{
    KernelData k;
    k.tg = TimeGrid::covering(T, c.model.config().dt);
    k.H = kernel_time(c.model, k.tg);
    k.sk = solving_kernel(k.H, c.model.V());
    return k;
}

// Slopes on [t0, T]; fit_kernel_decay needs a decade, so a shorter window yields nan.
KernelDecay kernel_fits(const Context& c, const SolvingKernel& sk)
{
    try {
        return fit_kernel_decay(sk, c.cfg.exp.fit_t0, sk.grid.T(), c.width());
    } catch (const DomainError& e) {
        c.log << "kernel decay fit skipped: " << e.what() << "\n";
        KernelDecay d;
        d.N.slope = d.Ndot.slope = d.Nddot.slope = std::nan("");
        return d;
    }
}

int cmd_kernel(Context& c)
{
    const auto& e = c.cfg.exp;
    auto k = compute_kernel(c, e.kernel_T);
    const int d = c.model.dim();
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cols.push_back("H_" + std::to_string(i) + std::to_string(j));
    for (const char* s : {"N_norm", "Ndot_norm", "Nddot_norm"}) cols.emplace_back(s);
    CsvWriter w(c.path("kernel.csv"), c.meta("kernel"), cols);
    auto n0 = kernel_norms(k.sk, 0), n1 = kernel_norms(k.sk, 1), n2 = kernel_norms(k.sk, 2);
    for (int j = 0; j < k.tg.size(); j += e.kernel_stride) {
        std::vector<double> row{k.tg.t(j)};
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) row.push_back(k.H.H[static_cast<std::size_t>(j)](a, b));
        row.push_back(n0[j]);
        row.push_back(n1[j]);
        row.push_back(n2[j]);
        w.row(row);
    }
    auto fits = kernel_fits(c, k.sk);
    w.footer("slope_N", fits.N.slope);
    w.footer("slope_Ndot", fits.Ndot.slope);
    w.footer("slope_Nddot", fits.Nddot.slope);
    w.footer("fit_window", str(e.fit_t0) + " " + str(k.tg.T()));
    c.log << "kernel slopes: N " << fits.N.slope << ", Ndot " << fits.Ndot.slope << ", Nddot " << fits.Nddot.slope
          << "\n";
    return 0;
}

struct FitRow {
    std::string series;
    DecayFit fit;
    double t0, t1;
};

void write_fits(const Context& c, const std::string& file, const std::string& command, const std::vector<FitRow>& fits)
{
    CsvWriter w(c.path(file), c.meta(command), {"series", "slope", "intercept", "t0", "t1"});
    for (const auto& f : fits)
        w.row(std::vector<std::string>{f.series, str(f.fit.slope), str(f.fit.intercept), str(f.t0), str(f.t1)});
}

int cmd_decay(Context& c)
{
    const auto& e = c.cfg.exp;
    const Model& m = c.model;
    const double width = c.width();
    SystemState Y0 = initial_state(m, e.initial);
    CsvWriter w(c.path("decay.csv"), c.meta("decay"), {"series", "t", "value"});
    std::vector<FitRow> fits;

    auto k = compute_kernel(c, e.kernel_T);
    auto kd = kernel_fits(c, k.sk);
    const char* names[3] = {"N", "Ndot", "Nddot"};
    const DecayFit* kf[3] = {&kd.N, &kd.Ndot, &kd.Nddot};
    for (int o = 0; o < 3; ++o) {
        auto norms = kernel_norms(k.sk, o);
        for (int j = 0; j < k.tg.size(); j += e.kernel_stride) w.row(std::vector<std::string>{names[o], str(k.tg.t(j)), str(norms[j])});
        fits.push_back({names[o], *kf[o], e.fit_t0, k.tg.T()});
    }

    auto tg = TimeGrid::covering(e.T, m.config().dt);
    auto F = forcing(m, Y0.psi, tg);
    std::vector<double> t, v;
    for (int j = 0; j < tg.size(); ++j) {
        t.push_back(tg.t(j));
        v.push_back(F[static_cast<std::size_t>(j)].norm());
        if (j % e.kernel_stride == 0) w.row(std::vector<std::string>{"forcing", str(t.back()), str(v.back())});
    }
    const double t1 = std::min(e.fit_t1, e.T);
    fits.push_back({"forcing", fit_envelope(t, v, width, e.fit_t0, t1), e.fit_t0, t1});

    auto times = log_spaced(e.fit_t0, t1, 24);
    for (auto& x : times) x = on_grid(x, m.config().dt);
    auto lf = measure_local_decay(m, Y0.psi.field(0), 0, e.local_radius, times, 2.0 * pi / m.mass(0));
    auto le = local_energy_decay(m, Y0, e.local_radius, times, width, c.threads);
    auto ctrl = local_energy_decay(m.with_coupling_scale(0.0), Y0, e.local_radius, times, width, c.threads);
    for (auto [name, fit] : {std::pair<const char*, DecayFit*>{"local_field", &lf}, {"local_energy", &le},
                             {"control_energy", &ctrl}}) {
        for (std::size_t i = 0; i < fit->times.size(); ++i)
            w.row(std::vector<std::string>{name, str(fit->times[i]), str(fit->values[i])});
        fits.push_back({name, *fit, e.fit_t0, t1});
    }
    for (const auto& f : fits) {
        w.footer("slope_" + f.series, f.fit.slope);
        c.log << f.series << " slope " << f.fit.slope << "\n";
    }
    w.close();
    write_fits(c, "decay_fits.csv", "decay", fits);
    return 0;
}

int cmd_simulate(Context& c)
{
    const auto& e = c.cfg.exp;
    const Model& m = c.model;
    const double dt = m.config().dt;
    SystemState Y0 = initial_state(m, e.initial);
    std::vector<double> out{0.0};
    for (double s : e.snapshots) {
        if (s < 0.0 || s > e.T + 1e-12) throw ConfigError("snapshot times must lie in [0, T]");
        out.push_back(on_grid(s, dt));
    }
    out.push_back(on_grid(e.T, dt));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    EvolveOptions opt;
    opt.require_box = true;
    opt.threads = c.threads;
    auto r = evolve(m, Y0, on_grid(e.T, dt), out, opt);

    const int d = m.dim();
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < d; ++i) cols.push_back("q_" + std::to_string(i));
    for (int i = 0; i < d; ++i) cols.push_back("p_" + std::to_string(i));
    CsvWriter tw(c.path("trajectory.csv"), c.meta("simulate"), cols);
    const auto& tr = r.trajectory;
    for (int j = 0; j < tr.grid.size(); j += e.simulate_stride) {
        std::vector<double> row{tr.grid.t(j)};
        for (int i = 0; i < d; ++i) row.push_back(tr.q[static_cast<std::size_t>(j)](i));
        for (int i = 0; i < d; ++i) row.push_back(tr.p[static_cast<std::size_t>(j)](i));
        tw.row(row);
    }
    tw.close();

    CsvWriter sw(c.path("states.csv"), c.meta("simulate"),
                 {"t", "energy", "field_norm", "local_field_norm", "snapshot"});
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        const std::string file = "snapshot_" + std::to_string(i) + ".bin";
        write_snapshot(c.path(file), m.grid(), r.states[i], r.times[i]);
        sw.row(std::vector<std::string>{str(r.times[i]), str(energy(m, r.states[i])),
                                        str(field_norm(m.grid(), r.states[i].psi)),
                                        str(local_field_norm(m.grid(), r.states[i].psi, e.local_radius)), file});
    }
    c.log << "simulated to t = " << r.times.back() << " (required L " << r.required_L << ")\n";
    return 0;
}

XiFamily compute_xi_for(const Context& c)
{
    const auto& e = c.cfg.exp;
    auto k = compute_kernel(c, e.xi_horizon);
    XiOptions xo;
    xo.horizon = e.xi_horizon;
    xo.tail_tolerance = e.xi_tail_tolerance.value_or(std::numeric_limits<double>::infinity());
    xo.envelope_width = e.envelope_width;
    xo.threads = c.threads;
    return compute_xi(c.model, k.sk, xo);
}

int cmd_dictionary(Context& c)
{
    const auto& e = c.cfg.exp;
    const Model& m = c.model;
    const double dt = m.config().dt;
    SystemState Y0 = initial_state(m, e.initial);
    XiFamily xi = compute_xi_for(c);

    CsvWriter xw(c.path("dictionary_xi.csv"), c.meta("dictionary"), {"field", "order", "k", "norm"});
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < m.dim(); ++k) {
            SpinorFieldSet f = xi_field(m, xi, j, k);
            for (int n = 0; n < m.n_fields(); ++n)
                xw.row(std::vector<std::string>{std::to_string(n), std::to_string(j), std::to_string(k),
                                                str(field_norm(m.grid(), f.field(n)))});
        }
    xw.footer("tail_bound_0", xi.tail[0]);
    xw.footer("tail_bound_1", xi.tail[1]);
    xw.close();

    CsvWriter w(c.path("dictionary.csv"), c.meta("dictionary"), {"series", "t", "value"});
    std::vector<FitRow> fits;
    auto rq = residual_q(m, Y0, xi, e.residual_t0, e.residual_t1, e.envelope_width);
    for (int j = 0; j < 2; ++j) {
        const std::string name = "residual_q" + std::to_string(j);
        for (std::size_t i = 0; i < rq[j].t.size(); i += static_cast<std::size_t>(e.kernel_stride))
            w.row(std::vector<std::string>{name, str(rq[j].t[i]), str(rq[j].residual[i])});
        fits.push_back({name, rq[j].fit, e.residual_t0, e.residual_t1});
    }
    auto ts = log_spaced(e.residual_t0, e.residual_t1, e.projection_points);
    for (auto& t : ts) t = on_grid(t, dt);
    auto pr = projection_residual(m, Y0, xi, ts, e.sigma, e.xi_horizon, c.threads);
    for (std::size_t i = 0; i < pr.t.size(); ++i)
        w.row(std::vector<std::string>{"projection", str(pr.t[i]), str(pr.residual[i])});
    fits.push_back({"projection", pr.fit, e.residual_t0, e.residual_t1});
    std::vector<double> wt;
    for (double t : e.wave_times) wt.push_back(on_grid(t, dt));
    auto wo = wave_operator_residual(m, Y0, on_grid(e.wave_T, dt), wt, c.threads);
    for (std::size_t i = 0; i < wo.curve.t.size(); ++i)
        w.row(std::vector<std::string>{"wave_operator", str(wo.curve.t[i]), str(wo.curve.residual[i])});
    for (const auto& f : fits) {
        w.footer("slope_" + f.series, f.fit.slope);
        c.log << f.series << " slope " << f.fit.slope << "\n";
    }
    const double ratio = wo.curve.residual.front() / wo.curve.residual.back();
    w.footer("wave_ratio", ratio);
    w.footer("omega_field_norm", wo.omega_field_norm);
    c.log << "wave operator residual ratio " << ratio << "\n";
    w.close();
    write_fits(c, "dictionary_fits.csv", "dictionary", fits);
    return 0;
}

void require_ensemble(const Context& c)
{
    if (!c.cfg.exp.has_ensemble) throw ConfigError("configuration has no ensemble section");
}

int cmd_ensemble(Context& c)
{
    require_ensemble(c);
    const auto& e = c.cfg.exp;
    const Model& m = c.model;
    EnsembleSpec es;
    es.cov = covariance_from_spec(m, e.covariance);
    es.sampler = sampler_from_spec(e.covariance);
    es.seed = e.seed;
    es.samples = e.samples;
    es.times = e.times;
    es.threads = c.threads;
    for (const auto& o : e.observables) es.observables.push_back(make_observable(m, o));
    auto r = run_ensemble(m, es);
    const std::size_t nz = e.observables.size();
    const std::string M = std::to_string(e.samples);
    const std::vector<std::string> notes{"law: " + e.covariance.law};

    CsvWriter w(c.path("ensemble.csv"), c.meta("ensemble", notes), {"t", "z1", "z2", "estimate", "stderr", "M"});
    CsvWriter cw(c.path("ensemble_charfunc.csv"), c.meta("ensemble", notes),
                 {"t", "z", "re", "im", "stderr_re", "stderr_im", "M"});
    CsvWriter gw(c.path("ensemble_gaussianity.csv"), c.meta("ensemble", notes),
                 {"t", "z", "excess_kurtosis", "stderr", "M", "gaussian"});
    for (std::size_t ti = 0; ti < r.times.size(); ++ti) {
        const std::string t = str(r.times[ti]);
        for (std::size_t a = 0; a < nz; ++a) {
            for (std::size_t b = a; b < nz; ++b) {
                auto est = estimate_correlation(r.pairings[ti][a], r.pairings[ti][b]);
                w.row(std::vector<std::string>{t, e.observables[a].id, e.observables[b].id, str(est.value),
                                               str(est.standard_error), M});
            }
            auto cf = estimate_charfunc(r.pairings[ti][a]);
            cw.row(std::vector<std::string>{t, e.observables[a].id, str(cf.value.real()), str(cf.value.imag()),
                                            str(cf.se_real), str(cf.se_imag), M});
            if (e.samples >= 100) {
                try {
                    auto gs = gaussianity_stats(r.pairings[ti][a]);
                    gw.row(std::vector<std::string>{t, e.observables[a].id, str(gs.excess_kurtosis),
                                                    str(gs.standard_error), M, gs.gaussian ? "1" : "0"});
                } catch (const DegenerateInputError&) {
                    gw.row(std::vector<std::string>{t, e.observables[a].id, "nan", "nan", M, "0"});
                }
            }
        }
    }
    if (e.write_samples) {
        CsvWriter sw(c.path("ensemble_samples.csv"), c.meta("ensemble", notes), {"t", "z", "sample", "value"});
        for (std::size_t ti = 0; ti < r.times.size(); ++ti)
            for (std::size_t a = 0; a < nz; ++a)
                for (std::size_t i = 0; i < r.pairings[ti][a].size(); ++i)
                    sw.row(std::vector<std::string>{str(r.times[ti]), e.observables[a].id, std::to_string(i),
                                                    str(r.pairings[ti][a][i])});
    }
    c.log << "ensemble of " << e.samples << " samples at " << r.times.size() << " times written\n";
    return 0;
}

int cmd_predict(Context& c)
{
    require_ensemble(c);
    const auto& e = c.cfg.exp;
    const Model& m = c.model;
    XiFamily xi = compute_xi_for(c);
    auto cov = covariance_from_spec(m, e.covariance);
    LimitDensity ld(m, cov);
    ThetaOptions to;
    to.horizon = e.xi_horizon;
    to.envelope_width = e.envelope_width;
    std::vector<SpinorFieldSet> chi;
    for (const auto& o : e.observables) chi.push_back(build_chiZ(m, make_observable(m, o), xi, to));
    const std::vector<std::string> notes{"xi_tail_bound: " + str(xi.tail[0]) + " " + str(xi.tail[1])};
    CsvWriter w(c.path("predictions.csv"), c.meta("predict", notes),
                {"observable_id", "Q_inf_predicted", "charfunc_predicted_re"});
    for (std::size_t a = 0; a < chi.size(); ++a) {
        const double Q = quad_form(m, ld, chi[a], c.threads);
        w.row(std::vector<std::string>{e.observables[a].id, str(Q), str(std::exp(-0.5 * Q))});
        c.log << e.observables[a].id << ": Q_inf = " << Q << "\n";
    }
    CsvWriter cw(c.path("predictions_cross.csv"), c.meta("predict", notes), {"z1", "z2", "Q_inf_predicted"});
    for (std::size_t a = 0; a < chi.size(); ++a)
        for (std::size_t b = a + 1; b < chi.size(); ++b)
            cw.row(std::vector<std::string>{e.observables[a].id, e.observables[b].id,
                                            str(bilinear_form(m, ld, chi[a], chi[b], c.threads))});
    return 0;
}

int cmd_compare(Context& c)
{
    auto ens = read_csv(c.path("ensemble.csv"));
    auto pred = read_csv(c.path("predictions.csv"));
    std::map<std::pair<std::string, std::string>, double> Q;
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
        const std::string id = pred.rows[i][pred.column("observable_id")];
        Q[{id, id}] = pred.number(i, "Q_inf_predicted");
    }
    if (std::filesystem::exists(c.path("predictions_cross.csv"))) {
        auto cross = read_csv(c.path("predictions_cross.csv"));
        for (std::size_t i = 0; i < cross.rows.size(); ++i) {
            const std::string a = cross.rows[i][cross.column("z1")], b = cross.rows[i][cross.column("z2")];
            Q[{a, b}] = Q[{b, a}] = cross.number(i, "Q_inf_predicted");
        }
    }
    std::set<std::string> missing;
    CsvWriter w(c.path("compare.csv"), c.meta("compare"),
                {"t", "z1", "z2", "estimate", "stderr", "predicted", "zscore"});
    double zmax = 0.0;
    for (std::size_t i = 0; i < ens.rows.size(); ++i) {
        const std::string a = ens.rows[i][ens.column("z1")], b = ens.rows[i][ens.column("z2")];
        auto it = Q.find({a, b});
        if (it == Q.end()) {
            missing.insert(a == b ? a : a + "/" + b);
            continue;
        }
        const double est = ens.number(i, "estimate"), se = ens.number(i, "stderr");
        const double z = (est - it->second) / se;
        if (std::isfinite(z)) zmax = std::max(zmax, std::abs(z));
        w.row(std::vector<std::string>{ens.rows[i][ens.column("t")], a, b, str(est), str(se), str(it->second), str(z)});
    }
    w.footer("max_abs_zscore", zmax);
    w.close();
    if (!missing.empty()) {
        std::string ids;
        for (const auto& s : missing) ids += (ids.empty() ? "" : ", ") + s;
        throw Error("no prediction for observables: " + ids);
    }
    if (std::filesystem::exists(c.path("ensemble_charfunc.csv"))) {
        auto cf = read_csv(c.path("ensemble_charfunc.csv"));
        CsvWriter cw(c.path("compare_charfunc.csv"), c.meta("compare"),
                     {"t", "z", "estimate_re", "stderr_re", "predicted", "zscore"});
        for (std::size_t i = 0; i < cf.rows.size(); ++i) {
            const std::string id = cf.rows[i][cf.column("z")];
            auto it = Q.find({id, id});
            if (it == Q.end()) continue;
            const double est = cf.number(i, "re"), se = cf.number(i, "stderr_re"), p = std::exp(-0.5 * it->second);
            cw.row(std::vector<std::string>{cf.rows[i][cf.column("t")], id, str(est), str(se), str(p),
                                            str((est - p) / se)});
        }
    }
    c.log << "max |z| = " << zmax << "\n";
    return 0;
}

int cmd_report(Context& c)
{
    cmd_kernel(c);
    cmd_decay(c);
    if (c.cfg.exp.has_ensemble) {
        cmd_ensemble(c);
        cmd_predict(c);
        cmd_compare(c);
    }
    return 0;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Coupled Dirac field and particle simulator"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> samples, threads;
    std::optional<double> T, dt;
    bool strict = false;
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "output directory (created if missing)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--samples", samples, "ensemble size");
    app.add_option("--T", T, "time horizon");
    app.add_option("--dt", dt, "time step");
    app.add_option("--threads", threads, "worker threads (default: available parallelism)");
    app.add_flag("--strict", strict, "check conditions A2/A3 before running");
    const std::vector<std::pair<std::string, std::string>> commands{
        {"check-conditions", "report A2/A3 and structural checks"},
        {"kernel", "memory kernel H(t) and solving-kernel norms"},
        {"decay", "decay exponents of N, F, local field and local energy"},
        {"simulate", "coupled evolution with trajectory and field snapshots"},
        {"dictionary", "Xi family, residual_q, projection and wave-operator residuals"},
        {"ensemble", "Monte Carlo ensemble estimators"},
        {"predict", "limit covariance predictions"},
        {"compare", "z-scores of ensemble estimates against predictions"},
        {"report-data", "kernel, decay, ensemble, predict and compare in one run"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        LoadedConfig cfg = load_config(config_path);
        if (seed) cfg.exp.seed = *seed;
        if (samples) cfg.exp.samples = *samples;
        if (T) cfg.exp.T = *T;
        if (dt) {
            cfg.model.dt = *dt;
            cfg.model.validate();
        }
        if (threads) {
            if (*threads < 1) throw ConfigError("--threads must be at least 1");
            cfg.exp.threads = *threads;
        }
        rehash(cfg);
        std::filesystem::create_directories(out_dir);
        Model m(cfg.model);
        Context ctx{cfg, m, out_dir, cfg.exp.threads > 0 ? cfg.exp.threads : default_threads(), out};
        if (strict && cmd != "check-conditions") {
            auto rep = check_A2(m);
            if (!rep.pass_A2 || !rep.pass_A3) {
                err << "condition check failed: min_eig_A2 = " << rep.min_eig_A2 << ", A3_min = " << rep.A3_min << "\n";
                return 2;
            }
        }
        if (cmd == "check-conditions") return cmd_check(ctx);
        if (cmd == "kernel") return cmd_kernel(ctx);
        if (cmd == "decay") return cmd_decay(ctx);
        if (cmd == "simulate") return cmd_simulate(ctx);
        if (cmd == "dictionary") return cmd_dictionary(ctx);
        if (cmd == "ensemble") return cmd_ensemble(ctx);
        if (cmd == "predict") return cmd_predict(ctx);
        if (cmd == "compare") return cmd_compare(ctx);
        return cmd_report(ctx);
    } catch (const BoxSizeError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_subcommand(args, std::cout, std::cerr);
}

}  // namespace diracsim
