#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "support.hpp"

#include "diracsim/cli.hpp"
#include "diracsim/csv.hpp"

using namespace diracsim;
using namespace support;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("diracsim_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json small1d()
{
    return json::parse(R"({
      "model": {
        "dimension": 1, "n_fields": 2, "masses": [1.0, 2.0], "V": "auto",
        "coupling": {"kind": "gaussian-decay", "radius": 1.0, "amplitudes": [[1, 0], [1, 0]]},
        "grid": {"L": 200, "M": 512}, "dt": 0.05
      },
      "seed": 11, "T": 20,
      "kernel": {"T": 30, "stride": 5},
      "simulate": {"stride": 20, "snapshots": [10]},
      "dictionary": {"xi_horizon": 30},
      "ensemble": {
        "covariance": {"kind": "triangular", "range": 2},
        "samples": 24, "times": [0, 10],
        "observables": [
          {"id": "a", "field": 0, "component": 0, "center": [0]},
          {"id": "b", "field": 1, "component": 1, "part": "im", "center": [2]},
          {"id": "q", "field": -1, "u": [1]}
        ]
      }
    })");
}

std::string write_config(const fs::path& dir, const json& j)
{
    const std::string path = (dir / "config.json").string();
    std::ofstream(path) << j.dump(2);
    return path;
}

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_subcommand(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("bare model object gets experiment defaults")
{
    json j = config_to_json(cfg1d(256, 50.0));
    auto c = parse_config(j);
    CHECK(c.model.M == 256);
    CHECK(c.exp.T == 80.0);
    CHECK(c.exp.seed == 1);
    CHECK_FALSE(c.exp.has_ensemble);
    CHECK(c.hash.size() == 16);
}

TEST_CASE("all schema problems are reported together")
{
    json j = small1d();
    j["model"]["masses"] = {-1.0, 2.0};
    j["model"]["V"] = {1.0, 0.5, 0.0, 1.0};
    j["model"]["dimension"] = 1;
    j["bogus"] = 3;
    j["ensemble"]["law"] = "cauchy";
    try {
        parse_config(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("mass 0 must be positive") != std::string::npos);
        CHECK(msg.find("V must have dimension^2 entries") != std::string::npos);
        CHECK(msg.find("unknown key 'bogus'") != std::string::npos);
        CHECK(msg.find("ensemble.law") != std::string::npos);
    }
}

TEST_CASE("asymmetric V is rejected")
{
    json j = small1d();
    j["model"]["dimension"] = 3;
    j["model"]["coupling"]["amplitudes"] = {{1, 0, 0, 0}, {1, 0, 0, 0}};
    j["model"]["V"] = {3, 1, 0, 0, 3, 0, 0, 0, 3};
    j.erase("ensemble");
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("V must be symmetric"), ConfigError);
}

TEST_CASE("hash follows the effective configuration")
{
    auto a = parse_config(small1d());
    auto b = parse_config(small1d());
    CHECK(a.hash == b.hash);
    b.exp.samples = 25;
    rehash(b);
    CHECK(a.hash != b.hash);
}

TEST_CASE("exit codes")
{
    auto dir = scratch("exit");
    const std::string cfg = write_config(dir, small1d());
    const std::string out = (dir / "out").string();

    CHECK(run({"check-conditions", "--config", cfg, "--out", out}).code == 0);
    CHECK(run({"check-conditions", "--config", cfg, "--frobnicate"}).code == 1);
    CHECK(run({"check-conditions"}).code == 1);
    CHECK(run({"kernel", "--config", (dir / "missing.json").string()}).code == 1);

    json bad = small1d();
    bad["model"]["V"] = {0.5};
    const std::string bad_cfg = (dir / "weak.json").string();
    std::ofstream(bad_cfg) << bad.dump();
    CHECK(run({"check-conditions", "--config", bad_cfg, "--out", out}).code == 2);
    CHECK(run({"kernel", "--config", bad_cfg, "--out", out, "--strict"}).code == 2);

    auto r = run({"simulate", "--config", cfg, "--out", out, "--T", "500"});
    CHECK(r.code == 1);
    CHECK(r.err.find("finite-speed") != std::string::npos);

    auto cond = read_csv((fs::path(out) / "conditions.csv").string());
    CHECK(cond.comment_value("seed") == "11");
}

TEST_CASE("csv header carries hash and seed")
{
    auto dir = scratch("header");
    const std::string cfg = write_config(dir, small1d());
    REQUIRE(run({"kernel", "--config", cfg, "--out", dir.string(), "--seed", "99"}).code == 0);
    auto t = read_csv((dir / "kernel.csv").string());
    auto c = parse_config(small1d());
    c.exp.seed = 99;
    rehash(c);
    CHECK(t.comment_value("seed") == "99");
    CHECK(t.comment_value("config_hash") == c.hash);
    CHECK_FALSE(t.comment_value("created").empty());
    CHECK(t.header.front() == "t");
    CHECK(t.number(0, "t") == 0.0);
}

TEST_CASE("ensemble pipeline is identical across thread counts")
{
    auto dir = scratch("threads");
    const std::string cfg = write_config(dir, small1d());
    const auto one = (dir / "one").string(), three = (dir / "three").string();
    for (const std::string& cmd : {"ensemble", "predict", "compare"}) {
        REQUIRE(run({cmd, "--config", cfg, "--out", one, "--threads", "1"}).code == 0);
        REQUIRE(run({cmd, "--config", cfg, "--out", three, "--threads", "3"}).code == 0);
    }
    for (const char* f : {"ensemble.csv", "ensemble_charfunc.csv", "ensemble_samples.csv", "predictions.csv",
                          "predictions_cross.csv", "compare.csv"}) {
        CAPTURE(f);
        CHECK(csv_body((fs::path(one) / f).string()) == csv_body((fs::path(three) / f).string()));
    }
    auto e = read_csv((fs::path(one) / "ensemble.csv").string());
    CHECK(e.rows.size() == 2 * 6);
    CHECK(e.number(0, "M") == 24);
}

TEST_CASE("compare fails on unknown observable ids")
{
    auto dir = scratch("compare");
    const std::string cfg = write_config(dir, small1d());
    REQUIRE(run({"ensemble", "--config", cfg, "--out", dir.string()}).code == 0);
    {
        std::ofstream p(dir / "predictions.csv");
        p << "observable_id,Q_inf_predicted,charfunc_predicted_re\nzz,1,0.6\n";
    }
    auto r = run({"compare", "--config", cfg, "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("no prediction") != std::string::npos);
}

TEST_CASE("simulate writes trajectory and snapshots")
{
    auto dir = scratch("simulate");
    const std::string cfg = write_config(dir, small1d());
    REQUIRE(run({"simulate", "--config", cfg, "--out", dir.string()}).code == 0);
    auto states = read_csv((dir / "states.csv").string());
    REQUIRE(states.rows.size() == 3);
    // Energy is conserved up to the integrator error.
    const double e0 = states.number(0, "energy");
    CHECK(std::abs(states.number(2, "energy") - e0) < 1e-3 * std::abs(e0));
    auto snap = read_snapshot((dir / states.rows[1][states.column("snapshot")]).string());
    CHECK(snap.t == doctest::Approx(10.0));
    CHECK(snap.M == 512);
}

TEST_CASE("snapshot round trip")
{
    auto dir = scratch("snapshot");
    Model m(cfg3d(8, 8.0));
    SystemState Y = m.zero_state();
    Y.psi = random_fields(m, 5);
    Y.q = random_vec(3, 6);
    Y.p = random_vec(3, 7);
    const std::string path = (dir / "s.bin").string();
    write_snapshot(path, m.grid(), Y, 1.25);
    auto s = read_snapshot(path);
    CHECK(s.dim == 3);
    CHECK(s.M == 8);
    CHECK(s.L == 8.0);
    CHECK(s.t == 1.25);
    CHECK(max_abs_diff(s.state.psi, Y.psi) == 0.0);
    CHECK((s.state.q - Y.q).norm() == 0.0);
    CHECK((s.state.p - Y.p).norm() == 0.0);
    std::ofstream(dir / "junk.bin") << "not a snapshot";
    CHECK_THROWS_AS(read_snapshot((dir / "junk.bin").string()), Error);
}

TEST_CASE("number formatting round-trips")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("malformed csv rows are rejected")
{
    auto dir = scratch("malformed");
    std::ofstream(dir / "x.csv") << "# c\na,b\n1,2\n3\n";
    CHECK_THROWS_AS(read_csv((dir / "x.csv").string()), Error);
}
