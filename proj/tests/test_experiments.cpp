#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tangle/experiments.hpp"

using namespace tangle;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("tangle_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kSimText = R"(kind = sim
name = smoke
expected = bounded
lambda = 6
h = 2
m = 2
horizon = 60
runs = 3
seed = 9
policy = uniform

[verdict]
eps_slope = 0.5
)";

}  // namespace

TEST_CASE("config parsing: values, sections, comments, failure locations") {
    const ConfigMap map = ConfigMap::parse_string(
        "a = 1\n# comment\nb = hello  # trailing\n[sec]\nc = 2.5\n", "mem");
    CHECK(map.get_int("a") == 1);
    CHECK(map.get_string("b") == "hello");
    CHECK(map.get_double("sec.c") == doctest::Approx(2.5));
    CHECK(map.get_double("missing", 7.0) == 7.0);

    SUBCASE("missing equals sign carries the line number") {
        try {
            ConfigMap::parse_string("x = 1\noops\n", "mem");
            FAIL("expected a parse error");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("duplicate keys are rejected") {
        CHECK_THROWS_AS(ConfigMap::parse_string("x = 1\nx = 2\n", "mem"), ConfigError);
    }
    SUBCASE("bad numbers name the field") {
        try {
            ConfigMap::parse_string("x = banana\n", "mem").get_double("x");
            FAIL("expected a type error");
        } catch (const ConfigError& e) {
            CHECK(e.field == "x");
            CHECK(e.line == 1);
        }
    }
    SUBCASE("unknown fields are flagged after building a config") {
        ConfigMap bad = ConfigMap::parse_string(kSimText, "mem");
        bad.set("lambdaa", "30"); // typo
        CHECK_THROWS_AS(ExperimentConfig::from_map(bad), ConfigError);
    }
}

TEST_CASE("policy grammar round-trips") {
    for (const char* text :
         {"uniform", "mcmc{0.1}", "age{g=exp,beta=2}", "age{g=const,c=1}",
          "age{g=window,width=1.5}", "hybrid{mcmc{1},uniform}", "hybrid{mcmc{5},mcmc{0.01}}"}) {
        const SelectionPolicy p = parse_policy(text);
        CHECK(parse_policy(p.to_string()).to_string() == p.to_string());
    }
    CHECK(parse_policy("mcmc{alpha=0.25}").alpha == doctest::Approx(0.25));
    CHECK_THROWS_AS(parse_policy("bogus"), ConfigError);
    CHECK_THROWS_AS(parse_policy("mcmc{}"), ConfigError);
    CHECK_THROWS_AS(parse_policy("hybrid{uniform,uniform}"), ConfigError);
    CHECK_THROWS_AS(parse_policy("hybrid{mcmc{1},hybrid{mcmc{1},uniform}}"), ConfigError);
    CHECK_THROWS_AS(parse_policy("age{g=exp}"), ConfigError);
    CHECK_THROWS_AS(parse_weight("exp{beta=0}"), std::exception);
    CHECK(parse_weight("const").total() == std::numeric_limits<double>::infinity());
}

TEST_CASE("verdict: trivial series and error paths") {
    VerdictParams params;
    SUBCASE("flat traces are bounded") {
        std::vector<std::vector<std::int64_t>> flat(3, std::vector<std::int64_t>(100, 42));
        const Verdict v = compute_verdict_series(flat, params);
        CHECK_FALSE(v.diverges);
        CHECK(v.level == doctest::Approx(42.0));
        CHECK(std::string(v.word()) == "bounded");
    }
    SUBCASE("linear growth diverges") {
        std::vector<std::vector<std::int64_t>> rising(2);
        for (auto& s : rising) {
            for (int t = 0; t < 100; ++t) s.push_back(5 * t);
        }
        CHECK(compute_verdict_series(rising, params).diverges);
    }
    SUBCASE("a single trace is not enough") {
        std::vector<std::vector<std::int64_t>> one(1, std::vector<std::int64_t>(50, 1));
        CHECK_THROWS_AS(compute_verdict_series(one, params), std::invalid_argument);
    }
    SUBCASE("constant-zero traces are degenerate") {
        std::vector<std::vector<std::int64_t>> zero(2, std::vector<std::int64_t>(50, 0));
        CHECK_THROWS_AS(compute_verdict_series(zero, params), std::invalid_argument);
    }
}

TEST_CASE("sim experiment: full output set, offline verdict, reproducibility") {
    const fs::path dir = fresh_dir("sim");
    const ExperimentConfig cfg =
        ExperimentConfig::from_map(ConfigMap::parse_string(kSimText, "mem"));
    const ExperimentResult result = run_experiment(cfg, dir);

    for (const char* f :
         {"run_000.csv", "run_001.csv", "run_002.csv", "summary.csv", "verdict.txt",
          "manifest.txt", "plot.svg"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK(result.verdict_word == "bounded");
    CHECK(slurp(dir / "verdict.txt").rfind("bounded\n", 0) == 0);

    // the emitted verdict is a pure function of the emitted CSVs
    const Verdict offline = verdict_from_csv_dir(dir, cfg.verdict);
    CHECK(offline.diverges == result.verdict->diverges);
    CHECK(offline.slope == doctest::Approx(result.verdict->slope).epsilon(1e-12));

    // the manifest reloads as a config and reproduces the run bit-for-bit
    const fs::path dir2 = fresh_dir("sim_replay");
    const ExperimentConfig replay =
        ExperimentConfig::from_map(ConfigMap::parse_file(dir / "manifest.txt"));
    run_experiment(replay, dir2);
    CHECK(slurp(dir / "run_000.csv") == slurp(dir2 / "run_000.csv"));
    CHECK(slurp(dir / "run_002.csv") == slurp(dir2 / "run_002.csv"));
    CHECK(slurp(dir / "summary.csv") == slurp(dir2 / "summary.csv"));
}

TEST_CASE("fluid experiment: series CSV, density dump, verdict") {
    const fs::path dir = fresh_dir("fluid");
    const char* text = R"(kind = fluid
name = fluidsmoke
expected = fixed-point
h = 1
t_max = 20
dt = 0.02
density_stride = 25
[weights]
g1 = const{1}
g2 = const{1}
)";
    const ExperimentConfig cfg = ExperimentConfig::from_map(ConfigMap::parse_string(text, "mem"));
    const ExperimentResult result = run_experiment(cfg, dir);
    CHECK(result.verdict_word == "bounded");
    CHECK(fs::exists(dir / "fluid.csv"));
    CHECK(fs::exists(dir / "density.csv"));
    CHECK(fs::exists(dir / "plot.svg"));
    const std::string head = slurp(dir / "fluid.csv").substr(0, 40);
    CHECK(head.rfind("t,x_total,l_total,w_total,zeta_1,zeta_2", 0) == 0);
    const std::string dens = slurp(dir / "density.csv");
    CHECK(dens.rfind("t,s,x,l", 0) == 0);
}

TEST_CASE("steady experiment: report pair and profile") {
    const fs::path dir = fresh_dir("steady");
    const char* text = R"(kind = steady
name = steadysmoke
expected = fixed-point
h = 1
tolerance = 1e-9
report_s_max = 400
[weights]
g1 = exp{1}
g2 = exp{1}
)";
    const ExperimentConfig cfg = ExperimentConfig::from_map(ConfigMap::parse_string(text, "mem"));
    const ExperimentResult result = run_experiment(cfg, dir);
    CHECK(result.verdict_word == "fixed-point");
    const std::string report = slurp(dir / "report.txt");
    CHECK(report.find("x_infinity") != std::string::npos);
    CHECK(report.find("tip_integral_diverges = true") != std::string::npos);
    CHECK(fs::exists(dir / "report.csv"));
    CHECK(fs::exists(dir / "profile.csv"));
    CHECK(slurp(dir / "verdict.txt").rfind("fixed-point", 0) == 0);
}

TEST_CASE("fluid and steady manifests reload to the same effective config") {
    for (const char* name : {"fluid-random", "steady-exp"}) {
        const fs::path dir = fresh_dir(std::string("manifest_") + name);
        ConfigMap map = load_scenario(name);
        if (std::string(name) == "fluid-random") map.set("t_max", "20"); // keep it quick
        const ExperimentConfig cfg = ExperimentConfig::from_map(map);
        run_experiment(cfg, dir);
        const ExperimentConfig replay =
            ExperimentConfig::from_map(ConfigMap::parse_file(dir / "manifest.txt"));
        CHECK(replay.to_manifest() == cfg.to_manifest());
    }
}

TEST_CASE("unwritable output locations surface as errors") {
    const fs::path blocker = fresh_dir("blocker") / "occupied";
    std::ofstream(blocker) << "file, not a directory";
    const ExperimentConfig cfg =
        ExperimentConfig::from_map(ConfigMap::parse_string(kSimText, "mem"));
    CHECK_THROWS(run_experiment(cfg, blocker / "sub"));
}

TEST_CASE("presets resolve and parse") {
    // tests run from the build tree; the source-path fallback finds presets/
    const fs::path dir = find_presets_dir();
    for (const std::string& name : preset_names()) {
        CHECK(fs::exists(dir / (name + ".cfg")));
        const ConfigMap map = load_scenario(name);
        const ExperimentConfig cfg = ExperimentConfig::from_map(map);
        CHECK(cfg.name == name);
    }
    CHECK_THROWS(load_scenario("fig99"));
}
