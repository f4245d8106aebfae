// Command-line front end: run scenarios (presets or config files), recompute
// verdicts from emitted CSVs, list presets.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tangle/experiments.hpp"

namespace {

int cmd_run(const std::string& scenario, const std::string& outdir,
            const std::vector<std::string>& overrides) {
    tangle::ConfigMap map = tangle::load_scenario(scenario);
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return 2;
        }
        map.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const tangle::ExperimentConfig cfg = tangle::ExperimentConfig::from_map(map);
    const tangle::ExperimentResult result = tangle::run_experiment(cfg, outdir);
    std::cout << "wrote " << result.outdir.string() << "\n";
    std::cout << "verdict: " << result.verdict_word;
    if (result.verdict) {
        std::cout << "  (slope " << result.verdict->slope << ", level " << result.verdict->level
                  << ", threshold " << result.verdict->threshold << ")";
    }
    std::cout << "\n";
    if (!cfg.expected.empty()) {
        const bool match = cfg.expected == result.verdict_word ||
                           (cfg.expected == "fixed-point" && result.verdict_word == "bounded");
        std::cout << "expected: " << cfg.expected << (match ? " [ok]" : " [MISMATCH]") << "\n";
        if (!match) return 1;
    }
    return 0;
}

int cmd_verdict(const std::string& dir, double tail_fraction, double eps_slope, bool write_back) {
    tangle::VerdictParams params;
    params.tail_fraction = tail_fraction;
    params.eps_slope = eps_slope;
    const tangle::Verdict v = tangle::verdict_from_csv_dir(dir, params);
    std::cout << v.to_text();
    if (write_back) {
        std::ofstream out(std::filesystem::path(dir) / "verdict.txt");
        out << v.to_text();
    }
    return 0;
}

int cmd_list() {
    const auto dir = tangle::find_presets_dir();
    for (const std::string& name : tangle::preset_names()) {
        const tangle::ConfigMap map = tangle::ConfigMap::parse_file(dir / (name + ".cfg"));
        std::printf("%-16s kind=%-6s expected=%s\n", name.c_str(),
                    map.get_string("kind").c_str(), map.get_string("expected", "-").c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tip-dynamics simulator and fluid-limit solver for DAG ledgers"};
    app.require_subcommand(1);

    std::string scenario, outdir = "out", dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::int64_t runs = 0, horizon = 0;
    double tail_fraction = 0.25, eps_slope = 0.5;
    bool write_back = false;

    CLI::App* run = app.add_subcommand("run", "run a preset or config file");
    run->add_option("scenario", scenario, "preset name or path to a .cfg file")->required();
    run->add_option("--out", outdir, "output directory");
    run->add_option("--seed", seed, "override the base seed");
    run->add_option("--runs", runs, "override the Monte Carlo run count");
    run->add_option("--horizon", horizon, "override the horizon (steps)");
    run->add_option("--set", overrides, "override any config field (key=value)");

    CLI::App* verdict = app.add_subcommand("verdict", "recompute a verdict from run_*.csv files");
    verdict->add_option("dir", dir, "directory holding run_*.csv")->required();
    verdict->add_option("--tail-fraction", tail_fraction, "tail window as a fraction of the horizon");
    verdict->add_option("--eps-slope", eps_slope, "slope threshold factor");
    verdict->add_flag("--write", write_back, "rewrite verdict.txt in the directory");

    app.add_subcommand("list-presets", "list shipped presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (run->count("--seed")) overrides.push_back("seed=" + std::to_string(seed));
            if (run->count("--runs")) overrides.push_back("runs=" + std::to_string(runs));
            if (run->count("--horizon")) overrides.push_back("horizon=" + std::to_string(horizon));
            return cmd_run(scenario, outdir, overrides);
        }
        if (verdict->parsed()) return cmd_verdict(dir, tail_fraction, eps_slope, write_back);
        return cmd_list();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
