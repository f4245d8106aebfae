#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tangle/config.hpp"
#include "tangle/fluid.hpp"
#include "tangle/sim.hpp"
#include "tangle/steady.hpp"

namespace tangle {

// Tail-slope test quantifying "diverges" vs "fluctuates around a constant":
// fit a line to the ensemble-mean L(t) over the tail window and call the
// batch divergent when slope > eps_slope * level / horizon.
struct VerdictParams {
    double tail_fraction = 0.25;
    double eps_slope = 0.5;
};

struct Verdict {
    bool diverges = false;
    double slope = 0.0;
    double level = 0.0;
    double threshold = 0.0;
    std::size_t window_begin = 0;
    std::size_t window_end = 0;
    VerdictParams params;

    const char* word() const { return diverges ? "diverges" : "bounded"; }
    std::string to_text() const;
};

Verdict compute_verdict(const std::vector<RunTrace>& traces, VerdictParams params);

// Same test on plain L series (e.g. re-read from emitted CSVs).
Verdict compute_verdict_series(const std::vector<std::vector<std::int64_t>>& series,
                               VerdictParams params);

// One runnable scenario: an agent-based batch, a fluid solve, or a
// steady-state study.
struct ExperimentConfig {
    enum class Kind { Sim, Fluid, Steady };

    Kind kind = Kind::Sim;
    std::string name = "custom";
    std::string expected; // diverges | bounded | fixed-point | empty

    ScenarioConfig sim;
    VerdictParams verdict;

    FluidConfig fluid;

    double steady_h = 1.0;
    std::vector<WeightFunction> steady_weights;
    SteadyOptions steady_options;
    double steady_report_s_max = 0.0; // 0 -> auto

    static ExperimentConfig from_map(const ConfigMap& map);
    std::string to_manifest() const;
};

struct ExperimentResult {
    std::optional<Verdict> verdict;
    std::string verdict_word; // "diverges"/"bounded"/"fixed-point"
    std::filesystem::path outdir;
};

// Runs the scenario and writes the full output set into `outdir`: per-run
// CSVs plus summary.csv (sim), fluid.csv / profile.csv (solvers), a
// machine-readable verdict.txt, manifest.txt (reloadable as a config), and a
// static plot.svg.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& outdir);

// Recomputes the verdict offline from the run_*.csv files in a directory.
Verdict verdict_from_csv_dir(const std::filesystem::path& dir, VerdictParams params);

// --- presets -----------------------------------------------------------------

// Scenario files shipped with the tool (fig6, fig7, fig8, rs-baseline,
// fluid-random, fluid-integrable, steady-exp).
std::vector<std::string> preset_names();

// Locates the presets directory: $TANGLE_PRESETS_DIR, ./presets, the
// executable's neighbours, then the build-time source path.
std::filesystem::path find_presets_dir();

// Loads a preset by name or any config file by path.
ConfigMap load_scenario(const std::string& name_or_path);

}  // namespace tangle
