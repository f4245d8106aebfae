#include "tangle/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "tangle/svg_plot.hpp"

#ifndef TANGLE_SOURCE_PRESETS
#define TANGLE_SOURCE_PRESETS ""
#endif

namespace tangle {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct LineFit {
    double slope = 0.0;
    double level = 0.0;
};

LineFit fit_tail(const std::vector<double>& values, std::size_t begin, std::size_t end) {
    LineFit fit;
    const auto n = static_cast<double>(end - begin);
    double mean_t = 0.0, mean_v = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        mean_t += static_cast<double>(i);
        mean_v += values[i];
    }
    mean_t /= n;
    mean_v /= n;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double dt = static_cast<double>(i) - mean_t;
        cov += dt * (values[i] - mean_v);
        var += dt * dt;
    }
    fit.slope = var > 0.0 ? cov / var : 0.0;
    fit.level = mean_v;
    return fit;
}

Verdict verdict_of_mean(const std::vector<double>& mean, VerdictParams params) {
    const std::size_t n = mean.size();
    if (n < 4) throw std::invalid_argument("verdict: series too short");
    auto win = static_cast<std::size_t>(params.tail_fraction * static_cast<double>(n) + 0.5);
    win = std::clamp<std::size_t>(win, 2, n);
    Verdict v;
    v.params = params;
    v.window_begin = n - win;
    v.window_end = n;
    const LineFit fit = fit_tail(mean, v.window_begin, v.window_end);
    if (fit.level <= 0.0) throw std::invalid_argument("verdict: degenerate (constant-zero) traces");
    v.slope = fit.slope;
    v.level = fit.level;
    v.threshold = params.eps_slope * fit.level / static_cast<double>(n);
    v.diverges = v.slope > v.threshold;
    return v;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string weights_section(const std::vector<WeightFunction>& weights) {
    std::ostringstream out;
    out << "\n[weights]\n";
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out << "g" << i + 1 << " = " << weights[i].to_string() << "\n";
    }
    return out.str();
}

std::vector<WeightFunction> weights_from_map(const ConfigMap& map) {
    std::vector<WeightFunction> weights;
    for (int i = 1;; ++i) {
        const std::string key = "weights.g" + std::to_string(i);
        if (!map.has(key)) break;
        weights.push_back(parse_weight(map.get_string(key)));
    }
    if (weights.size() < 2) {
        throw ConfigError(map.origin() + ": section [weights] needs g1, g2, ...", "weights");
    }
    return weights;
}

}  // namespace

// --- verdict -------------------------------------------------------------------

std::string Verdict::to_text() const {
    std::ostringstream out;
    out << word() << "\n"
        << "slope = " << slope << "\n"
        << "level = " << level << "\n"
        << "threshold = " << threshold << "\n"
        << "eps_slope = " << params.eps_slope << "\n"
        << "tail_fraction = " << params.tail_fraction << "\n"
        << "window = [" << window_begin << ", " << window_end << ")\n";
    return out.str();
}

Verdict compute_verdict_series(const std::vector<std::vector<std::int64_t>>& series,
                               VerdictParams params) {
    if (series.size() < 2) throw std::invalid_argument("verdict: need at least two traces");
    const std::size_t n = series.front().size();
    for (const auto& s : series) {
        if (s.size() != n) throw std::invalid_argument("verdict: traces differ in length");
    }
    std::vector<double> mean(n, 0.0);
    for (const auto& s : series) {
        for (std::size_t i = 0; i < n; ++i) mean[i] += static_cast<double>(s[i]);
    }
    for (double& v : mean) v /= static_cast<double>(series.size());
    return verdict_of_mean(mean, params);
}

Verdict compute_verdict(const std::vector<RunTrace>& traces, VerdictParams params) {
    std::vector<std::vector<std::int64_t>> series;
    series.reserve(traces.size());
    for (const RunTrace& tr : traces) series.push_back(tr.L);
    return compute_verdict_series(series, params);
}

// --- config <-> struct ----------------------------------------------------------

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
    ExperimentConfig cfg;
    const std::string kind = map.get_string("kind");
    cfg.name = map.get_string("name", "custom");
    cfg.expected = map.get_string("expected", "");

    if (kind == "sim") {
        cfg.kind = Kind::Sim;
        cfg.sim.lambda = map.get_double("lambda");
        cfg.sim.h = map.get_int("h");
        cfg.sim.m = static_cast<int>(map.get_int("m", 2));
        cfg.sim.horizon = map.get_int("horizon");
        cfg.sim.runs = static_cast<int>(map.get_int("runs", 1));
        cfg.sim.seed = map.get_uint("seed", 1);
        cfg.sim.policy = parse_policy(map.get_string("policy"));
        cfg.sim.tail_fraction = map.get_double("tail_fraction", 0.25);
        cfg.sim.check_identities = map.get_bool("check_identities", true);
        cfg.verdict.tail_fraction = map.get_double("verdict.tail_fraction", cfg.sim.tail_fraction);
        cfg.verdict.eps_slope = map.get_double("verdict.eps_slope", 0.5);
        cfg.sim.validate();
    } else if (kind == "fluid") {
        cfg.kind = Kind::Fluid;
        cfg.fluid.h = map.get_double("h");
        cfg.fluid.t_max = map.get_double("t_max");
        cfg.fluid.dt = map.get_double("dt", 0.0);
        cfg.fluid.zeta_age_cap = map.get_double("zeta_age_cap", 0.0);
        cfg.fluid.density_stride = static_cast<int>(map.get_int("density_stride", 0));
        cfg.fluid.weights = weights_from_map(map);
        cfg.verdict.tail_fraction = map.get_double("verdict.tail_fraction", 0.25);
        cfg.verdict.eps_slope = map.get_double("verdict.eps_slope", 0.5);
        cfg.fluid.validate();
    } else if (kind == "steady") {
        cfg.kind = Kind::Steady;
        cfg.steady_h = map.get_double("h");
        cfg.steady_weights = weights_from_map(map);
        cfg.steady_options.tolerance = map.get_double("tolerance", 1e-10);
        cfg.steady_options.max_iterations = static_cast<int>(map.get_int("max_iterations", 500));
        cfg.steady_options.ds = map.get_double("ds", 0.0);
        cfg.steady_options.s_max = map.get_double("s_max", 0.0);
        cfg.steady_report_s_max = map.get_double("report_s_max", 0.0);
    } else {
        throw ConfigError(map.origin() + ": kind must be sim|fluid|steady, got '" + kind + "'",
                          "kind");
    }

    const std::vector<std::string> unused = map.unused_keys();
    if (!unused.empty()) {
        std::string joined;
        for (const std::string& k : unused) joined += (joined.empty() ? "" : ", ") + k;
        throw ConfigError(map.origin() + ": unknown field(s): " + joined, unused.front());
    }
    return cfg;
}

std::string ExperimentConfig::to_manifest() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::Sim:
            out << "kind = sim\n"
                << "name = " << name << "\n";
            if (!expected.empty()) out << "expected = " << expected << "\n";
            out << "lambda = " << num(sim.lambda) << "\n"
                << "h = " << sim.h << "\n"
                << "m = " << sim.m << "\n"
                << "horizon = " << sim.horizon << "\n"
                << "runs = " << sim.runs << "\n"
                << "seed = " << sim.seed << "\n"
                << "policy = " << sim.policy.to_string() << "\n"
                << "tail_fraction = " << num(sim.tail_fraction) << "\n"
                << "check_identities = " << (sim.check_identities ? "true" : "false") << "\n"
                << "\n[verdict]\n"
                << "tail_fraction = " << num(verdict.tail_fraction) << "\n"
                << "eps_slope = " << num(verdict.eps_slope) << "\n";
            break;
        case Kind::Fluid:
            out << "kind = fluid\n"
                << "name = " << name << "\n";
            if (!expected.empty()) out << "expected = " << expected << "\n";
            out << "h = " << num(fluid.h) << "\n"
                << "t_max = " << num(fluid.t_max) << "\n"
                << "dt = " << num(fluid.dt) << "\n"
                << "zeta_age_cap = " << num(fluid.zeta_age_cap) << "\n"
                << "density_stride = " << fluid.density_stride << "\n"
                << weights_section(fluid.weights) << "\n[verdict]\n"
                << "tail_fraction = " << num(verdict.tail_fraction) << "\n"
                << "eps_slope = " << num(verdict.eps_slope) << "\n";
            break;
        case Kind::Steady:
            out << "kind = steady\n"
                << "name = " << name << "\n";
            if (!expected.empty()) out << "expected = " << expected << "\n";
            out << "h = " << num(steady_h) << "\n"
                << "tolerance = " << num(steady_options.tolerance) << "\n"
                << "max_iterations = " << steady_options.max_iterations << "\n"
                << "ds = " << num(steady_options.ds) << "\n"
                << "s_max = " << num(steady_options.s_max) << "\n"
                << "report_s_max = " << num(steady_report_s_max) << "\n"
                << weights_section(steady_weights);
            break;
    }
    return out.str();
}

// --- runners -------------------------------------------------------------------

namespace {

ExperimentResult run_sim(const ExperimentConfig& cfg, const fs::path& outdir) {
    const std::vector<RunTrace> traces = run_batch(cfg.sim);

    for (const RunTrace& tr : traces) {
        char name[32];
        std::snprintf(name, sizeof(name), "run_%03d.csv", tr.run_index);
        std::ofstream out(outdir / name);
        write_trace_csv(out, tr);
    }
    {
        std::ofstream out(outdir / "summary.csv");
        write_summary_csv(out, traces);
    }

    Verdict verdict = compute_verdict(traces, cfg.verdict);
    write_file(outdir / "verdict.txt", verdict.to_text());

    std::vector<PlotSeries> series;
    series.reserve(traces.size());
    for (const RunTrace& tr : traces) {
        PlotSeries s;
        s.xs.resize(tr.L.size());
        s.ys.resize(tr.L.size());
        for (std::size_t t = 0; t < tr.L.size(); ++t) {
            s.xs[t] = static_cast<double>(t);
            s.ys[t] = static_cast<double>(tr.L[t]);
        }
        s.opacity = std::min(1.0, 4.0 / static_cast<double>(traces.size()));
        series.push_back(std::move(s));
    }
    write_svg_chart(outdir / "plot.svg",
                    cfg.name + ": tip count, " + std::to_string(traces.size()) + " runs (" +
                        verdict.word() + ")",
                    "time step", "L(t)", series);

    ExperimentResult result;
    result.verdict = verdict;
    result.verdict_word = verdict.word();
    result.outdir = outdir;
    return result;
}

ExperimentResult run_fluid(const ExperimentConfig& cfg, const fs::path& outdir) {
    FluidSolver solver(cfg.fluid);
    solver.run();

    const std::size_t last = solver.last_index();
    {
        std::ofstream out(outdir / "fluid.csv");
        out << "t,x_total,l_total,w_total";
        for (std::size_t j = 0; j < solver.weight_count(); ++j) out << ",zeta_" << j + 1;
        out << "\n";
        for (std::size_t i = 0; i <= last; ++i) {
            out << solver.time_of(i) << ',' << solver.x_total()[i] << ',' << solver.l_total()[i]
                << ',' << solver.w_total()[i];
            for (std::size_t j = 0; j < solver.weight_count(); ++j) {
                out << ',' << solver.zeta(j)[i];
            }
            out << '\n';
        }
    }
    if (cfg.fluid.density_stride > 0) {
        std::ofstream out(outdir / "density.csv");
        out << "t,s,x,l\n";
        const auto& rows = solver.stored_rows();
        for (const auto& [i, r] : rows) {
            const double t = solver.time_of(i);
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double s = solver.time_of(j);
                // tips older than h carry the lagged free density forward
                double l = 1.0;
                if (s > cfg.fluid.h) {
                    const auto lag = static_cast<std::size_t>(i - std::llround(cfg.fluid.h / solver.dt()));
                    const auto it = std::find_if(rows.begin(), rows.end(),
                                                 [&](const auto& p) { return p.first == lag; });
                    const auto age = static_cast<std::size_t>(
                        std::llround((s - cfg.fluid.h) / solver.dt()));
                    l = (it != rows.end() && age < it->second.size())
                            ? it->second[age]
                            : std::numeric_limits<double>::quiet_NaN();
                }
                out << t << ',' << s << ',' << r[j] << ',' << l << '\n';
            }
        }
    }

    // Same tail-slope call as the agent runs, on the solved l(t).
    std::vector<double> l_series(solver.l_total().begin(), solver.l_total().end());
    Verdict verdict = verdict_of_mean(l_series, cfg.verdict);
    write_file(outdir / "verdict.txt", verdict.to_text());

    std::vector<PlotSeries> series(3);
    const char* labels[3] = {"l(t)", "x(t)", "w(t)"};
    const char* colors[3] = {"#1f77b4", "#2ca02c", "#d62728"};
    const std::vector<double>* data[3] = {&solver.l_total(), &solver.x_total(), &solver.w_total()};
    for (int c = 0; c < 3; ++c) {
        series[c].label = labels[c];
        series[c].color = colors[c];
        series[c].width = 1.6;
        for (std::size_t i = 0; i <= last; ++i) {
            series[c].xs.push_back(solver.time_of(i));
            series[c].ys.push_back((*data[c])[i]);
        }
    }
    write_svg_chart(outdir / "plot.svg", cfg.name + ": fluid tip densities (" + verdict.word() + ")",
                    "t", "rescaled mass", series);

    ExperimentResult result;
    result.verdict = verdict;
    result.verdict_word = verdict.word();
    result.outdir = outdir;
    return result;
}

ExperimentResult run_steady(const ExperimentConfig& cfg, const fs::path& outdir) {
    SteadyProfile profile = solve_fixed_point(cfg.steady_weights, cfg.steady_h, cfg.steady_options);
    const double s_max =
        cfg.steady_report_s_max > 0.0 ? cfg.steady_report_s_max : 1000.0 * cfg.steady_h;
    PersistenceReport report = verify_orphan_persistence(profile, s_max);

    std::ostringstream rep;
    rep << "steady-state fixed point\n";
    for (std::size_t j = 0; j < profile.zeta.size(); ++j) {
        rep << "zeta_" << j + 1 << " = " << profile.zeta[j] << "\n";
    }
    rep << "x_infinity = " << profile.x_infinity << "\n"
        << "residual = " << profile.residual << "\n"
        << "tail_bound = " << profile.tail_bound << "\n"
        << "iterations = " << profile.iterations << "\n"
        << "tail_slope = " << report.tail_slope << "\n"
        << "tail_slope_rel_err = " << report.tail_slope_rel_err << "\n"
        << "doubling_ratio = " << report.doubling_ratio << "\n"
        << "tip_integral_diverges = " << (report.diverges ? "true" : "false") << "\n";
    write_file(outdir / "report.txt", rep.str());

    {
        std::ofstream out(outdir / "report.csv");
        out << "S,integral_x\n";
        for (const auto& [s, v] : report.integral_table) out << s << ',' << v << '\n';
    }
    {
        std::ofstream out(outdir / "profile.csv");
        out << "s,x,l\n";
        const double s_hi = 12.0 * cfg.steady_h;
        const int rows = 1200;
        for (int i = 0; i <= rows; ++i) {
            const double s = s_hi * static_cast<double>(i) / rows;
            out << s << ',' << profile.x(s) << ',' << profile.l(s) << '\n';
        }
    }

    std::vector<PlotSeries> series(2);
    series[0].label = "x(s)";
    series[0].color = "#2ca02c";
    series[0].width = 1.6;
    series[1].label = "l(s)";
    series[1].color = "#1f77b4";
    series[1].width = 1.6;
    const double s_hi = 12.0 * cfg.steady_h;
    for (int i = 0; i <= 600; ++i) {
        const double s = s_hi * static_cast<double>(i) / 600;
        series[0].xs.push_back(s);
        series[0].ys.push_back(profile.x(s));
        series[1].xs.push_back(s);
        series[1].ys.push_back(profile.l(s));
    }
    write_svg_chart(outdir / "plot.svg", cfg.name + ": steady age profiles", "age s", "density",
                    series);

    write_file(outdir / "verdict.txt",
               std::string("fixed-point\nresidual = ") + num(profile.residual) + "\n");

    ExperimentResult result;
    result.verdict_word = "fixed-point";
    result.outdir = outdir;
    return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& outdir) {
    fs::create_directories(outdir);
    write_file(outdir / "manifest.txt", cfg.to_manifest());
    switch (cfg.kind) {
        case ExperimentConfig::Kind::Sim: return run_sim(cfg, outdir);
        case ExperimentConfig::Kind::Fluid: return run_fluid(cfg, outdir);
        case ExperimentConfig::Kind::Steady: return run_steady(cfg, outdir);
    }
    throw std::logic_error("unreachable experiment kind");
}

Verdict verdict_from_csv_dir(const fs::path& dir, VerdictParams params) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2) {
        throw std::runtime_error("verdict: need at least two run_*.csv files in " + dir.string());
    }
    std::vector<std::vector<std::int64_t>> series;
    for (const fs::path& file : files) {
        std::ifstream in(file);
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("empty trace file " + file.string());
        // locate the L column
        std::size_t l_col = std::string::npos, col = 0;
        std::istringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (cell == "L") l_col = col;
            ++col;
        }
        if (l_col == std::string::npos) {
            throw std::runtime_error("no L column in " + file.string());
        }
        std::vector<std::int64_t> l;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string v;
            for (std::size_t c = 0; std::getline(row, v, ','); ++c) {
                if (c == l_col) l.push_back(std::stoll(v));
            }
        }
        series.push_back(std::move(l));
    }
    return compute_verdict_series(series, params);
}

// --- presets -------------------------------------------------------------------

std::vector<std::string> preset_names() {
    return {"fig6", "fig7", "fig8", "rs-baseline", "fluid-random", "fluid-integrable", "steady-exp"};
}

std::filesystem::path find_presets_dir() {
    std::vector<fs::path> candidates;
    if (const char* env = std::getenv("TANGLE_PRESETS_DIR")) candidates.emplace_back(env);
    candidates.emplace_back("presets");
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        candidates.push_back(exe.parent_path() / "presets");
        candidates.push_back(exe.parent_path().parent_path() / "presets");
    }
    if (TANGLE_SOURCE_PRESETS[0] != '\0') candidates.emplace_back(TANGLE_SOURCE_PRESETS);
    for (const fs::path& c : candidates) {
        if (fs::exists(c / "fig6.cfg")) return c;
    }
    throw std::runtime_error(
        "presets directory not found (set TANGLE_PRESETS_DIR or run from the project root)");
}

ConfigMap load_scenario(const std::string& name_or_path) {
    const fs::path as_path(name_or_path);
    if (fs::is_regular_file(as_path)) {
        return ConfigMap::parse_file(as_path);
    }
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        return ConfigMap::parse_file(find_presets_dir() / (name_or_path + ".cfg"));
    }
    throw std::runtime_error("unknown preset or config file '" + name_or_path +
                             "' (presets: fig6 fig7 fig8 rs-baseline fluid-random fluid-integrable "
                             "steady-exp)");
}

}  // namespace tangle
