// Experiment runner: single scenario runs, parameter sweeps, recovery-model
// calibration, scheme comparisons, and the bundled scenario presets.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tetrysim/calibrate.hpp"
#include "tetrysim/scenario.hpp"
#include "tetrysim/simcore.hpp"

using namespace tetrysim;
namespace fs = std::filesystem;

namespace {

struct LoadOpts {
    std::string config;
    std::string preset_name;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0; // 0: keep the config's seed
};

void add_load_opts(CLI::App* cmd, LoadOpts& o) {
    auto* cfg = cmd->add_option("--config,-c", o.config, "scenario config file");
    auto* pre = cmd->add_option("--preset,-p", o.preset_name, "bundled preset name");
    cfg->excludes(pre);
    cmd->add_option("--override,-O", o.overrides,
                    "section.key=value (lists take ';'-separated entries)");
    cmd->add_option("--seed,-s", o.seed, "override the run seed");
}

ScenarioConfig load_scenario(const LoadOpts& o) {
    ScenarioConfig cfg;
    if (!o.config.empty())
        cfg = ScenarioConfig::parse_file(o.config);
    else if (!o.preset_name.empty())
        cfg = preset(o.preset_name);
    else
        throw CLI::ValidationError("run", "need --config or --preset");
    for (const auto& ov : o.overrides) cfg.apply_override(ov);
    if (o.seed) cfg.seed = o.seed;
    return cfg;
}

int cmd_run(const LoadOpts& o, const std::string& out_dir) {
    const auto cfg = load_scenario(o);
    cfg.validate();
    const auto log = run_scenario(cfg);
    if (!out_dir.empty()) {
        log.write_csvs(out_dir);
        std::ofstream f(fs::path(out_dir) / "scenario.cfg", std::ios::binary);
        f << cfg.serialize();
    }
    std::printf("%s seed=%llu %s\n", cfg.name.c_str(),
                static_cast<unsigned long long>(cfg.seed), log.summary_line().c_str());
    return 0;
}

struct SweepRow {
    double value;
    std::uint64_t seed;
    double ilr, mean_red, kbps, on_time;
};

void apply_axis(ScenarioConfig& cfg, const std::string& axis, double value) {
    if (axis == "f") cfg.controller.f = value;
    else if (axis == "min_th") cfg.controller.min_th = value;
    else if (axis == "max_th") cfg.controller.max_th = value;
    else if (axis == "feedback_loss") cfg.channel.feedback_loss = value;
    else throw CLI::ValidationError("sweep", "axis must be f, min_th, max_th or feedback_loss");
}

int cmd_sweep(const LoadOpts& o, const std::string& axis, const std::vector<double>& values,
              int seeds, const std::string& out_file) {
    if (values.empty()) throw CLI::ValidationError("sweep", "need at least one --values entry");
    const auto base = load_scenario(o);

    struct Job {
        double value;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const double v : values)
        for (int s = 1; s <= seeds; ++s) jobs.push_back({v, static_cast<std::uint64_t>(s)});

    // Validate one instance up front so config errors surface before the
    // parallel fan-out.
    {
        auto probe = base;
        apply_axis(probe, axis, values.front());
        probe.validate();
    }

    std::vector<SweepRow> rows(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < static_cast<long long>(jobs.size()); ++i) {
        auto cfg = base;
        apply_axis(cfg, axis, jobs[i].value);
        cfg.seed = jobs[i].seed;
        const auto log = run_scenario(cfg);
        rows[i] = {jobs[i].value, jobs[i].seed, log.ilr(), log.mean_redundancy(),
                   log.mean_kbps(), log.on_time_rate()};
    }

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file, std::ios::binary);
        out = &file;
    }
    *out << axis << ",seed,ilr,mean_redundancy,mean_kbps,on_time_rate\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6g,%llu,%.6f,%.4f,%.1f,%.6f\n", r.value,
                      static_cast<unsigned long long>(r.seed), r.ilr, r.mean_red, r.kbps,
                      r.on_time);
        *out << buf;
    }
    return 0;
}

int cmd_calibrate(const CalibrationOptions& opt, const std::string& out_file, bool quiet) {
    const auto result = run_calibration(opt, quiet ? nullptr : &std::cerr);
    CalibrationTable table = result.table;
    table.save(out_file);

    std::size_t bad_ks = 0;
    for (const auto& p : result.points)
        if (!p.skipped && p.ks >= 0.08) ++bad_ks;
    std::printf("calibrated %zu entries (%zu grid points, %zu skipped, %zu with ks >= 0.08) -> %s\n",
                table.entries.size(), result.points.size(), result.skipped_points, bad_ks,
                out_file.c_str());
    for (const auto& p : result.points) {
        if (p.skipped)
            std::printf("  p=%.3f b=%.0f n=%d dR=%.4f SKIPPED (%zu samples)\n", p.p_target, p.b,
                        p.n, p.delta_r, p.samples);
    }
    return result.skipped_points > 0 ? 2 : 0;
}

int cmd_compare(const std::vector<std::string>& names, const LoadOpts& base_opts,
                const std::string& out_file) {
    if (names.size() < 2)
        throw CLI::ValidationError("compare", "need at least two --schemes entries");

    std::vector<ScenarioConfig> cfgs;
    for (const auto& n : names) {
        LoadOpts o = base_opts;
        if (fs::exists(n)) {
            o.config = n;
            o.preset_name.clear();
        } else {
            o.preset_name = n;
            o.config.clear();
        }
        cfgs.push_back(load_scenario(o));
        cfgs.back().validate();
    }

    // Apples to apples: traffic, channel and seed must agree.
    const auto key = [](const ScenarioConfig& c) {
        ScenarioConfig probe = c;
        probe.name = "";
        probe.codec = {};
        probe.controller = {};
        return probe.serialize();
    };
    for (std::size_t i = 1; i < cfgs.size(); ++i)
        if (key(cfgs[i]) != key(cfgs[0]))
            throw CLI::ValidationError("compare",
                                       "configs differ in traffic/channel/seed; refusing");

    std::vector<MetricsLog> logs(cfgs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < static_cast<long long>(cfgs.size()); ++i)
        logs[i] = run_scenario(cfgs[i]);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file, std::ios::binary);
        out = &file;
    }
    *out << "scheme,segment,start_s,end_s,ilr,mean_redundancy,mean_kbps\n";
    const auto& segs = cfgs[0].channel.loss;
    char buf[200];
    for (std::size_t c = 0; c < cfgs.size(); ++c) {
        const Micros run_end = logs[c].last_send + 1;
        for (std::size_t s = 0; s < segs.size(); ++s) {
            const Micros a = ms(segs[s].start_s * 1000.0);
            const Micros b = s + 1 < segs.size() ? ms(segs[s + 1].start_s * 1000.0) : run_end;
            std::snprintf(buf, sizeof buf, "%s,%zu,%.3f,%.3f,%.6f,%.4f,%.1f\n",
                          cfgs[c].name.c_str(), s, to_ms(a) / 1000.0, to_ms(b) / 1000.0,
                          logs[c].ilr_between(a, b), logs[c].mean_redundancy_between(a, b),
                          logs[c].mean_kbps_between(a, b));
            *out << buf;
        }
        std::snprintf(buf, sizeof buf, "%s,total,0,%.3f,%.6f,%.4f,%.1f\n", cfgs[c].name.c_str(),
                      to_ms(run_end) / 1000.0, logs[c].ilr(), logs[c].mean_redundancy(),
                      logs[c].mean_kbps());
        *out << buf;
    }
    return 0;
}

int cmd_presets(const std::string& write_dir) {
    for (const auto& name : preset_names()) {
        const auto cfg = preset(name);
        std::printf("%-12s %s\n", name.c_str(),
                    cfg.traffic.type == TrafficSpec::Type::Cbr ? "cbr" : "video");
        if (!write_dir.empty()) {
            fs::create_directories(write_dir);
            std::ofstream f(fs::path(write_dir) / (name + ".cfg"), std::ios::binary);
            f << cfg.serialize();
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tetrysim: on-the-fly erasure coding and adaptive redundancy simulator"};
    app.require_subcommand(1);

    LoadOpts run_opts;
    std::string run_out;
    auto* run = app.add_subcommand("run", "execute one scenario and print a summary");
    add_load_opts(run, run_opts);
    run->add_option("--out-dir,-o", run_out, "write packets/timeline/events CSVs here");

    LoadOpts sweep_opts;
    std::string sweep_axis, sweep_out;
    std::vector<double> sweep_values;
    int sweep_seeds = 10;
    auto* sweep = app.add_subcommand("sweep", "run one scenario across a parameter axis");
    add_load_opts(sweep, sweep_opts);
    sweep->add_option("--axis,-a", sweep_axis, "f | min_th | max_th | feedback_loss")
        ->required();
    sweep->add_option("--values,-v", sweep_values, "axis values")->required()->delimiter(',');
    sweep->add_option("--seeds,-n", sweep_seeds, "seeds 1..N per value");
    sweep->add_option("--out,-o", sweep_out, "summary CSV (default stdout)");

    CalibrationOptions cal;
    std::string cal_out = "data/recovery_coeffs.txt";
    bool cal_quiet = false;
    auto* calib = app.add_subcommand("calibrate", "fit the recovery-delay model from simulation");
    calib->add_option("--out,-o", cal_out, "calibration table file");
    calib->add_option("--p", cal.p_grid, "loss-rate grid")->delimiter(',');
    calib->add_option("--b", cal.b_grid, "burst-size grid")->delimiter(',');
    calib->add_option("--n", cal.n_grid, "code-parameter grid")->delimiter(',');
    calib->add_option("--seed,-s", cal.seed, "base seed");
    calib->add_option("--target-samples", cal.target_samples, "samples aimed per grid point");
    calib->add_option("--max-packets", cal.max_packets, "per-run packet budget cap");
    calib->add_option("--seeds-per-point", cal.seeds_per_point, "runs pooled per grid point");
    calib->add_flag("--quiet,-q", cal_quiet, "suppress per-entry diagnostics");

    LoadOpts cmp_opts;
    std::vector<std::string> cmp_schemes;
    std::string cmp_out;
    auto* cmp = app.add_subcommand("compare",
                                   "aligned per-segment metrics across schemes sharing "
                                   "traffic, channel and seed");
    cmp->add_option("--schemes", cmp_schemes, "preset names or config files")
        ->required()
        ->delimiter(',');
    cmp->add_option("--override,-O", cmp_opts.overrides, "applied to every scheme");
    cmp->add_option("--seed,-s", cmp_opts.seed, "seed for every scheme");
    cmp->add_option("--out,-o", cmp_out, "comparison CSV (default stdout)");

    std::string presets_dir;
    auto* pre = app.add_subcommand("presets", "list bundled scenario presets");
    pre->add_option("--write-dir", presets_dir, "also write each preset as a .cfg file");

#ifdef _OPENMP
    int jobs = 0;
    app.add_option("--jobs,-j", jobs, "worker threads for sweeps/calibration");
#endif

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#endif

    try {
        if (run->parsed()) return cmd_run(run_opts, run_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_opts, sweep_axis, sweep_values, sweep_seeds, sweep_out);
        if (calib->parsed()) return cmd_calibrate(cal, cal_out, cal_quiet);
        if (cmp->parsed()) return cmd_compare(cmp_schemes, cmp_opts, cmp_out);
        if (pre->parsed()) return cmd_presets(presets_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
