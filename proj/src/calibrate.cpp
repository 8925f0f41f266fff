#include "tetrysim/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tetrysim/rng.hpp"
#include "tetrysim/simcore.hpp"

namespace tetrysim {

std::vector<double> fixed_run_recovery_samples(double p, double b, int n, std::uint64_t packets,
                                               std::uint64_t seed, double rate_kbps,
                                               std::size_t packet_size) {
    ScenarioConfig cfg;
    cfg.name = "calibration";
    cfg.seed = seed;
    cfg.traffic.type = TrafficSpec::Type::Cbr;
    cfg.traffic.rate_kbps = rate_kbps;
    cfg.traffic.packet_size = packet_size;
    cfg.traffic.packets = packets;
    cfg.codec.scheme = CodecSpec::Scheme::Tetrys;
    cfg.codec.adaptive = false;
    cfg.codec.fixed_n = n;
    cfg.channel.loss.clear();
    LossSegmentSpec seg;
    seg.start_s = 0;
    if (b <= 1.0) {
        seg.kind = LossSegmentSpec::Kind::Bernoulli;
        seg.p = p;
    } else {
        seg.kind = LossSegmentSpec::Kind::Ge;
        seg.p = p;
        seg.b = b;
    }
    cfg.channel.loss.push_back(seg);

    const MetricsLog log = run_scenario(cfg);
    auto samples = log.recovery_delay_samples_ms();
    // Same-tick recoveries would break the positive-support fit.
    for (auto& s : samples) s = std::max(s, 1e-3);
    return samples;
}

namespace {

// dR grid for one (p, b, n) entry: loss rates around the target plus
// redundancy-fraction fallbacks, all with a usable positive margin.
std::vector<double> margin_grid(double p, int n) {
    const double r = 1.0 / static_cast<double>(n);
    std::vector<double> cand{0.5 * p, 0.75 * p, p, 1.25 * p, 1.5 * p,
                             0.85 * r, 0.7 * r, 0.5 * r, 0.3 * r, 0.15 * r};
    std::vector<double> ps;
    for (double c : cand) {
        if (c < 0.002 || c > r - 0.004) continue;
        bool dup = false;
        for (double e : ps) dup = dup || std::abs(e - c) < 1e-4;
        if (!dup) ps.push_back(c);
    }
    std::sort(ps.begin(), ps.end());
    while (ps.size() > 6) ps.erase(ps.begin() + 1); // keep extremes, thin middle
    return ps;
}

} // namespace

CalibrationResult run_calibration(const CalibrationOptions& opt, std::ostream* progress) {
    struct Entry {
        double p, b;
        int n;
    };
    std::vector<Entry> entries;
    for (double p : opt.p_grid)
        for (double b : opt.b_grid)
            for (int n : opt.n_grid) entries.push_back({p, b, n});

    std::vector<std::vector<CalibrationPointDiag>> diags(entries.size());
    std::vector<CoefficientEntry> fitted(entries.size());
    std::vector<bool> have_entry(entries.size(), false);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long ei = 0; ei < static_cast<long long>(entries.size()); ++ei) {
        const Entry e = entries[ei];
        std::vector<GridPointFit> points;
        for (double p_used : margin_grid(e.p, e.n)) {
            CalibrationPointDiag d;
            d.p_target = e.p;
            d.b = e.b;
            d.n = e.n;
            d.p_used = p_used;
            d.delta_r = 1.0 / e.n - p_used;

            const std::uint64_t budget = std::min<std::uint64_t>(
                opt.max_packets,
                std::max<std::uint64_t>(20000, static_cast<std::uint64_t>(
                                                   opt.target_samples / p_used)));
            std::vector<double> samples;
            for (int s = 0; s < opt.seeds_per_point; ++s) {
                auto part = fixed_run_recovery_samples(
                    p_used, e.b, e.n, budget,
                    mix_seed(opt.seed, (static_cast<std::uint64_t>(ei) << 8) | s),
                    opt.rate_kbps, opt.packet_size);
                samples.insert(samples.end(), part.begin(), part.end());
            }
            d.samples = samples.size();
            if (samples.size() < opt.min_samples) {
                d.skipped = true;
                diags[ei].push_back(d);
                continue;
            }
            d.params = fit_weibull_mle(samples);
            d.ks = ks_distance(samples, d.params);
            diags[ei].push_back(d);
            points.push_back(GridPointFit{d.delta_r, d.params, d.ks, d.samples});
        }
        if (!points.empty()) {
            fitted[ei] = fit_entry(e.p, e.b, e.n, points);
            have_entry[ei] = true;
        }
    }

    CalibrationResult result;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (const auto& d : diags[i]) {
            result.points.push_back(d);
            if (d.skipped) ++result.skipped_points;
        }
        if (have_entry[i]) result.table.entries.push_back(fitted[i]);
        if (progress) {
            *progress << "entry p=" << entries[i].p << " b=" << entries[i].b
                      << " n=" << entries[i].n << (have_entry[i] ? "" : " SKIPPED");
            for (const auto& d : diags[i])
                if (!d.skipped)
                    *progress << "  [dR=" << d.delta_r << " ks=" << d.ks
                              << " m=" << d.samples << "]";
            *progress << "\n";
        }
    }
    return result;
}

} // namespace tetrysim
