#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "tetrysim/recovery_model.hpp"
#include "tetrysim/simcore.hpp"

using namespace tetrysim;

namespace {

// Toy recovery-delay table (lambda = 20/dR ms, kappa = 1) for adaptive runs
// that must not depend on the shipped calibration data.
std::filesystem::path write_toy_table() {
    CalibrationTable t;
    for (const double p : {0.01, 0.02, 0.03, 0.05, 0.10})
        for (const double b : {1.0, 2.0, 3.0})
            for (const int n : {10, 5, 3, 2}) {
                CoefficientEntry e;
                e.p = p;
                e.b = b;
                e.n = n;
                e.a_lambda = 20.0;
                e.b_lambda = 1.0;
                e.a_kappa = 0.0;
                e.b_kappa = 1.0;
                t.entries.push_back(e);
            }
    const auto path = std::filesystem::temp_directory_path() / "tetrysim_toy_table.txt";
    t.save(path);
    return path;
}

ScenarioConfig lossless_cbr(std::uint64_t packets) {
    auto cfg = preset("cbr");
    cfg.codec.adaptive = false;
    cfg.codec.fixed_n = 10;
    cfg.traffic.packets = packets;
    cfg.apply_override("channel.loss=0 none");
    return cfg;
}

} // namespace

TEST_CASE("lossless channel delivers everything on time") {
    const auto log = run_scenario(lossless_cbr(2000));
    CHECK(log.sources_emitted == 2000);
    CHECK(log.ilr() == 0.0);
    CHECK(log.on_time_rate() == 1.0);
    CHECK(log.degraded_intervals() == 0);
    CHECK(log.recovery_delay_samples_ms().empty()); // direct deliveries excluded
    for (const auto& p : log.packets) {
        CHECK(p.delivered);
        CHECK(p.delivery_ts == p.send_ts + ms(50));
    }
}

TEST_CASE("conservation: every emitted source is scored exactly once") {
    auto cfg = lossless_cbr(3000);
    cfg.apply_override("channel.loss=0 ge 0.05 3");
    const auto log = run_scenario(cfg);
    CHECK(log.packets.size() == log.sources_emitted);
    std::uint64_t on_time = 0, late = 0, never = 0;
    for (const auto& p : log.packets) {
        if (!p.delivered) ++never;
        else if (p.on_time) ++on_time;
        else ++late;
    }
    CHECK(on_time + late + never == log.sources_emitted);
    CHECK(log.ilr() == doctest::Approx(static_cast<double>(late + never) / 3000.0));
}

TEST_CASE("identical scenario and seeds give identical logs") {
    auto cfg = lossless_cbr(2000);
    cfg.apply_override("channel.loss=0 ge 0.03 2");
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    CHECK(a.digest() == b.digest());
    cfg.seed = 2;
    const auto c = run_scenario(cfg);
    CHECK(a.digest() != c.digest());
}

TEST_CASE("golden trace: scripted two-packet-window exchange") {
    const auto log = run_scenario(preset("fig1"));

    // P2 recovered exactly when the first repair arrives (send 2 ms + 5 ms).
    REQUIRE(log.packets.size() == 20);
    const auto& p2 = log.packets[1];
    CHECK(p2.delivered);
    CHECK(p2.recovered);
    CHECK(p2.delivery_ts == ms(7));

    // P3 and P4 come back together at the fourth repair (send 14 ms + 5 ms),
    // after the third repair alone could not determine them.
    const auto& p3 = log.packets[2];
    const auto& p4 = log.packets[3];
    CHECK(p3.recovered);
    CHECK(p4.recovered);
    CHECK(p3.delivery_ts == ms(19));
    CHECK(p4.delivery_ts == ms(19));

    // Exact decode event sequence.
    std::vector<std::pair<Micros, std::string>> decodes;
    for (const auto& e : log.events)
        if (e.kind == "decode") decodes.emplace_back(e.t, e.detail);
    REQUIRE(decodes.size() == 2);
    CHECK(decodes[0].first == ms(7));
    CHECK(decodes[0].second == "R(1..2) -> 2");
    CHECK(decodes[1].first == ms(19));
    CHECK(decodes[1].second == "R(1..8) -> 3 4");

    // The second ACK (cum 8, received at 25 ms) restarts combinations at P9.
    std::vector<std::pair<Micros, std::string>> windows;
    for (const auto& e : log.events)
        if (e.kind == "window") windows.emplace_back(e.t, e.detail);
    REQUIRE(windows.size() >= 2);
    CHECK(windows[0].second == "1");
    CHECK(windows[1].second == "9");
    CHECK(windows[1].first == ms(26));

    CHECK(log.ilr() == 0.0);
}

TEST_CASE("csv outputs land on disk with the documented headers") {
    const auto log = run_scenario(preset("fig1"));
    const auto dir = std::filesystem::temp_directory_path() / "tetrysim_csv_test";
    log.write_csvs(dir);
    for (const auto& [file, header] :
         {std::pair<const char*, const char*>{"packets.csv", "seq,send_ts_ms,delivery_ts_ms,on_time,recovered"},
          {"timeline.csv", "t_ms,rung,redundancy,kbps"},
          {"events.csv", "t_ms,event,detail"}}) {
        std::ifstream f(dir / file);
        REQUIRE(f.good());
        std::string line;
        std::getline(f, line);
        CHECK(line == header);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("sender bandwidth matches packet-count arithmetic") {
    // 1900 kb/s payload at fixed 10% redundancy: per 9 sources (515 wire
    // bytes each) one 534-byte repair rides along.
    const auto log = run_scenario(lossless_cbr(9000));
    const double expected = 1900.0 * (9.0 * 515.0 + 534.0) / (9.0 * 500.0);
    CHECK(log.mean_kbps() == doctest::Approx(expected).epsilon(0.01));
    CHECK(log.sent_redundancy() == doctest::Approx(0.10).epsilon(0.01));
    CHECK(log.mean_redundancy() == doctest::Approx(0.10));
}

TEST_CASE("higher fixed redundancy shifts recovery delays down") {
    auto base = preset("cbr");
    base.codec.adaptive = false;
    base.traffic.packets = 12000;
    base.apply_override("channel.loss=0 ge 0.05 2");

    auto cfg5 = base;
    cfg5.codec.fixed_n = 5;
    auto cfg2 = base;
    cfg2.codec.fixed_n = 2;

    auto s5 = run_scenario(cfg5).recovery_delay_samples_ms();
    auto s2 = run_scenario(cfg2).recovery_delay_samples_ms();
    REQUIRE(s5.size() > 100);
    REQUIRE(s2.size() > 100);
    std::sort(s5.begin(), s5.end());
    std::sort(s2.begin(), s2.end());
    CHECK(s2[s2.size() / 2] < s5[s5.size() / 2]);
}

TEST_CASE("recovered packets measure delay from their nominal arrival") {
    const auto log = run_scenario(preset("fig1"));
    const auto samples = log.recovery_delay_samples_ms();
    // P2: recovered at 7 ms, nominal arrival 2 + 5 = 7 -> 0 ms.
    // P3: recovered at 19, nominal 4 + 5 = 9 -> 10 ms. P4: 19 - 11 = 8 ms.
    REQUIRE(samples.size() == 3);
    CHECK(samples[0] == doctest::Approx(0.0));
    CHECK(samples[1] == doctest::Approx(10.0));
    CHECK(samples[2] == doctest::Approx(8.0));
}

TEST_CASE("adaptive controller reacts and stays deterministic") {
    const auto table = write_toy_table();
    auto cfg = preset("cbr");
    cfg.traffic.packets = 8000;
    cfg.controller.calibration = table.string();
    cfg.apply_override("channel.loss=0 ge 0.05 3");

    const auto log = run_scenario(cfg);
    CHECK(log.rung_changes.size() > 1); // the ladder moved
    bool saw_request = false, saw_applied = false;
    for (const auto& e : log.events) {
        saw_request = saw_request || e.kind == "request";
        saw_applied = saw_applied || e.kind == "applied";
    }
    CHECK(saw_request);
    CHECK(saw_applied);
    CHECK(log.mean_redundancy() > 0.10); // pressure pushed it off the floor
    CHECK(run_scenario(cfg).digest() == log.digest());

    // Adaptation beats the fixed floor under the same channel.
    auto fixed = cfg;
    fixed.codec.adaptive = false;
    fixed.codec.fixed_n = 10;
    const auto flog = run_scenario(fixed);
    CHECK(log.ilr() <= flog.ilr());
    std::filesystem::remove(table);
}

TEST_CASE("fec scheme round trip through the simulator") {
    auto cfg = preset("cbr");
    cfg.codec.scheme = CodecSpec::Scheme::Fec;
    cfg.codec.adaptive = false;
    cfg.codec.fec_k = 9;
    cfg.codec.fec_n = 10;
    cfg.traffic.packets = 5000;
    cfg.apply_override("channel.loss=0 ge 0.01 1");
    const auto log = run_scenario(cfg);
    CHECK(log.sources_emitted == 5000);
    CHECK(log.sent_redundancy() == doctest::Approx(0.10).epsilon(0.02));
    // Isolated losses under FEC(9,10) are mostly recovered in time.
    CHECK(log.ilr() < 0.01);
    bool any_recovered = false;
    for (const auto& p : log.packets) any_recovered = any_recovered || p.recovered;
    CHECK(any_recovered);
}

TEST_CASE("no-protection scheme has no repairs and bernoulli-rate residual loss") {
    auto cfg = preset("cbr");
    cfg.codec.scheme = CodecSpec::Scheme::None;
    cfg.traffic.packets = 10000;
    cfg.apply_override("channel.loss=0 bernoulli 0.02");
    const auto log = run_scenario(cfg);
    CHECK(log.repairs_emitted == 0);
    CHECK(log.ilr() == doctest::Approx(0.02).epsilon(0.25));
}
