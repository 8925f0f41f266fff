#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tetrysim/adapt.hpp"
#include "tetrysim/rng.hpp"

using namespace tetrysim;

namespace {

// A table whose entries give lambda = 20/dR ms, kappa = 1: recovery within
// 150 ms has probability 1 - exp(-7.5 dR).
CalibrationTable toy_table() {
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
    return t;
}

ControllerConfig base_cfg() {
    ControllerConfig c;
    c.f = 2.0;
    c.min_th = 0.9;
    c.max_th = 0.99;
    return c;
}

} // namespace

TEST_CASE("config validation") {
    auto c = base_cfg();
    CHECK_NOTHROW(c.validate());
    c.min_th = 0.995;
    CHECK_THROWS(c.validate()); // min_th must stay below max_th
    c = base_cfg();
    c.f = 1.0;
    CHECK_THROWS(c.validate());
    c = base_cfg();
    c.ladder = {0.2, 0.1};
    CHECK_THROWS(c.validate());
}

TEST_CASE("ladder n mapping") {
    CHECK(ladder_n(0.10) == 10);
    CHECK(ladder_n(0.20) == 5);
    CHECK(ladder_n(1.0 / 3.0) == 3);
    CHECK(ladder_n(0.50) == 2);
}

TEST_CASE("reactive rule: budget exhausted forces an increase") {
    const auto table = toy_table();
    auto cfg = base_cfg();
    DecideInputs in;
    in.repair_deficit = 2;
    in.repair_interval = ms(50);
    in.time_budget = ms(150);
    in.p_hat = 0.01;
    in.b_hat = 3;
    in.redundancy = 0.2;
    in.n = 5;
    // 2 * 50 * 2 = 200 ms >= 150 ms.
    CHECK(decide(in, cfg, &table) == Decision::Increase);
    // With f large enough head room the rule passes and the Weibull gate
    // holds too (P[X < 150] at dR=0.19 is ~0.76 < 0.9 -> still increase).
    in.repair_interval = ms(10);
    CHECK(decide(in, cfg, &table) == Decision::Increase);
    // Condition 2 disabled: only the reactive rule counts.
    cfg.condition2 = false;
    CHECK(decide(in, cfg, &table) == Decision::Hold);
}

TEST_CASE("expired deadline (negative budget) forces an increase") {
    const auto table = toy_table();
    const auto cfg = base_cfg();
    DecideInputs in;
    in.repair_deficit = 1;
    in.repair_interval = ms(10);
    in.time_budget = ms(-5);
    in.p_hat = 0.01;
    in.redundancy = 0.2;
    in.n = 5;
    CHECK(decide(in, cfg, &table) == Decision::Increase);
}

TEST_CASE("decrease needs both an empty deficit and a confident model") {
    const auto table = toy_table();
    const auto cfg = base_cfg();
    DecideInputs in;
    in.repair_deficit = 0;
    in.p_hat = 0.01;
    in.b_hat = 3;
    // dR = 0.49: P[X < 150] = 1 - exp(-7.5 * 0.49) = 0.975 < 0.99 -> HOLD.
    in.redundancy = 0.50;
    in.n = 2;
    CHECK(decide(in, cfg, &table) == Decision::Hold);
    // dR = 0.99 - not reachable on the ladder, but the gate passes: use a
    // sharper toy entry instead by shrinking p_hat and... widen via n = 2 at
    // tiny p with bigger margin: P = 1 - exp(-7.5 * 0.4999) ~ 0.9765 -> HOLD;
    // prove the Decrease path with a longer deadline.
    auto cfg2 = cfg;
    cfg2.d_max = ms(700); // P = 1 - exp(-35 * 0.4999) ~ 1.0 >= 0.99
    CHECK(decide(in, cfg2, &table) == Decision::Decrease);
    // Any pending deficit blocks the decrease.
    DecideInputs busy = in;
    busy.repair_deficit = 1;
    busy.time_budget = ms(1000000);
    CHECK(decide(busy, cfg2, &table) != Decision::Decrease);
}

TEST_CASE("margin at or below zero forces an increase while condition 2 is on") {
    const auto table = toy_table();
    auto cfg = base_cfg();
    DecideInputs in;
    in.repair_deficit = 0;
    in.p_hat = 0.12;
    in.redundancy = 0.10;
    in.n = 10;
    CHECK(decide(in, cfg, &table) == Decision::Increase);
    // With condition 2 disabled the model is out of the loop entirely; an
    // inapplicable margin then only blocks decreases.
    cfg.condition2 = false;
    CHECK(decide(in, cfg, &table) == Decision::Hold);
}

TEST_CASE("decision grid is deterministic") {
    const auto table = toy_table();
    const auto cfg = base_cfg();
    Xoshiro256ss rng(404);
    for (int i = 0; i < 200; ++i) {
        DecideInputs in;
        in.repair_deficit = rng.next_below(4);
        if (in.repair_deficit > 0)
            in.time_budget = ms(static_cast<double>(rng.next_below(300)) - 50.0);
        in.repair_interval = ms(static_cast<double>(rng.next_below(60)) + 1.0);
        in.p_hat = rng.next_double() * 0.12;
        in.b_hat = 1.0 + rng.next_double() * 2.0;
        const int rung = static_cast<int>(rng.next_below(4));
        in.redundancy = cfg.ladder[rung];
        in.n = ladder_n(in.redundancy);
        const auto d1 = decide(in, cfg, &table);
        const auto d2 = decide(in, cfg, &table);
        CHECK(d1 == d2);
    }
}

TEST_CASE("remaining-budget arithmetic") {
    // Last in-order packet P2 arrived at 100 ms; gap at P3; T = 2 ms;
    // deadline 150 ms; now 110 ms: estimated arrival 102, budget 142 ms.
    const Micros t_i = compute_t_i(3, 2, ms(100), 2000.0, ms(150), ms(110));
    CHECK(t_i == ms(142));
    // Past the deadline the budget goes negative.
    CHECK(compute_t_i(3, 2, ms(100), 2000.0, ms(150), ms(300)) < 0);
}

TEST_CASE("fec threshold rule") {
    CHECK(fec_decide(0.20, 0.03, 0.20, 0.25) == Decision::Increase);
    CHECK(fec_decide(1.0 / 3.0, 0.02, 0.20, 0.25) == Decision::Decrease);
    CHECK(fec_decide(1.0 / 3.0, 0.10, 0.20, 0.25) == Decision::Hold);
}

TEST_CASE("ladder moves saturate and are idempotent per request id") {
    LadderController lad({0.10, 0.20, 1.0 / 3.0, 0.50}, 1);
    CHECK(lad.redundancy() == doctest::Approx(0.20));

    auto a = lad.apply_feedback({1, FeedbackDirection::Increase});
    REQUIRE(a.has_value());
    CHECK(a->rung == 2);
    CHECK(a->redundancy == doctest::Approx(1.0 / 3.0));
    CHECK(a->k == 2);
    CHECK(a->qp_offset == 2);

    // Same request id again: no-op.
    CHECK_FALSE(lad.apply_feedback({1, FeedbackDirection::Increase}).has_value());
    CHECK(lad.rung() == 2);

    // Saturating at the bottom.
    LadderController low({0.10, 0.20, 1.0 / 3.0, 0.50}, 0);
    const auto d = low.apply_feedback({5, FeedbackDirection::Decrease});
    REQUIRE(d.has_value());
    CHECK(d->rung == 0);
    CHECK(d->redundancy == doctest::Approx(0.10));

    // Saturating at the top, and qp offsets move one per rung.
    LadderController high({0.10, 0.20, 1.0 / 3.0, 0.50}, 3);
    const auto u = high.apply_feedback({9, FeedbackDirection::Increase});
    REQUIRE(u.has_value());
    CHECK(u->rung == 3);
    CHECK(u->qp_offset == 3);
}

TEST_CASE("sustained inapplicable margin tops out within ladder-size-1 epochs") {
    const auto table = toy_table();
    const auto cfg = base_cfg();
    LadderController lad({0.10, 0.20, 1.0 / 3.0, 0.50}, 0);
    std::uint32_t next_id = 1;
    int epochs = 0;
    while (lad.rung() < 3) {
        DecideInputs in;
        in.repair_deficit = 0;
        in.p_hat = 0.60; // heavier than every rung
        in.redundancy = lad.redundancy();
        in.n = lad.n();
        REQUIRE(decide(in, cfg, &table) == Decision::Increase);
        lad.apply_feedback({next_id++, FeedbackDirection::Increase});
        ++epochs;
        REQUIRE(epochs <= 3);
    }
    CHECK(epochs == 3);
}

TEST_CASE("feedback persists across arbitrary ack loss until confirmed") {
    // The receiver echoes the outstanding request in every ACK; losing any
    // strict subset of those ACKs never loses the request.
    Xoshiro256ss rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        FeedbackScheduler fs;
        const auto fb = fs.request(FeedbackDirection::Increase, 0);
        LadderController lad({0.10, 0.20, 1.0 / 3.0, 0.50}, 0);
        bool applied = false;
        const int acks = 1 + static_cast<int>(rng.next_below(20));
        const std::uint32_t surviving = rng.next_below(static_cast<std::uint32_t>(acks));
        for (int a = 0; a < acks; ++a) {
            if (applied) {
                // Confirmed: the receiver stops echoing it.
                CHECK_FALSE(fs.pending().has_value());
                continue;
            }
            REQUIRE(fs.pending().has_value()); // still echoed until confirmed
            if (static_cast<std::uint32_t>(a) != surviving) continue; // this ACK lost
            if (lad.apply_feedback(*fs.pending())) applied = true;
            fs.on_confirmed(fb.request_id, ms(10.0 * a), ms(100));
        }
        CHECK(applied);
        CHECK_FALSE(fs.pending().has_value());
        CHECK(lad.rung() == 1);
    }
}

TEST_CASE("one outstanding request at a time, cooldown after confirmation") {
    FeedbackScheduler fs;
    CHECK(fs.can_request(0));
    fs.request(FeedbackDirection::Increase, 0);
    CHECK_FALSE(fs.can_request(ms(1000))); // busy until confirmed
    fs.on_confirmed(1, ms(5), ms(100));
    CHECK_FALSE(fs.can_request(ms(50)));  // cooling down
    CHECK(fs.can_request(ms(105)));
    // Confirmations for unknown/old ids are ignored.
    fs.request(FeedbackDirection::Decrease, ms(110));
    fs.on_confirmed(1, ms(115), ms(100));
    CHECK(fs.pending().has_value());
}

TEST_CASE("loss estimator tracks rate and burst length") {
    LossEstimator est(0.05);
    CHECK(est.p_hat() == 0.0);
    CHECK(est.b_hat() == 1.0);
    // 2% loss in isolated singles: p_hat settles near 0.02, b_hat near 1.
    for (int i = 0; i < 20000; ++i) {
        if (i % 50 == 0) est.on_lost();
        else est.on_received();
    }
    CHECK(est.p_hat() == doctest::Approx(0.02).epsilon(0.5));
    CHECK(est.b_hat() == doctest::Approx(1.0).epsilon(0.05));
    // Bursts of 3 move the burst estimate.
    for (int i = 0; i < 20000; ++i) {
        if (i % 60 < 3) est.on_lost();
        else est.on_received();
    }
    CHECK(est.b_hat() == doctest::Approx(3.0).epsilon(0.1));
}
