#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tetrysim/channel.hpp"

using namespace tetrysim;

TEST_CASE("derived transition probabilities") {
    GilbertElliott ge(0.02, 2.0, 1);
    CHECK(ge.p_good_to_bad() == doctest::Approx(0.02 / (2.0 * 0.98)).epsilon(1e-12));
    CHECK(ge.p_good_to_bad() == doctest::Approx(0.0102040816).epsilon(1e-6));
    CHECK(ge.p_bad_to_good() == doctest::Approx(0.5));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS(GilbertElliott(1.0, 2.0, 1));
    CHECK_THROWS(GilbertElliott(-0.1, 2.0, 1));
    CHECK_THROWS(GilbertElliott(0.05, 0.5, 1));
    CHECK_THROWS(BernoulliLoss(1.5, 1));
    CHECK_NOTHROW(GilbertElliott(0.0, 3.0, 1));
}

TEST_CASE("p = 0 never loses") {
    GilbertElliott ge(0.0, 3.0, 7);
    for (int i = 0; i < 10000; ++i) CHECK_FALSE(ge.step());
}

TEST_CASE("long-run loss rate and burst size match the parameterization") {
    GilbertElliott ge(0.05, 3.0, 42);
    const int n = 1'000'000;
    long losses = 0, bursts = 0, burst_len_total = 0, cur = 0;
    for (int i = 0; i < n; ++i) {
        if (ge.step()) {
            ++losses;
            ++cur;
        } else if (cur > 0) {
            ++bursts;
            burst_len_total += cur;
            cur = 0;
        }
    }
    const double rate = static_cast<double>(losses) / n;
    CHECK(rate > 0.045);
    CHECK(rate < 0.055);
    const double mean_burst = static_cast<double>(burst_len_total) / bursts;
    CHECK(mean_burst > 2.7);
    CHECK(mean_burst < 3.3);
}

TEST_CASE("burst lengths are geometric with mean b") {
    // Frequency of length-L bursts should decay by (1 - 1/b) per step.
    GilbertElliott ge(0.03, 3.0, 11);
    std::vector<long> hist(40, 0);
    long cur = 0, bursts = 0;
    for (int i = 0; i < 2'000'000; ++i) {
        if (ge.step()) {
            ++cur;
        } else if (cur > 0) {
            if (cur < static_cast<long>(hist.size())) ++hist[cur];
            ++bursts;
            cur = 0;
        }
    }
    // Compare the empirical survival ratio at a few lengths.
    for (int len = 1; len <= 4; ++len) {
        const double ratio = static_cast<double>(hist[len + 1]) / hist[len];
        CHECK(ratio == doctest::Approx(2.0 / 3.0).epsilon(0.12));
    }
}

TEST_CASE("bernoulli rates") {
    BernoulliLoss zero(0.0, 3);
    BernoulliLoss one(1.0, 3);
    for (int i = 0; i < 1000; ++i) {
        CHECK_FALSE(zero.step());
        CHECK(one.step());
    }
    BernoulliLoss b(0.02, 5);
    long losses = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) losses += b.step();
    CHECK(std::abs(static_cast<double>(losses) / n - 0.02) < 0.003);
}

TEST_CASE("identical seeds give identical traces") {
    GilbertElliott a(0.05, 3.0, 99), b(0.05, 3.0, 99);
    for (int i = 0; i < 100000; ++i) CHECK(a.step() == b.step());
    GilbertElliott c(0.05, 3.0, 100);
    bool same = true;
    for (int i = 0; i < 1000; ++i) same = same && (a.step() == c.step());
    CHECK_FALSE(same);
}

TEST_CASE("delay schedule selects the active segment by send time") {
    DelaySchedule d;
    d.segments.push_back({0, ms(50)});
    d.segments.push_back({ms(20000), ms(70)});
    d.validate();
    CHECK(d.delay_at(ms(100)) == ms(50));
    // Sent at t = 25 s: the 70 ms segment applies.
    CHECK(d.delay_at(ms(25000)) == ms(70));
    CHECK(d.delay_at(ms(19999.0)) == ms(50));
    CHECK(d.delay_at(ms(20000)) == ms(70));
    CHECK(d.max_delay() == ms(70));

    DelaySchedule zero;
    zero.segments.push_back({0, 0});
    CHECK(zero.delay_at(12345) == 0);

    DelaySchedule bad;
    bad.segments.push_back({10, ms(50)});
    bad.segments.push_back({10, ms(60)});
    CHECK_THROWS(bad.validate());
}

TEST_CASE("scheduled loss switches models at segment boundaries") {
    std::vector<ScheduledLoss::Segment> segs;
    segs.push_back({0, ScheduledLoss::Segment::Kind::None, 0, 1});
    segs.push_back({ms(1000), ScheduledLoss::Segment::Kind::Bernoulli, 1.0, 1});
    ScheduledLoss loss(segs, 17);
    for (int i = 0; i < 100; ++i) CHECK_FALSE(loss.lose(ms(10.0 * i)));
    for (int i = 0; i < 100; ++i) CHECK(loss.lose(ms(1000.0 + i)));
}
