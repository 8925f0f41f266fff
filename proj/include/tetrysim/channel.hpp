#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "tetrysim/packet.hpp"
#include "tetrysim/rng.hpp"

namespace tetrysim {

// Two-state Gilbert model parameterized by average loss rate p and mean burst
// size b. The BAD state always loses, GOOD never does; transitions are
// derived so the stationary loss probability is exactly p and BAD sojourns
// are geometric with mean b:
//   p_bg = 1/b,   p_gb = p / (b * (1 - p))
class GilbertElliott {
public:
    GilbertElliott(double p, double b, std::uint64_t seed);

    bool step(); // true = packet lost

    double p() const { return p_; }
    double b() const { return b_; }
    double p_good_to_bad() const { return p_gb_; }
    double p_bad_to_good() const { return p_bg_; }

    static void validate(double p, double b); // throws std::invalid_argument

private:
    double p_, b_, p_gb_, p_bg_;
    bool bad_ = false;
    Xoshiro256ss rng_;
};

class BernoulliLoss {
public:
    BernoulliLoss(double p, std::uint64_t seed);
    bool step();
    double p() const { return p_; }

private:
    double p_;
    Xoshiro256ss rng_;
};

// Piecewise-constant one-way propagation delay; the change applies to packets
// sent after the segment boundary.
struct DelaySchedule {
    struct Segment {
        Micros start = 0;
        Micros one_way = 0;
    };
    std::vector<Segment> segments;

    Micros delay_at(Micros send_ts) const;
    Micros max_delay() const;
    void validate() const; // start times strictly increasing
};

// Loss model switching on a time schedule; each segment owns an independent
// model instance seeded deterministically from the schedule seed.
class ScheduledLoss {
public:
    struct Segment {
        Micros start = 0;
        enum class Kind { None, GilbertElliott, Bernoulli } kind = Kind::None;
        double p = 0.0;
        double b = 1.0;
    };

    ScheduledLoss(std::vector<Segment> segments, std::uint64_t seed);
    bool lose(Micros send_ts);

private:
    struct Slot {
        Segment seg;
        std::unique_ptr<GilbertElliott> ge;
        std::unique_ptr<BernoulliLoss> bern;
    };
    std::vector<Slot> slots_;
};

} // namespace tetrysim
