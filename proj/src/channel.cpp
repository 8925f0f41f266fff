#include "tetrysim/channel.hpp"

#include <algorithm>
#include <stdexcept>

namespace tetrysim {

void GilbertElliott::validate(double p, double b) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("gilbert-elliott: p must be in [0, 1)");
    if (b < 1.0) throw std::invalid_argument("gilbert-elliott: mean burst size must be >= 1");
    const double p_gb = p / (b * (1.0 - p));
    if (p_gb > 1.0)
        throw std::invalid_argument("gilbert-elliott: derived good->bad probability exceeds 1");
}

GilbertElliott::GilbertElliott(double p, double b, std::uint64_t seed)
    : p_(p), b_(b), p_gb_(p / (b * (1.0 - p))), p_bg_(1.0 / b), rng_(seed) {
    validate(p, b);
}

bool GilbertElliott::step() {
    const bool lost = bad_;
    if (bad_) {
        if (rng_.next_double() < p_bg_) bad_ = false;
    } else {
        if (rng_.next_double() < p_gb_) bad_ = true;
    }
    return lost;
}

BernoulliLoss::BernoulliLoss(double p, std::uint64_t seed) : p_(p), rng_(seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p must be in [0, 1]");
}

bool BernoulliLoss::step() { return rng_.next_double() < p_; }

Micros DelaySchedule::delay_at(Micros send_ts) const {
    Micros d = segments.empty() ? 0 : segments.front().one_way;
    for (const auto& s : segments) {
        if (s.start <= send_ts) d = s.one_way;
        else break;
    }
    return d;
}

Micros DelaySchedule::max_delay() const {
    Micros d = 0;
    for (const auto& s : segments) d = std::max(d, s.one_way);
    return d;
}

void DelaySchedule::validate() const {
    if (segments.empty()) throw std::invalid_argument("delay schedule: needs at least one segment");
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].start <= segments[i - 1].start)
            throw std::invalid_argument("delay schedule: segment starts must strictly increase");
}

ScheduledLoss::ScheduledLoss(std::vector<Segment> segments, std::uint64_t seed) {
    if (segments.empty()) segments.push_back(Segment{});
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].start <= segments[i - 1].start)
            throw std::invalid_argument("loss schedule: segment starts must strictly increase");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Slot slot;
        slot.seg = segments[i];
        const std::uint64_t s = mix_seed(seed, i + 1);
        switch (segments[i].kind) {
        case Segment::Kind::None: break;
        case Segment::Kind::GilbertElliott:
            slot.ge = std::make_unique<GilbertElliott>(segments[i].p, segments[i].b, s);
            break;
        case Segment::Kind::Bernoulli:
            slot.bern = std::make_unique<BernoulliLoss>(segments[i].p, s);
            break;
        }
        slots_.push_back(std::move(slot));
    }
}

bool ScheduledLoss::lose(Micros send_ts) {
    Slot* active = &slots_.front();
    for (auto& s : slots_) {
        if (s.seg.start <= send_ts) active = &s;
        else break;
    }
    if (active->ge) return active->ge->step();
    if (active->bern) return active->bern->step();
    return false;
}

} // namespace tetrysim
