#include "tetrysim/adapt.hpp"

#include <cmath>
#include <stdexcept>

namespace tetrysim {

void ControllerConfig::validate() const {
    if (f <= 1.0) throw std::invalid_argument("controller: f must be > 1");
    if (!(min_th < max_th)) throw std::invalid_argument("controller: min_th must be < max_th");
    if (min_th < 0.0 || max_th > 1.0)
        throw std::invalid_argument("controller: thresholds must lie in [0, 1]");
    if (!(min_fec < max_fec)) throw std::invalid_argument("controller: min_fec must be < max_fec");
    if (ladder.size() < 2) throw std::invalid_argument("controller: ladder needs >= 2 rungs");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1])
            throw std::invalid_argument("controller: ladder must be strictly increasing");
    if (d_max <= 0 || ack_period <= 0)
        throw std::invalid_argument("controller: d_max and ack_period must be positive");
}

int ladder_n(double redundancy) {
    if (redundancy <= 0.0 || redundancy > 0.5)
        throw std::invalid_argument("ladder: redundancy must be in (0, 0.5]");
    return static_cast<int>(std::lround(1.0 / redundancy));
}

Decision decide(const DecideInputs& in, const ControllerConfig& cfg,
                const CalibrationTable* table) {
    const double delta_r = in.redundancy - in.p_hat;

    std::optional<WeibullParams> params;
    if (table && delta_r > 0.0)
        if (const auto* e = table->nearest(in.p_hat, in.b_hat, in.n))
            params = e->params_for(delta_r);

    // Model inapplicable at R <= p: mandatory increase.
    if (cfg.condition2 && delta_r <= 0.0) return Decision::Increase;

    if (in.repair_deficit > 0) {
        const Micros t_i = in.time_budget.value_or(0);
        if (cfg.condition1) {
            const double needed = static_cast<double>(in.repair_deficit) *
                                  static_cast<double>(in.repair_interval) * cfg.f;
            if (needed >= static_cast<double>(t_i)) return Decision::Increase;
        }
        if (cfg.condition2 && params &&
            weibull_cdf(to_ms(t_i), *params) < cfg.min_th)
            return Decision::Increase;
        return Decision::Hold;
    }

    if (params && weibull_cdf(to_ms(cfg.d_max), *params) >= cfg.max_th)
        return Decision::Decrease;
    return Decision::Hold;
}

Micros compute_t_i(std::uint32_t first_gap_seq, std::uint32_t prev_seq, Micros prev_arrival,
                   double packet_interval_us, Micros d_max, Micros now) {
    const double steps = static_cast<double>(first_gap_seq) - static_cast<double>(prev_seq);
    const Micros est_arrival = prev_arrival + static_cast<Micros>(std::llround(steps * packet_interval_us));
    return est_arrival + d_max - now;
}

Decision fec_decide(double r_fec, double p_hat, double min_fec, double max_fec) {
    if (r_fec < p_hat + min_fec) return Decision::Increase;
    if (r_fec > p_hat + max_fec) return Decision::Decrease;
    return Decision::Hold;
}

void LossEstimator::on_received() {
    p_ = (1.0 - alpha_) * p_;
    if (burst_ > 0) {
        b_ = (1.0 - alpha_) * b_ + alpha_ * static_cast<double>(burst_);
        burst_ = 0;
    }
}

void LossEstimator::on_lost() {
    p_ = (1.0 - alpha_) * p_ + alpha_;
    ++burst_;
}

RedundancyFeedback FeedbackScheduler::request(FeedbackDirection dir, Micros now) {
    if (!can_request(now)) throw std::logic_error("feedback: request while busy");
    RedundancyFeedback fb;
    fb.request_id = next_id_++;
    fb.direction = dir;
    outstanding_ = fb;
    return fb;
}

void FeedbackScheduler::on_confirmed(std::uint32_t applied_id, Micros now, Micros cooldown) {
    if (!outstanding_ || applied_id < outstanding_->request_id) return;
    outstanding_.reset();
    cooldown_until_ = now + cooldown;
}

LadderController::LadderController(std::vector<double> ladder, int initial_rung)
    : ladder_(std::move(ladder)) {
    if (ladder_.empty()) throw std::invalid_argument("ladder: empty");
    if (initial_rung < 0 || initial_rung >= static_cast<int>(ladder_.size()))
        throw std::invalid_argument("ladder: initial rung out of range");
    pos_.index = initial_rung;
}

std::optional<LadderController::Applied> LadderController::apply_feedback(
    const RedundancyFeedback& fb) {
    if (fb.request_id <= last_applied_id_) return std::nullopt; // already applied
    last_applied_id_ = fb.request_id;
    const int top = static_cast<int>(ladder_.size()) - 1;
    if (fb.direction == FeedbackDirection::Increase)
        pos_.index = std::min(pos_.index + 1, top);
    else
        pos_.index = std::max(pos_.index - 1, 0);
    return Applied{pos_.index, n(), k(), redundancy(), qp_offset()};
}

} // namespace tetrysim
