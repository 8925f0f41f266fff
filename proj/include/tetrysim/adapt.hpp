#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tetrysim/packet.hpp"
#include "tetrysim/recovery_model.hpp"

namespace tetrysim {

enum class Decision { Increase, Decrease, Hold };

struct ControllerConfig {
    double f = 2.0;        // proactivity coefficient, > 1
    double min_th = 0.9;   // increase gate on P[X < t_i]
    double max_th = 0.99;  // decrease gate on P[X < D_max]
    Micros d_max = 150'000;
    Micros ack_period = 10'000;
    bool condition1 = true; // reactive rule Z*I*f < t_i
    bool condition2 = true; // Weibull estimate rule (incl. the dR<=0 force)
    double min_fec = 0.20;
    double max_fec = 0.25;
    Micros cooldown = 0;    // 0: use one RTT estimate at confirmation time
    std::vector<double> ladder{0.10, 0.20, 1.0 / 3.0, 0.50};

    void validate() const; // throws std::invalid_argument
};

// n = k+1 for a ladder redundancy ratio (1/R rounded to the nearest integer).
int ladder_n(double redundancy);

// Position on the redundancy ladder; one rung step changes the video
// quantization-parameter offset by exactly one.
struct LadderPosition {
    int index = 0;
    int qp_offset() const { return index; }
};

struct DecideInputs {
    std::size_t repair_deficit = 0;          // Z
    std::optional<Micros> time_budget;       // t_i; set whenever a gap exists
    Micros repair_interval = 0;              // I = n*T at the current rung
    double p_hat = 0.0;
    double b_hat = 1.0;
    double redundancy = 0.10;                // current R
    int n = 10;                              // current ladder n
};

// Receiver-side decision rule. Increase when the reactive budget Z*I*f >= t_i
// or the Weibull estimate P[X < t_i] < min_th (with a pending gap), or when
// dR <= 0 (model inapplicable). Decrease only when Z == 0 and
// P[X < D_max] >= max_th. Increase wins over decrease.
Decision decide(const DecideInputs& in, const ControllerConfig& cfg,
                const CalibrationTable* table);

// Remaining budget to recover the first gap: the gap's nominal arrival is
// extrapolated from the last in-order received packet, T steps per sequence
// number; the budget is its deadline minus now.
Micros compute_t_i(std::uint32_t first_gap_seq, std::uint32_t prev_seq, Micros prev_arrival,
                   double packet_interval_us, Micros d_max, Micros now);

// Block-FEC rule: increase when R < p + min_fec, decrease when R > p + max_fec.
Decision fec_decide(double r_fec, double p_hat, double min_fec, double max_fec);

// EWMA loss-rate and mean-burst estimator over the receiver's per-position
// source observations (lost/received in sequence order).
class LossEstimator {
public:
    explicit LossEstimator(double alpha = 0.05) : alpha_(alpha) {}
    void on_received();
    void on_lost();
    double p_hat() const { return p_; }
    double b_hat() const { return b_; }

private:
    double alpha_;
    double p_ = 0.0;
    double b_ = 1.0;
    std::uint32_t burst_ = 0;
};

// Receiver-side feedback lifecycle: at most one outstanding request, echoed
// in every ACK until the sender confirms it (applied id in repair headers),
// then a cool-down before the next request.
class FeedbackScheduler {
public:
    std::optional<RedundancyFeedback> pending() const { return outstanding_; }
    bool can_request(Micros now) const { return !outstanding_ && now >= cooldown_until_; }
    RedundancyFeedback request(FeedbackDirection dir, Micros now);
    // Confirmation from the sender; cooldown is the quiet period to apply.
    void on_confirmed(std::uint32_t applied_id, Micros now, Micros cooldown);

private:
    std::optional<RedundancyFeedback> outstanding_;
    std::uint32_t next_id_ = 1;
    Micros cooldown_until_ = 0;
};

// Sender-side ladder state: applies each request id at most once, saturating
// at both ends of the ladder.
class LadderController {
public:
    struct Applied {
        int rung;
        int n;
        int k;
        double redundancy;
        int qp_offset;
    };

    LadderController(std::vector<double> ladder, int initial_rung);

    // nullopt for duplicate request ids; saturated moves still count as
    // applied (the id is consumed and confirmed).
    std::optional<Applied> apply_feedback(const RedundancyFeedback& fb);

    int rung() const { return pos_.index; }
    int n() const { return ladder_n(ladder_[pos_.index]); }
    int k() const { return n() - 1; }
    double redundancy() const { return ladder_[pos_.index]; }
    int qp_offset() const { return pos_.qp_offset(); }
    std::uint32_t last_applied_id() const { return last_applied_id_; }

private:
    std::vector<double> ladder_;
    LadderPosition pos_;
    std::uint32_t last_applied_id_ = 0;
};

} // namespace tetrysim
