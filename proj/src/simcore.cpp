#include "tetrysim/simcore.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <queue>
#include <sstream>

#include "tetrysim/adapt.hpp"
#include "tetrysim/fec.hpp"
#include "tetrysim/rng.hpp"
#include "tetrysim/tetrys.hpp"
#include "tetrysim/traffic.hpp"

namespace tetrysim {

// ---------------------------------------------------------------------------
// MetricsLog

double MetricsLog::ilr() const { return ilr_between(first_send, last_send + 1); }

double MetricsLog::ilr_between(Micros from, Micros to) const {
    std::uint64_t total = 0, late = 0;
    for (const auto& p : packets) {
        if (p.send_ts < from || p.send_ts >= to) continue;
        ++total;
        if (!(p.delivered && p.on_time)) ++late;
    }
    return total ? static_cast<double>(late) / static_cast<double>(total) : 0.0;
}

double MetricsLog::on_time_rate() const { return 1.0 - ilr(); }

double MetricsLog::mean_redundancy() const {
    return mean_redundancy_between(first_send, last_send);
}

double MetricsLog::mean_redundancy_between(Micros from, Micros to) const {
    if (rung_changes.empty() || to <= from) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < rung_changes.size(); ++i) {
        const Micros seg_start = std::max(from, rung_changes[i].t);
        const Micros seg_end =
            std::min(to, i + 1 < rung_changes.size() ? rung_changes[i + 1].t : to);
        if (seg_end > seg_start)
            acc += rung_changes[i].redundancy * static_cast<double>(seg_end - seg_start);
    }
    return acc / static_cast<double>(to - from);
}

double MetricsLog::sent_redundancy() const {
    const std::uint64_t total = sources_emitted + repairs_emitted;
    return total ? static_cast<double>(repairs_emitted) / static_cast<double>(total) : 0.0;
}

double MetricsLog::mean_kbps() const { return mean_kbps_between(first_send, last_send + 1); }

double MetricsLog::mean_kbps_between(Micros from, Micros to) const {
    if (to <= from) return 0.0;
    std::uint64_t bytes = 0;
    for (const auto& [t, b] : sent_bytes)
        if (t >= from && t < to) bytes += b;
    return static_cast<double>(bytes) * 8000.0 / static_cast<double>(to - from);
}

std::vector<std::pair<Micros, double>> MetricsLog::bandwidth_timeline(Micros bin) const {
    std::vector<std::pair<Micros, double>> out;
    if (sent_bytes.empty() || bin <= 0) return out;
    const Micros start = first_send;
    const Micros end = last_send + 1;
    const std::size_t nbins = static_cast<std::size_t>((end - start + bin - 1) / bin);
    std::vector<std::uint64_t> acc(nbins, 0);
    for (const auto& [t, b] : sent_bytes) {
        if (t < start || t >= end) continue;
        acc[static_cast<std::size_t>((t - start) / bin)] += b;
    }
    out.reserve(nbins);
    for (std::size_t i = 0; i < nbins; ++i)
        out.emplace_back(start + static_cast<Micros>(i) * bin,
                         static_cast<double>(acc[i]) * 8000.0 / static_cast<double>(bin));
    return out;
}

std::vector<double> MetricsLog::recovery_delay_samples_ms() const {
    std::vector<double> out;
    for (const auto& p : packets) {
        if (!p.delivered || !p.recovered) continue;
        const Micros nominal = p.send_ts + delay.delay_at(p.send_ts);
        out.push_back(to_ms(p.delivery_ts - nominal));
    }
    return out;
}

std::uint64_t MetricsLog::degraded_intervals() const {
    std::uint64_t runs = 0;
    bool in_run = false;
    for (const auto& p : packets) {
        const bool bad = !(p.delivered && p.on_time);
        if (bad && !in_run) ++runs;
        in_run = bad;
    }
    return runs;
}

std::uint64_t MetricsLog::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (i * 8)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : packets) {
        mix(p.seq);
        mix(static_cast<std::uint64_t>(p.send_ts));
        mix(static_cast<std::uint64_t>(p.delivery_ts));
        mix((p.delivered ? 1 : 0) | (p.on_time ? 2 : 0) | (p.recovered ? 4 : 0));
    }
    for (const auto& [t, b] : sent_bytes) {
        mix(static_cast<std::uint64_t>(t));
        mix(b);
    }
    for (const auto& rc : rung_changes) {
        mix(static_cast<std::uint64_t>(rc.t));
        mix(static_cast<std::uint64_t>(rc.rung));
    }
    mix(sender_bytes);
    mix(ack_bytes);
    return h;
}

std::string MetricsLog::summary_line() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "ilr=%.6f on_time=%.6f mean_redundancy=%.4f sent_redundancy=%.4f "
                  "mean_kbps=%.1f degraded_intervals=%llu",
                  ilr(), on_time_rate(), mean_redundancy(), sent_redundancy(), mean_kbps(),
                  static_cast<unsigned long long>(degraded_intervals()));
    return buf;
}

void MetricsLog::write_csvs(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream f(dir / "packets.csv", std::ios::binary);
        f << "seq,send_ts_ms,delivery_ts_ms,on_time,recovered\n";
        char buf[128];
        for (const auto& p : packets) {
            if (p.delivered)
                std::snprintf(buf, sizeof buf, "%u,%.3f,%.3f,%d,%d\n", p.seq, to_ms(p.send_ts),
                              to_ms(p.delivery_ts), p.on_time ? 1 : 0, p.recovered ? 1 : 0);
            else
                std::snprintf(buf, sizeof buf, "%u,%.3f,,0,0\n", p.seq, to_ms(p.send_ts));
            f << buf;
        }
    }
    {
        std::ofstream f(dir / "timeline.csv", std::ios::binary);
        f << "t_ms,rung,redundancy,kbps\n";
        const Micros bin = 100'000;
        const auto bw = bandwidth_timeline(bin);
        std::size_t rc = 0;
        char buf[128];
        for (const auto& [t, kbps] : bw) {
            while (rc + 1 < rung_changes.size() && rung_changes[rc + 1].t <= t) ++rc;
            const int rung = rung_changes.empty() ? 0 : rung_changes[rc].rung;
            const double red = rung_changes.empty() ? 0.0 : rung_changes[rc].redundancy;
            std::snprintf(buf, sizeof buf, "%.1f,%d,%.4f,%.1f\n", to_ms(t), rung, red, kbps);
            f << buf;
        }
    }
    {
        std::ofstream f(dir / "events.csv", std::ios::binary);
        f << "t_ms,event,detail\n";
        char buf[64];
        for (const auto& e : events) {
            std::snprintf(buf, sizeof buf, "%.3f,", to_ms(e.t));
            f << buf << e.kind << "," << e.detail << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

enum class EvKind : std::uint8_t { EmitSource, FwdArrival, FbArrival, AckTick };

struct Ev {
    Micros t;
    std::uint64_t order; // stable tie-break
    EvKind kind;
    Packet pkt; // for arrivals
};

struct EvCmp {
    bool operator()(const Ev& a, const Ev& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.order > b.order;
    }
};

// Scripted drop list (golden traces): nth source / repair / ack, 1-based.
struct DropScript {
    std::uint64_t src_seen = 0, rep_seen = 0, ack_seen = 0;
    std::vector<DropRuleSpec> rules;

    bool should_drop(const Packet& p) {
        std::uint64_t ordinal = 0;
        DropRuleSpec::Kind kind;
        if (std::holds_alternative<SourcePacket>(p)) {
            kind = DropRuleSpec::Kind::Source;
            ordinal = ++src_seen;
        } else if (std::holds_alternative<RepairPacket>(p)) {
            kind = DropRuleSpec::Kind::Repair;
            ordinal = ++rep_seen;
        } else {
            kind = DropRuleSpec::Kind::Ack;
            ordinal = ++ack_seen;
        }
        for (const auto& r : rules)
            if (r.kind == kind && r.ordinal == ordinal) return true;
        return false;
    }
};

struct Simulation {
    const ScenarioConfig& cfg;
    ControllerConfig ctrl;
    MetricsLog log;

    std::priority_queue<Ev, std::vector<Ev>, EvCmp> queue;
    std::uint64_t order = 0;

    std::unique_ptr<TrafficSource> traffic;
    std::unique_ptr<ScheduledLoss> fwd_loss;
    std::unique_ptr<BernoulliLoss> fb_loss;
    DelaySchedule delay;
    DropScript drops;
    Micros fwd_last_arrival = 0;
    Micros fb_last_arrival = 0;

    // Sender side
    std::unique_ptr<TetrysEncoder> tetrys_enc;
    std::unique_ptr<FecEncoder> fec_enc;
    std::unique_ptr<LadderController> ladder;

    // Receiver side
    std::unique_ptr<TetrysDecoder> tetrys_dec;
    std::unique_ptr<FecDecoder> fec_dec;
    LossEstimator estimator;
    FeedbackScheduler feedback;
    CalibrationTable calibration;
    bool have_calibration = false;
    double t_hat_us = 0.0;   // EWMA of source inter-arrival
    double rtt_hat_us = 0.0; // 2x one-way from packet timestamps
    Micros last_src_arrival = -1;
    std::uint32_t last_src_arrival_seq = 0;
    int believed_n = 0;     // sender's n as seen in repair headers
    int believed_fec_k = 0; // block size from repair first/last

    std::optional<Micros> drain_end; // set once traffic is exhausted
    Micros ack_next = 0;
    std::uint32_t last_repair_first = 0;

    explicit Simulation(const ScenarioConfig& c) : cfg(c) {}

    void push(Micros t, EvKind kind, Packet pkt = SourcePacket{}) {
        queue.push(Ev{t, order++, kind, std::move(pkt)});
    }

    bool adaptive() const {
        return cfg.codec.adaptive && cfg.codec.scheme != CodecSpec::Scheme::None;
    }
    bool is_tetrys() const { return cfg.codec.scheme == CodecSpec::Scheme::Tetrys; }
    bool is_fec() const { return cfg.codec.scheme == CodecSpec::Scheme::Fec; }

    double current_redundancy() const {
        if (cfg.codec.scheme == CodecSpec::Scheme::None) return 0.0;
        if (adaptive()) return ladder->redundancy();
        if (is_tetrys()) {
            const int n = cfg.codec.fixed_n ? cfg.codec.fixed_n
                                            : ladder_n(ctrl.ladder[cfg.codec.initial_rung]);
            return 1.0 / n;
        }
        const FecBlockConfig fc = fixed_fec_config();
        return fc.redundancy();
    }

    FecBlockConfig fixed_fec_config() const {
        if (cfg.codec.fec_k) return FecBlockConfig{cfg.codec.fec_k, cfg.codec.fec_n};
        return fec_rung_config(cfg.codec.initial_rung);
    }

    double repairs_per_source() const {
        if (is_tetrys()) {
            const int k = tetrys_enc->k();
            return 1.0 / static_cast<double>(k);
        }
        if (is_fec()) {
            const auto fc = fec_enc->config();
            return static_cast<double>(fc.n - fc.k) / static_cast<double>(fc.k);
        }
        return 0.0;
    }

    void setup();
    void run();
    void handle_emit(Micros now);
    void handle_fwd_arrival(const Packet& pkt, Micros now);
    void handle_fb_arrival(const Packet& pkt, Micros now);
    void handle_ack_tick(Micros now);
    void send_forward(Packet pkt, Micros now);
    void record_deliveries(const std::vector<Delivery>& dels);
    void feed_estimator(const std::vector<std::uint32_t>& newly_lost, bool source_received);
    void run_controller(Micros now);
    Micros cooldown_now() const;
};

void Simulation::setup() {
    cfg.validate();
    ctrl.f = cfg.controller.f;
    ctrl.min_th = cfg.controller.min_th;
    ctrl.max_th = cfg.controller.max_th;
    ctrl.condition1 = cfg.controller.condition1;
    ctrl.condition2 = cfg.controller.condition2;
    ctrl.min_fec = cfg.controller.min_fec;
    ctrl.max_fec = cfg.controller.max_fec;
    ctrl.d_max = ms(cfg.timing.d_max_ms);
    ctrl.ack_period = ms(cfg.timing.ack_period_ms);
    ctrl.cooldown = ms(cfg.controller.cooldown_ms);

    const std::uint64_t seed = cfg.seed;

    // Traffic
    if (cfg.traffic.type == TrafficSpec::Type::Cbr) {
        traffic = std::make_unique<CbrSource>(cfg.traffic.rate_kbps, cfg.traffic.packet_size,
                                              cfg.traffic.packets,
                                              mix_seed(seed, 1 + cfg.traffic.seed_offset));
    } else {
        VideoRateModel model;
        model.base_qp = cfg.traffic.base_qp;
        model.base_rate_kbps = cfg.traffic.base_rate_kbps;
        model.gain_per_step = cfg.traffic.gain_per_step;
        model.frame_rate = cfg.traffic.frame_rate;
        model.table = cfg.traffic.qp_table;
        traffic = std::make_unique<VideoSource>(model, cfg.traffic.duration_s, cfg.traffic.mtu,
                                                cfg.traffic.gop, cfg.traffic.jitter,
                                                mix_seed(seed, 2));
    }

    // Channels
    std::vector<ScheduledLoss::Segment> loss_segments;
    for (const auto& seg : cfg.channel.loss) {
        ScheduledLoss::Segment s;
        s.start = ms(seg.start_s * 1000.0);
        s.kind = seg.kind == LossSegmentSpec::Kind::None
                     ? ScheduledLoss::Segment::Kind::None
                     : seg.kind == LossSegmentSpec::Kind::Ge
                           ? ScheduledLoss::Segment::Kind::GilbertElliott
                           : ScheduledLoss::Segment::Kind::Bernoulli;
        s.p = seg.p;
        s.b = seg.b;
        loss_segments.push_back(s);
    }
    fwd_loss = std::make_unique<ScheduledLoss>(std::move(loss_segments), mix_seed(seed, 3));
    fb_loss = std::make_unique<BernoulliLoss>(cfg.channel.feedback_loss, mix_seed(seed, 4));
    for (const auto& d : cfg.channel.delay)
        delay.segments.push_back({ms(d.start_s * 1000.0), ms(d.one_way_ms)});
    delay.validate();
    drops.rules = cfg.channel.drops;
    log.delay = delay;
    log.d_max = ctrl.d_max;

    // Codec + controller state
    const int init_rung = cfg.codec.initial_rung;
    if (cfg.codec.scheme != CodecSpec::Scheme::None)
        ladder = std::make_unique<LadderController>(ctrl.ladder, init_rung);
    if (is_tetrys()) {
        int k;
        if (cfg.codec.adaptive)
            k = ladder->k();
        else
            k = (cfg.codec.fixed_n ? cfg.codec.fixed_n : ladder_n(ctrl.ladder[init_rung])) - 1;
        tetrys_enc = std::make_unique<TetrysEncoder>(k, mix_seed(seed, 5), cfg.codec.window_cap);
        tetrys_dec = std::make_unique<TetrysDecoder>();
        believed_n = k + 1;
    } else if (is_fec()) {
        const FecBlockConfig fc =
            cfg.codec.adaptive ? fec_rung_config(init_rung) : fixed_fec_config();
        fec_enc = std::make_unique<FecEncoder>(fc);
        fec_dec = std::make_unique<FecDecoder>();
        believed_n = fc.n;
    }

    if (adaptive()) {
        calibration = CalibrationTable::load(resolve_calibration_path(cfg.controller.calibration));
        have_calibration = true;
    }

    if (cfg.codec.scheme != CodecSpec::Scheme::None) {
        traffic->on_rung_change(adaptive() ? ladder->rung() : init_rung, current_redundancy(),
                                repairs_per_source());
        log.rung_changes.push_back({0, adaptive() ? ladder->rung() : init_rung,
                                    current_redundancy()});
    } else {
        log.rung_changes.push_back({0, 0, 0.0});
    }

    t_hat_us = traffic->nominal_packet_interval_us();
    rtt_hat_us = 2.0 * static_cast<double>(delay.delay_at(0));

    if (const auto t0 = traffic->next_time()) push(*t0, EvKind::EmitSource);
    if (cfg.codec.scheme != CodecSpec::Scheme::None) {
        ack_next = cfg.timing.ack_offset_ms > 0 ? ms(cfg.timing.ack_offset_ms)
                                                : ms(cfg.timing.ack_period_ms);
        push(ack_next, EvKind::AckTick);
    }
}

Micros Simulation::cooldown_now() const {
    if (ctrl.cooldown > 0) return ctrl.cooldown;
    return static_cast<Micros>(std::llround(rtt_hat_us));
}

void Simulation::send_forward(Packet pkt, Micros now) {
    const std::size_t bytes = wire_size(pkt);
    log.sender_bytes += bytes;
    log.sent_bytes.emplace_back(now, static_cast<std::uint32_t>(bytes));
    if (log.sources_emitted + log.repairs_emitted == 0) log.first_send = now;
    log.last_send = now;

    if (const auto* s = std::get_if<SourcePacket>(&pkt)) {
        ++log.sources_emitted;
        PacketRecord rec;
        rec.seq = s->seq;
        rec.send_ts = now;
        assert(s->seq == log.packets.size() + 1);
        log.packets.push_back(rec);
    } else {
        ++log.repairs_emitted;
        const auto& r = std::get<RepairPacket>(pkt);
        if (r.first_seq != last_repair_first) {
            last_repair_first = r.first_seq;
            log.events.push_back({now, "window", std::to_string(r.first_seq)});
        }
    }

    const bool scripted_drop = drops.should_drop(pkt);
    const bool channel_drop = fwd_loss->lose(now);
    if (scripted_drop || channel_drop) return;

    Micros arrival = now + delay.delay_at(now);
    arrival = std::max(arrival, fwd_last_arrival); // FIFO within the link
    fwd_last_arrival = arrival;
    push(arrival, EvKind::FwdArrival, std::move(pkt));
}

void Simulation::handle_emit(Micros now) {
    for (auto& payload : traffic->take()) {
        std::vector<Packet> pkts;
        if (is_tetrys())
            pkts = tetrys_enc->on_source_ready(std::move(payload), now);
        else if (is_fec())
            pkts = fec_enc->on_source_ready(std::move(payload), now);
        else {
            SourcePacket sp;
            sp.seq = static_cast<std::uint32_t>(log.packets.size() + 1);
            sp.send_ts = now;
            sp.payload = std::move(payload);
            pkts.push_back(std::move(sp));
        }
        for (auto& p : pkts) send_forward(std::move(p), now);
    }

    if (const auto t = traffic->next_time()) {
        push(std::max(*t, now), EvKind::EmitSource);
    } else {
        int n = 1;
        if (is_tetrys()) n = tetrys_enc->k() + 1;
        else if (is_fec()) n = fec_enc->config().n;
        const double interval = traffic->nominal_packet_interval_us() * n;
        drain_end = now + ctrl.d_max + delay.max_delay() +
                    static_cast<Micros>(std::llround(10.0 * interval));
        log.events.push_back({now, "drain", "until " + std::to_string(to_ms(*drain_end))});
    }
}

void Simulation::feed_estimator(const std::vector<std::uint32_t>& newly_lost,
                                bool source_received) {
    for (std::size_t i = 0; i < newly_lost.size(); ++i) estimator.on_lost();
    if (source_received) estimator.on_received();
}

void Simulation::record_deliveries(const std::vector<Delivery>& dels) {
    for (const auto& d : dels) {
        if (d.seq == 0 || d.seq > log.packets.size()) continue;
        PacketRecord& rec = log.packets[d.seq - 1];
        if (rec.delivered) continue;
        rec.delivered = true;
        rec.delivery_ts = d.delivery_ts;
        rec.recovered = d.recovered;
        rec.on_time = d.delivery_ts <= rec.send_ts + ctrl.d_max;
    }
}

void Simulation::run_controller(Micros now) {
    if (!adaptive()) return;

    Decision decision = Decision::Hold;
    if (is_tetrys()) {
        DecideInputs in;
        in.repair_deficit = tetrys_dec->repair_deficit();
        in.p_hat = estimator.p_hat();
        in.b_hat = estimator.b_hat();
        const int n = believed_n ? believed_n : ladder_n(ctrl.ladder[0]);
        in.n = n;
        in.redundancy = 1.0 / static_cast<double>(n);
        in.repair_interval = static_cast<Micros>(std::llround(t_hat_us * n));
        if (const auto gap = tetrys_dec->first_gap_seq()) {
            if (const auto pred = tetrys_dec->gap_predecessor()) {
                in.time_budget = compute_t_i(*gap, pred->first, pred->second, t_hat_us,
                                             ctrl.d_max, now);
            } else {
                // No received packet precedes the gap; extrapolate back from
                // the newest arrival.
                const Micros est = last_src_arrival >= 0 ? last_src_arrival : now;
                in.time_budget = est + ctrl.d_max - now;
            }
        }
        decision = decide(in, ctrl, have_calibration ? &calibration : nullptr);
    } else if (is_fec()) {
        double r_fec = fec_rung_config(cfg.codec.initial_rung).redundancy();
        if (believed_n && believed_fec_k)
            r_fec = static_cast<double>(believed_n - believed_fec_k) /
                    static_cast<double>(believed_n);
        decision = fec_decide(r_fec, estimator.p_hat(), ctrl.min_fec, ctrl.max_fec);
    }

    if (decision == Decision::Hold) return;
    if (!feedback.can_request(now)) return;
    const auto fb = feedback.request(
        decision == Decision::Increase ? FeedbackDirection::Increase : FeedbackDirection::Decrease,
        now);
    log.events.push_back({now, "request",
                          std::to_string(fb.request_id) +
                              (decision == Decision::Increase ? " increase" : " decrease")});
}

void Simulation::handle_fwd_arrival(const Packet& pkt, Micros now) {
    std::vector<std::uint32_t> newly_lost;
    std::vector<Delivery> dels;

    const auto* src = std::get_if<SourcePacket>(&pkt);
    const auto* rep = std::get_if<RepairPacket>(&pkt);

    if (is_tetrys())
        dels = tetrys_dec->on_packet(pkt, now, &newly_lost);
    else if (is_fec())
        dels = fec_dec->on_packet(pkt, now, &newly_lost);
    else if (src)
        dels.push_back(Delivery{src->seq, src->payload, now, false});

    feed_estimator(newly_lost, src != nullptr);
    record_deliveries(dels);

    if (src) {
        if (last_src_arrival >= 0 && src->seq > last_src_arrival_seq) {
            const double delta = static_cast<double>(now - last_src_arrival) /
                                 static_cast<double>(src->seq - last_src_arrival_seq);
            t_hat_us = 0.95 * t_hat_us + 0.05 * delta;
        }
        last_src_arrival = now;
        last_src_arrival_seq = src->seq;
        rtt_hat_us = 0.9 * rtt_hat_us + 0.1 * 2.0 * static_cast<double>(now - src->send_ts);
    }

    if (rep) {
        believed_n = rep->window_n;
        if (is_fec()) believed_fec_k = static_cast<int>(rep->last_seq - rep->first_seq + 1);
        feedback.on_confirmed(rep->applied_request_id, now, cooldown_now());
        bool any_rec = false;
        std::string seqs;
        for (const auto& d : dels)
            if (d.recovered) {
                any_rec = true;
                if (!seqs.empty()) seqs += ' ';
                seqs += std::to_string(d.seq);
            }
        if (any_rec)
            log.events.push_back({now, "decode",
                                  "R(" + std::to_string(rep->first_seq) + ".." +
                                      std::to_string(rep->last_seq) + ") -> " + seqs});
        run_controller(now);
    }
}

void Simulation::handle_fb_arrival(const Packet& pkt, Micros now) {
    const auto& ack = std::get<AckPacket>(pkt);
    if (is_tetrys()) tetrys_enc->on_ack(ack);
    if (!ack.feedback || !adaptive()) return;

    const auto applied = ladder->apply_feedback(*ack.feedback);
    if (!applied) return; // duplicate request id
    if (is_tetrys()) {
        tetrys_enc->set_k(applied->k);
        tetrys_enc->set_applied_request_id(ack.feedback->request_id);
    } else if (is_fec()) {
        fec_enc->set_config(fec_rung_config(applied->rung));
        fec_enc->set_applied_request_id(ack.feedback->request_id);
    }
    traffic->on_rung_change(applied->rung, applied->redundancy, repairs_per_source());
    log.rung_changes.push_back({now, applied->rung, applied->redundancy});
    log.events.push_back({now, "applied",
                          std::to_string(ack.feedback->request_id) + " rung " +
                              std::to_string(applied->rung)});
}

void Simulation::handle_ack_tick(Micros now) {
    if (drain_end && now > *drain_end) return; // stop the timer chain

    run_controller(now);

    AckPacket ack;
    if (is_tetrys())
        ack = tetrys_dec->make_ack(feedback.pending(), now);
    else if (is_fec())
        ack = fec_dec->make_ack(feedback.pending(), now);
    ack.send_ts = now;

    const Packet pkt = ack;
    log.ack_bytes += wire_size(pkt);
    const bool scripted = drops.should_drop(pkt);
    if (!scripted && !fb_loss->step()) {
        Micros arrival = now + delay.delay_at(now);
        arrival = std::max(arrival, fb_last_arrival);
        fb_last_arrival = arrival;
        push(arrival, EvKind::FbArrival, pkt);
    }

    ack_next = now + ctrl.ack_period;
    if (!drain_end || ack_next <= *drain_end) push(ack_next, EvKind::AckTick);
}

void Simulation::run() {
    setup();
    while (!queue.empty()) {
        Ev ev = queue.top();
        queue.pop();
        switch (ev.kind) {
        case EvKind::EmitSource: handle_emit(ev.t); break;
        case EvKind::FwdArrival: handle_fwd_arrival(ev.pkt, ev.t); break;
        case EvKind::FbArrival: handle_fb_arrival(ev.pkt, ev.t); break;
        case EvKind::AckTick: handle_ack_tick(ev.t); break;
        }
        log.run_end = ev.t;
    }
}

} // namespace

MetricsLog run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    sim.run();
    return std::move(sim.log);
}

} // namespace tetrysim
