#include "tetrysim/tetrys.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "tetrysim/gf256.hpp"
#include "tetrysim/rng.hpp"

namespace tetrysim {

namespace {

// dst ^= c * src where buffers may differ in length (shorter side is
// implicitly zero-padded); dst grows to cover src.
void axpy_grow(std::vector<std::uint8_t>& dst, std::uint8_t c,
               const std::vector<std::uint8_t>& src) {
    if (dst.size() < src.size()) dst.resize(src.size(), 0);
    gf::axpy(dst, c, src);
}

} // namespace

// ---------------------------------------------------------------------------
// Encoder

TetrysEncoder::TetrysEncoder(int k, std::uint64_t seed, std::size_t window_cap)
    : k_(k), seed_(seed), window_cap_(window_cap) {
    if (k < 1) throw std::invalid_argument("tetrys: k must be >= 1");
    if (window_cap < 1) throw std::invalid_argument("tetrys: window cap must be >= 1");
}

std::vector<Packet> TetrysEncoder::on_source_ready(std::vector<std::uint8_t> payload, Micros now) {
    SourcePacket src;
    src.seq = next_seq_++;
    src.send_ts = now;
    src.payload = std::move(payload);

    std::vector<Packet> out;
    out.push_back(src);
    window_.push_back(std::move(src));
    while (window_.size() > window_cap_) {
        window_.pop_front();
        ++stats_.evicted;
    }
    ++stats_.sources_sent;

    if (++since_last_repair_ >= k_) {
        since_last_repair_ = 0;
        out.push_back(build_repair(now));
    }
    return out;
}

RepairPacket TetrysEncoder::build_repair(Micros now) {
    assert(!window_.empty());
    RepairPacket r;
    r.first_seq = window_.front().seq;
    r.last_seq = window_.back().seq;
    r.coeff_seed = mix_seed(seed_, ++repair_index_);
    r.send_ts = now;
    r.window_n = static_cast<std::uint8_t>(k_ + 1);
    r.applied_request_id = applied_request_id_;

    std::size_t max_len = 0;
    for (const auto& p : window_) max_len = std::max(max_len, p.payload.size());
    r.combined.assign(padded_len(max_len), 0);

    const auto coeffs = repair_coefficients(r.coeff_seed, r.first_seq, r.last_seq);
    for (const auto& p : window_)
        axpy_prefixed(r.combined, coeffs[p.seq - r.first_seq], p.payload);

    ++stats_.repairs_sent;
    return r;
}

void TetrysEncoder::on_ack(const AckPacket& ack) {
    if (ack.cumulative_seq < last_cum_) return; // stale
    last_cum_ = ack.cumulative_seq;
    while (!window_.empty() && window_.front().seq <= ack.cumulative_seq)
        window_.pop_front();
}

void TetrysEncoder::set_k(int k) {
    if (k < 1) throw std::invalid_argument("tetrys: k must be >= 1");
    k_ = k;
    since_last_repair_ = 0;
}

// ---------------------------------------------------------------------------
// Decoder

std::optional<std::uint32_t> TetrysDecoder::first_gap_seq() const {
    if (unknowns_.empty()) return std::nullopt;
    return unknowns_.front().seq;
}

std::optional<std::pair<std::uint32_t, Micros>> TetrysDecoder::gap_predecessor() const {
    if (unknowns_.empty()) return std::nullopt;
    if (unknowns_.front().pred_seq == 0) return std::nullopt;
    return std::make_pair(unknowns_.front().pred_seq, unknowns_.front().pred_arrival);
}

void TetrysDecoder::note_delivered(std::uint32_t seq) {
    delivered_above_.insert(seq);
    while (delivered_above_.count(cum_ + 1)) {
        delivered_above_.erase(cum_ + 1);
        ++cum_;
    }
}

void TetrysDecoder::scan_losses(std::uint32_t up_to, std::vector<std::uint32_t>* newly_lost) {
    for (std::uint32_t s = scanned_ + 1; s <= up_to; ++s) {
        Unknown u;
        u.seq = s;
        u.pred_seq = last_src_seq_;
        u.pred_arrival = last_src_arrival_;
        unknowns_.push_back(u);
        if (newly_lost) newly_lost->push_back(s);
    }
    if (up_to > scanned_) scanned_ = up_to;
}

void TetrysDecoder::drop_stranded(std::uint32_t repair_first) {
    // The sender's window can only start past a still-missing packet if the
    // window cap evicted it; no current or future combination spans it.
    std::size_t dropped = 0;
    while (dropped < unknowns_.size() && unknowns_[dropped].seq < repair_first) ++dropped;
    if (dropped == 0) return;

    std::vector<Row> kept;
    for (auto& row : rows_) {
        bool touches = false;
        for (std::size_t c = 0; c < dropped && !touches; ++c)
            touches = coef_at(row, c) != 0;
        if (touches) continue; // constrains an unrecoverable value
        Row nr;
        nr.rhs = std::move(row.rhs);
        nr.coef.assign(row.coef.begin() + std::min(row.coef.size(), dropped), row.coef.end());
        nr.pivot = row.pivot - dropped;
        kept.push_back(std::move(nr));
    }
    rows_ = std::move(kept);
    unknowns_.erase(unknowns_.begin(), unknowns_.begin() + dropped);
    stats_.given_up += dropped;
}

std::vector<Delivery> TetrysDecoder::on_packet(const Packet& pkt, Micros now,
                                               std::vector<std::uint32_t>* newly_lost) {
    std::vector<Delivery> out;
    if (const auto* s = std::get_if<SourcePacket>(&pkt)) {
        if (s->seq <= cum_ || delivered_above_.count(s->seq)) return out; // duplicate
        scan_losses(s->seq - 1, newly_lost);
        scanned_ = std::max(scanned_, s->seq);
        ++stats_.sources_received;
        last_src_seq_ = s->seq;
        last_src_arrival_ = now;
        known_payloads_[s->seq] = s->payload;
        note_delivered(s->seq);
        out.push_back(Delivery{s->seq, s->payload, now, false});
        return out;
    }
    if (const auto* r = std::get_if<RepairPacket>(&pkt)) {
        ++stats_.repairs_received;
        observed_n_ = r->window_n;
        observed_applied_id_ = r->applied_request_id;
        scan_losses(r->last_seq, newly_lost);
        drop_stranded(r->first_seq);
        // Packets below the window start are never combined again.
        known_payloads_.erase(known_payloads_.begin(),
                              known_payloads_.lower_bound(r->first_seq));
        return add_repair(*r, now);
    }
    throw std::invalid_argument("tetrys: decoder expects source or repair packets");
}

std::vector<Delivery> TetrysDecoder::add_repair(const RepairPacket& r, Micros now) {
    const auto coeffs = repair_coefficients(r.coeff_seed, r.first_seq, r.last_seq);

    Row row;
    row.rhs = r.combined;
    row.coef.assign(unknowns_.size(), 0);
    bool any_unknown = false;
    std::size_t col = 0;
    for (std::uint32_t seq = r.first_seq; seq <= r.last_seq; ++seq) {
        const std::uint8_t c = coeffs[seq - r.first_seq];
        auto it = known_payloads_.find(seq);
        if (it != known_payloads_.end()) {
            if (row.rhs.size() < padded_len(it->second.size()))
                row.rhs.resize(padded_len(it->second.size()), 0);
            axpy_prefixed(row.rhs, c, it->second);
            continue;
        }
        while (col < unknowns_.size() && unknowns_[col].seq < seq) ++col;
        assert(col < unknowns_.size() && unknowns_[col].seq == seq);
        row.coef[col] = c;
        any_unknown = true;
    }

    if (!any_unknown) {
        ++stats_.repairs_redundant;
        return {};
    }

    // Forward elimination against the stored pivot rows.
    for (const auto& pr : rows_) {
        const std::uint8_t c = coef_at(row, pr.pivot);
        if (c == 0) continue;
        for (std::size_t i = 0; i < pr.coef.size(); ++i)
            if (pr.coef[i]) {
                if (row.coef.size() <= i) row.coef.resize(i + 1, 0);
                row.coef[i] = gf::add(row.coef[i], gf::mul(c, pr.coef[i]));
            }
        axpy_grow(row.rhs, c, pr.rhs);
    }

    std::size_t pivot = 0;
    while (pivot < row.coef.size() && row.coef[pivot] == 0) ++pivot;
    if (pivot == row.coef.size()) {
        ++stats_.repairs_dependent; // linearly dependent combination
        return {};
    }

    const std::uint8_t pv = row.coef[pivot];
    if (pv != 1) {
        const std::uint8_t ip = gf::inv(pv);
        gf::scal(row.coef, ip);
        gf::scal(row.rhs, ip);
    }
    row.pivot = pivot;
    auto pos = std::lower_bound(rows_.begin(), rows_.end(), pivot,
                                [](const Row& a, std::size_t p) { return a.pivot < p; });
    rows_.insert(pos, std::move(row));
    ++stats_.rows_added;

    if (rows_.size() == unknowns_.size()) return solve(now);
    return {};
}

std::vector<Delivery> TetrysDecoder::solve(Micros now) {
    // rank == y: back-substitute from the highest pivot downwards.
    const std::size_t y = unknowns_.size();
    std::vector<std::vector<std::uint8_t>> value(y);
    for (std::size_t i = y; i-- > 0;) {
        Row& row = rows_[i];
        for (std::size_t c = row.pivot + 1; c < row.coef.size(); ++c)
            if (row.coef[c]) axpy_grow(row.rhs, row.coef[c], value[c]);
        value[row.pivot] = std::move(row.rhs);
    }

    std::vector<Delivery> out;
    out.reserve(y);
    for (std::size_t i = 0; i < y; ++i) {
        const std::uint32_t seq = unknowns_[i].seq;
        auto payload = strip_prefix(value[i]);
        known_payloads_[seq] = payload;
        note_delivered(seq);
        out.push_back(Delivery{seq, std::move(payload), now, true});
    }
    unknowns_.clear();
    rows_.clear();
    ++stats_.decode_events;
    return out;
}

AckPacket TetrysDecoder::make_ack(std::optional<RedundancyFeedback> feedback, Micros now) const {
    AckPacket a;
    a.cumulative_seq = cum_;
    a.send_ts = now;
    a.feedback = feedback;
    return a;
}

} // namespace tetrysim
