#include "tetrysim/fec.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "tetrysim/gf256.hpp"

namespace tetrysim {

FecBlockConfig fec_rung_config(int rung_index) {
    switch (rung_index) {
    case 0: return {9, 10};  // 10%
    case 1: return {8, 10};  // 20%
    case 2: return {6, 9};   // 33.3%
    case 3: return {5, 10};  // 50%
    default: throw std::out_of_range("fec: rung index outside ladder");
    }
}

std::uint8_t fec_coefficient(int k, int repair_row, int source_col) {
    // Cauchy element 1/(x_r + y_c) with x_r = k + r, y_c = c: all distinct,
    // so every square submatrix is invertible and the code is MDS.
    return gf::inv(static_cast<std::uint8_t>((k + repair_row) ^ source_col));
}

std::vector<std::vector<std::uint8_t>> fec_encode_block(
    const std::vector<std::vector<std::uint8_t>>& sources, const FecBlockConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("fec: invalid (k, n)");
    if (static_cast<int>(sources.size()) != cfg.k)
        throw std::invalid_argument("fec: block needs exactly k sources");

    std::size_t max_len = 0;
    for (const auto& s : sources) max_len = std::max(max_len, s.size());

    std::vector<std::vector<std::uint8_t>> repairs(cfg.n - cfg.k);
    for (int r = 0; r < cfg.n - cfg.k; ++r) {
        repairs[r].assign(padded_len(max_len), 0);
        for (int c = 0; c < cfg.k; ++c)
            axpy_prefixed(repairs[r], fec_coefficient(cfg.k, r, c), sources[c]);
    }
    return repairs;
}

std::vector<std::pair<int, std::vector<std::uint8_t>>> fec_decode_block(
    int k, const std::vector<std::pair<int, std::vector<std::uint8_t>>>& received_sources,
    const std::vector<std::pair<int, std::vector<std::uint8_t>>>& received_repairs) {
    std::vector<bool> have(k, false);
    for (const auto& [c, payload] : received_sources) have[c] = true;

    std::vector<int> missing;
    for (int c = 0; c < k; ++c)
        if (!have[c]) missing.push_back(c);
    if (missing.empty()) return {};
    if (received_sources.size() + received_repairs.size() < static_cast<std::size_t>(k))
        return {};

    const std::size_t m = missing.size();
    assert(received_repairs.size() >= m);

    struct Eq {
        std::vector<std::uint8_t> coef;
        std::vector<std::uint8_t> rhs;
    };
    std::vector<Eq> eqs;
    for (std::size_t e = 0; e < m; ++e) {
        const auto& [row, combined] = received_repairs[e];
        Eq eq;
        eq.rhs = combined;
        eq.coef.assign(m, 0);
        for (int c = 0; c < k; ++c) {
            const std::uint8_t a = fec_coefficient(k, row, c);
            if (have[c]) {
                const auto& payload =
                    std::find_if(received_sources.begin(), received_sources.end(),
                                 [&](const auto& p) { return p.first == c; })
                        ->second;
                if (eq.rhs.size() < padded_len(payload.size()))
                    eq.rhs.resize(padded_len(payload.size()), 0);
                axpy_prefixed(eq.rhs, a, payload);
            } else {
                const auto pos = std::lower_bound(missing.begin(), missing.end(), c);
                eq.coef[pos - missing.begin()] = a;
            }
        }
        eqs.push_back(std::move(eq));
    }

    // Gauss-Jordan; the Cauchy submatrix is nonsingular by construction.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pr = col;
        while (pr < m && eqs[pr].coef[col] == 0) ++pr;
        assert(pr < m);
        std::swap(eqs[col], eqs[pr]);
        const std::uint8_t ip = gf::inv(eqs[col].coef[col]);
        gf::scal(eqs[col].coef, ip);
        gf::scal(eqs[col].rhs, ip);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const std::uint8_t c = eqs[r].coef[col];
            if (c == 0) continue;
            for (std::size_t i = 0; i < m; ++i)
                eqs[r].coef[i] = gf::add(eqs[r].coef[i], gf::mul(c, eqs[col].coef[i]));
            if (eqs[r].rhs.size() < eqs[col].rhs.size()) eqs[r].rhs.resize(eqs[col].rhs.size(), 0);
            gf::axpy(eqs[r].rhs, c, std::span<const std::uint8_t>(eqs[col].rhs));
        }
    }

    std::vector<std::pair<int, std::vector<std::uint8_t>>> out;
    for (std::size_t i = 0; i < m; ++i)
        out.emplace_back(missing[i], strip_prefix(eqs[i].rhs));
    return out;
}

// ---------------------------------------------------------------------------
// Encoder

FecEncoder::FecEncoder(FecBlockConfig cfg) : cfg_(cfg) {
    if (!cfg.valid()) throw std::invalid_argument("fec: invalid (k, n)");
}

void FecEncoder::set_config(FecBlockConfig cfg) {
    if (!cfg.valid()) throw std::invalid_argument("fec: invalid (k, n)");
    if (block_.empty())
        cfg_ = cfg;
    else
        pending_cfg_ = cfg;
}

std::vector<Packet> FecEncoder::on_source_ready(std::vector<std::uint8_t> payload, Micros now) {
    SourcePacket src;
    src.seq = next_seq_++;
    src.send_ts = now;
    src.payload = payload;
    if (block_.empty()) block_first_ = src.seq;
    block_.push_back(std::move(payload));
    ++stats_.sources_sent;

    std::vector<Packet> out;
    out.push_back(std::move(src));
    if (static_cast<int>(block_.size()) == cfg_.k) {
        const auto repairs = fec_encode_block(block_, cfg_);
        for (int r = 0; r < static_cast<int>(repairs.size()); ++r) {
            RepairPacket rp;
            rp.first_seq = block_first_;
            rp.last_seq = block_first_ + cfg_.k - 1;
            rp.coeff_seed = static_cast<std::uint64_t>(r); // repair row index
            rp.send_ts = now;
            rp.window_n = static_cast<std::uint8_t>(cfg_.n);
            rp.applied_request_id = applied_request_id_;
            rp.combined = repairs[r];
            out.push_back(std::move(rp));
            ++stats_.repairs_sent;
        }
        block_.clear();
        if (pending_cfg_) {
            cfg_ = *pending_cfg_;
            pending_cfg_.reset();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decoder

void FecDecoder::note_delivered(std::uint32_t seq) {
    delivered_above_.insert(seq);
    while (delivered_above_.count(cum_ + 1)) {
        delivered_above_.erase(cum_ + 1);
        ++cum_;
    }
}

void FecDecoder::scan_losses(std::uint32_t up_to, std::vector<std::uint32_t>* newly_lost) {
    if (newly_lost)
        for (std::uint32_t s = scanned_ + 1; s <= up_to; ++s) newly_lost->push_back(s);
    if (up_to > scanned_) scanned_ = up_to;
}

std::vector<Delivery> FecDecoder::on_packet(const Packet& pkt, Micros now,
                                            std::vector<std::uint32_t>* newly_lost) {
    std::vector<Delivery> out;
    if (const auto* s = std::get_if<SourcePacket>(&pkt)) {
        if (s->seq <= cum_ || delivered_above_.count(s->seq)) return out;
        scan_losses(s->seq - 1, newly_lost);
        scanned_ = std::max(scanned_, s->seq);
        ++stats_.sources_received;
        recent_sources_[s->seq] = s->payload;
        note_delivered(s->seq);
        out.push_back(Delivery{s->seq, s->payload, now, false});
        // The source may complete an already-open block.
        for (auto& [first, blk] : blocks_) {
            if (blk.done || s->seq < blk.first || s->seq > blk.last) continue;
            blk.sources[static_cast<int>(s->seq - blk.first)] = s->payload;
            auto rec = try_decode(blk, now);
            out.insert(out.end(), rec.begin(), rec.end());
        }
        gc();
        return out;
    }
    if (const auto* r = std::get_if<RepairPacket>(&pkt)) {
        ++stats_.repairs_received;
        observed_n_ = r->window_n;
        observed_applied_id_ = r->applied_request_id;
        scan_losses(r->last_seq, newly_lost);
        auto [it, created] = blocks_.try_emplace(r->first_seq);
        Block& blk = it->second;
        if (created) {
            blk.first = r->first_seq;
            blk.last = r->last_seq;
            for (auto ps = recent_sources_.lower_bound(blk.first);
                 ps != recent_sources_.end() && ps->first <= blk.last; ++ps)
                blk.sources[static_cast<int>(ps->first - blk.first)] = ps->second;
        }
        blk.repairs[static_cast<int>(r->coeff_seed)] = r->combined;
        out = try_decode(blk, now);
        gc();
        return out;
    }
    throw std::invalid_argument("fec: decoder expects source or repair packets");
}

std::vector<Delivery> FecDecoder::try_decode(Block& blk, Micros now) {
    if (blk.done) return {};
    const int k = static_cast<int>(blk.last - blk.first + 1);
    if (static_cast<int>(blk.sources.size()) == k) {
        blk.done = true;
        return {};
    }
    if (blk.sources.size() + blk.repairs.size() < static_cast<std::size_t>(k)) return {};

    std::vector<std::pair<int, std::vector<std::uint8_t>>> srcs(blk.sources.begin(),
                                                                blk.sources.end());
    std::vector<std::pair<int, std::vector<std::uint8_t>>> reps(blk.repairs.begin(),
                                                                blk.repairs.end());
    auto recovered = fec_decode_block(k, srcs, reps);
    blk.done = true;
    ++stats_.blocks_decoded;

    std::vector<Delivery> out;
    for (auto& [col, payload] : recovered) {
        const std::uint32_t seq = blk.first + static_cast<std::uint32_t>(col);
        note_delivered(seq);
        recent_sources_[seq] = payload;
        out.push_back(Delivery{seq, std::move(payload), now, true});
    }
    return out;
}

void FecDecoder::gc() {
    // Blocks and stored sources far behind the newest sequence can no longer
    // change; 64 packets comfortably exceeds 4 max-size groups.
    constexpr std::uint32_t kHorizon = 64;
    if (scanned_ <= kHorizon) return;
    const std::uint32_t floor = scanned_ - kHorizon;
    while (!blocks_.empty() && blocks_.begin()->second.last < floor)
        blocks_.erase(blocks_.begin());
    recent_sources_.erase(recent_sources_.begin(), recent_sources_.lower_bound(floor));
}

AckPacket FecDecoder::make_ack(std::optional<RedundancyFeedback> feedback, Micros now) const {
    AckPacket a;
    a.cumulative_seq = cum_;
    a.send_ts = now;
    a.feedback = feedback;
    return a;
}

} // namespace tetrysim
