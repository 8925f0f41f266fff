#include "tetrysim/scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "tetrysim/adapt.hpp"
#include "tetrysim/channel.hpp"

namespace tetrysim {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

struct Setter {
    ScenarioConfig* cfg;
    std::string origin;
    int line = 0;
    bool loss_touched = false;
    bool delay_touched = false;

    [[noreturn]] void fail(const std::string& what) const {
        throw ScenarioError(origin, line, what);
    }

    double num(const std::string& v) const {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) fail("trailing characters in number '" + v + "'");
            return d;
        } catch (const ScenarioError&) {
            throw;
        } catch (...) {
            fail("expected a number, got '" + v + "'");
        }
    }

    std::uint64_t unum(const std::string& v) const {
        const double d = num(v);
        if (d < 0) fail("expected a non-negative value, got '" + v + "'");
        return static_cast<std::uint64_t>(d);
    }

    bool boolean(const std::string& v) const {
        if (v == "true" || v == "on" || v == "1") return true;
        if (v == "false" || v == "off" || v == "0") return false;
        fail("expected a boolean, got '" + v + "'");
    }

    // Applies one key/value inside a section; list-valued keys append.
    void set(const std::string& section, const std::string& key, const std::string& value) {
        if (section == "run") {
            if (key == "name") cfg->name = value;
            else if (key == "seed") cfg->seed = unum(value);
            else fail("unknown key '" + key + "' in [run]");
            return;
        }
        if (section == "traffic") {
            auto& t = cfg->traffic;
            if (key == "type") {
                if (value == "cbr") t.type = TrafficSpec::Type::Cbr;
                else if (value == "video") t.type = TrafficSpec::Type::Video;
                else fail("traffic type must be cbr or video");
            } else if (key == "rate_kbps") t.rate_kbps = num(value);
            else if (key == "packet_size") t.packet_size = unum(value);
            else if (key == "packets") t.packets = unum(value);
            else if (key == "base_rate_kbps") t.base_rate_kbps = num(value);
            else if (key == "base_qp") t.base_qp = static_cast<int>(num(value));
            else if (key == "frame_rate") t.frame_rate = num(value);
            else if (key == "gain_per_step") t.gain_per_step = num(value);
            else if (key == "gop") t.gop = static_cast<int>(num(value));
            else if (key == "jitter") t.jitter = num(value);
            else if (key == "mtu") t.mtu = unum(value);
            else if (key == "duration_s") t.duration_s = num(value);
            else if (key == "seed_offset") t.seed_offset = unum(value);
            else if (key == "qp_rate") {
                const auto w = split_ws(value);
                if (w.size() != 2) fail("qp_rate expects: <qp> <kbps>");
                t.qp_table.emplace_back(static_cast<int>(num(w[0])), num(w[1]));
            } else fail("unknown key '" + key + "' in [traffic]");
            return;
        }
        if (section == "codec") {
            auto& c = cfg->codec;
            if (key == "scheme") {
                if (value == "tetrys") c.scheme = CodecSpec::Scheme::Tetrys;
                else if (value == "fec") c.scheme = CodecSpec::Scheme::Fec;
                else if (value == "none") c.scheme = CodecSpec::Scheme::None;
                else fail("codec scheme must be tetrys, fec or none");
            } else if (key == "adaptive") c.adaptive = boolean(value);
            else if (key == "rung") c.initial_rung = static_cast<int>(num(value));
            else if (key == "fixed_n") c.fixed_n = static_cast<int>(num(value));
            else if (key == "fec_k") c.fec_k = static_cast<int>(num(value));
            else if (key == "fec_n") c.fec_n = static_cast<int>(num(value));
            else if (key == "window_cap") c.window_cap = unum(value);
            else fail("unknown key '" + key + "' in [codec]");
            return;
        }
        if (section == "channel") {
            auto& ch = cfg->channel;
            if (key == "loss") {
                const auto w = split_ws(value);
                if (w.size() < 2) fail("loss expects: <start_s> none|ge <p> <b>|bernoulli <p>");
                LossSegmentSpec seg;
                seg.start_s = num(w[0]);
                if (w[1] == "none") {
                    if (w.size() != 2) fail("loss none takes no parameters");
                    seg.kind = LossSegmentSpec::Kind::None;
                } else if (w[1] == "ge") {
                    if (w.size() != 4) fail("loss ge expects: <start_s> ge <p> <b>");
                    seg.kind = LossSegmentSpec::Kind::Ge;
                    seg.p = num(w[2]);
                    seg.b = num(w[3]);
                } else if (w[1] == "bernoulli") {
                    if (w.size() != 3) fail("loss bernoulli expects: <start_s> bernoulli <p>");
                    seg.kind = LossSegmentSpec::Kind::Bernoulli;
                    seg.p = num(w[2]);
                } else fail("loss model must be none, ge or bernoulli");
                if (!loss_touched) {
                    ch.loss.clear(); // first explicit line replaces the default
                    loss_touched = true;
                }
                ch.loss.push_back(seg);
            } else if (key == "delay") {
                const auto w = split_ws(value);
                if (w.size() != 2) fail("delay expects: <start_s> <one_way_ms>");
                if (!delay_touched) {
                    ch.delay.clear();
                    delay_touched = true;
                }
                ch.delay.push_back({num(w[0]), num(w[1])});
            } else if (key == "feedback_loss") ch.feedback_loss = num(value);
            else if (key == "drop") {
                const auto w = split_ws(value);
                if (w.size() != 2) fail("drop expects: src|rep|ack <ordinal>");
                DropRuleSpec d;
                if (w[0] == "src") d.kind = DropRuleSpec::Kind::Source;
                else if (w[0] == "rep") d.kind = DropRuleSpec::Kind::Repair;
                else if (w[0] == "ack") d.kind = DropRuleSpec::Kind::Ack;
                else fail("drop kind must be src, rep or ack");
                d.ordinal = unum(w[1]);
                if (d.ordinal == 0) fail("drop ordinal is 1-based");
                ch.drops.push_back(d);
            } else fail("unknown key '" + key + "' in [channel]");
            return;
        }
        if (section == "controller") {
            auto& c = cfg->controller;
            if (key == "f") c.f = num(value);
            else if (key == "min_th") c.min_th = num(value);
            else if (key == "max_th") c.max_th = num(value);
            else if (key == "condition1") c.condition1 = boolean(value);
            else if (key == "condition2") c.condition2 = boolean(value);
            else if (key == "min_fec") c.min_fec = num(value);
            else if (key == "max_fec") c.max_fec = num(value);
            else if (key == "cooldown_ms") c.cooldown_ms = num(value);
            else if (key == "calibration") c.calibration = value;
            else fail("unknown key '" + key + "' in [controller]");
            return;
        }
        if (section == "timing") {
            auto& t = cfg->timing;
            if (key == "d_max_ms") t.d_max_ms = num(value);
            else if (key == "ack_period_ms") t.ack_period_ms = num(value);
            else if (key == "ack_offset_ms") t.ack_offset_ms = num(value);
            else fail("unknown key '" + key + "' in [timing]");
            return;
        }
        fail("unknown section [" + section + "]");
    }
};

const char* kind_name(LossSegmentSpec::Kind k) {
    switch (k) {
    case LossSegmentSpec::Kind::None: return "none";
    case LossSegmentSpec::Kind::Ge: return "ge";
    default: return "bernoulli";
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

ScenarioConfig ScenarioConfig::parse(std::string_view text, std::string_view origin) {
    ScenarioConfig cfg;
    Setter s{&cfg, std::string(origin)};
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        s.line = line;
        const auto hash = raw.find('#');
        std::string t = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') s.fail("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) s.fail("empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) s.fail("expected key = value");
        if (section.empty()) s.fail("key before any [section]");
        s.set(section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::parse_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario config: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), file.string());
}

void ScenarioConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw std::invalid_argument("override must look like section.key=value");
    const std::string lhs = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    const auto dot = lhs.find('.');
    if (dot == std::string::npos)
        throw std::invalid_argument("override key must be section.key");
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);

    Setter s{this, "<override>"};
    const bool list_key = (section == "channel" && (key == "loss" || key == "delay" || key == "drop")) ||
                          (section == "traffic" && key == "qp_rate");
    if (list_key) {
        if (key == "loss") channel.loss.clear();
        else if (key == "delay") channel.delay.clear();
        else if (key == "drop") channel.drops.clear();
        else traffic.qp_table.clear();
        std::string rest = value;
        while (!rest.empty()) {
            const auto semi = rest.find(';');
            const std::string item = trim(rest.substr(0, semi));
            if (!item.empty()) s.set(section, key, item);
            if (semi == std::string::npos) break;
            rest = rest.substr(semi + 1);
        }
        return;
    }
    s.set(section, key, value);
}

std::string ScenarioConfig::serialize() const {
    std::ostringstream o;
    o << "[run]\n";
    o << "name = " << name << "\n";
    o << "seed = " << seed << "\n";
    o << "\n[traffic]\n";
    o << "type = " << (traffic.type == TrafficSpec::Type::Cbr ? "cbr" : "video") << "\n";
    if (traffic.type == TrafficSpec::Type::Cbr) {
        o << "rate_kbps = " << fmt(traffic.rate_kbps) << "\n";
        o << "packet_size = " << traffic.packet_size << "\n";
        o << "packets = " << traffic.packets << "\n";
    } else {
        o << "base_rate_kbps = " << fmt(traffic.base_rate_kbps) << "\n";
        o << "base_qp = " << traffic.base_qp << "\n";
        o << "frame_rate = " << fmt(traffic.frame_rate) << "\n";
        o << "gain_per_step = " << fmt(traffic.gain_per_step) << "\n";
        o << "gop = " << traffic.gop << "\n";
        o << "jitter = " << fmt(traffic.jitter) << "\n";
        o << "mtu = " << traffic.mtu << "\n";
        o << "duration_s = " << fmt(traffic.duration_s) << "\n";
        for (const auto& [qp, rate] : traffic.qp_table)
            o << "qp_rate = " << qp << " " << fmt(rate) << "\n";
    }
    if (traffic.seed_offset) o << "seed_offset = " << traffic.seed_offset << "\n";
    o << "\n[codec]\n";
    o << "scheme = "
      << (codec.scheme == CodecSpec::Scheme::Tetrys
              ? "tetrys"
              : codec.scheme == CodecSpec::Scheme::Fec ? "fec" : "none")
      << "\n";
    o << "adaptive = " << (codec.adaptive ? "true" : "false") << "\n";
    o << "rung = " << codec.initial_rung << "\n";
    if (codec.fixed_n) o << "fixed_n = " << codec.fixed_n << "\n";
    if (codec.fec_k) o << "fec_k = " << codec.fec_k << "\n";
    if (codec.fec_n) o << "fec_n = " << codec.fec_n << "\n";
    o << "window_cap = " << codec.window_cap << "\n";
    o << "\n[channel]\n";
    for (const auto& seg : channel.loss) {
        o << "loss = " << fmt(seg.start_s) << " " << kind_name(seg.kind);
        if (seg.kind == LossSegmentSpec::Kind::Ge)
            o << " " << fmt(seg.p) << " " << fmt(seg.b);
        else if (seg.kind == LossSegmentSpec::Kind::Bernoulli)
            o << " " << fmt(seg.p);
        o << "\n";
    }
    for (const auto& d : channel.delay)
        o << "delay = " << fmt(d.start_s) << " " << fmt(d.one_way_ms) << "\n";
    o << "feedback_loss = " << fmt(channel.feedback_loss) << "\n";
    for (const auto& d : channel.drops) {
        o << "drop = "
          << (d.kind == DropRuleSpec::Kind::Source
                  ? "src"
                  : d.kind == DropRuleSpec::Kind::Repair ? "rep" : "ack")
          << " " << d.ordinal << "\n";
    }
    o << "\n[controller]\n";
    o << "f = " << fmt(controller.f) << "\n";
    o << "min_th = " << fmt(controller.min_th) << "\n";
    o << "max_th = " << fmt(controller.max_th) << "\n";
    o << "condition1 = " << (controller.condition1 ? "on" : "off") << "\n";
    o << "condition2 = " << (controller.condition2 ? "on" : "off") << "\n";
    o << "min_fec = " << fmt(controller.min_fec) << "\n";
    o << "max_fec = " << fmt(controller.max_fec) << "\n";
    o << "cooldown_ms = " << fmt(controller.cooldown_ms) << "\n";
    if (!controller.calibration.empty()) o << "calibration = " << controller.calibration << "\n";
    o << "\n[timing]\n";
    o << "d_max_ms = " << fmt(timing.d_max_ms) << "\n";
    o << "ack_period_ms = " << fmt(timing.ack_period_ms) << "\n";
    o << "ack_offset_ms = " << fmt(timing.ack_offset_ms) << "\n";
    return o.str();
}

void ScenarioConfig::validate() const {
    const auto bad = [](const std::string& w) { throw std::invalid_argument("scenario: " + w); };

    if (traffic.type == TrafficSpec::Type::Cbr) {
        if (traffic.rate_kbps <= 0 || traffic.packet_size == 0 || traffic.packets == 0)
            bad("cbr traffic needs positive rate, packet size and packet count");
    } else {
        if (traffic.base_rate_kbps <= 0 || traffic.frame_rate <= 0 || traffic.duration_s <= 0)
            bad("video traffic needs positive rate, frame rate and duration");
        if (traffic.gain_per_step < 0.0 || traffic.gain_per_step >= 1.0)
            bad("gain_per_step must be in [0, 1)");
    }

    if (channel.loss.empty()) bad("channel needs at least one loss segment");
    for (std::size_t i = 1; i < channel.loss.size(); ++i)
        if (channel.loss[i].start_s <= channel.loss[i - 1].start_s)
            bad("loss segments must have strictly increasing start times");
    for (const auto& seg : channel.loss) {
        if (seg.p < 0.0 || seg.p > 1.0) bad("loss probability outside [0, 1]");
        if (seg.kind == LossSegmentSpec::Kind::Ge) GilbertElliott::validate(seg.p, seg.b);
    }
    if (channel.delay.empty()) bad("channel needs at least one delay segment");
    for (std::size_t i = 1; i < channel.delay.size(); ++i)
        if (channel.delay[i].start_s <= channel.delay[i - 1].start_s)
            bad("delay segments must have strictly increasing start times");
    if (channel.feedback_loss < 0.0 || channel.feedback_loss > 1.0)
        bad("feedback_loss outside [0, 1]");

    if (codec.scheme != CodecSpec::Scheme::None) {
        ControllerConfig cc;
        cc.f = controller.f;
        cc.min_th = controller.min_th;
        cc.max_th = controller.max_th;
        cc.min_fec = controller.min_fec;
        cc.max_fec = controller.max_fec;
        cc.d_max = ms(timing.d_max_ms);
        cc.ack_period = ms(timing.ack_period_ms);
        cc.validate();
        if (codec.initial_rung < 0 || codec.initial_rung > 3) bad("rung must be in [0, 3]");
        if (!codec.adaptive && codec.scheme == CodecSpec::Scheme::Tetrys && codec.fixed_n < 0)
            bad("fixed_n must be >= 0");
        if (codec.fixed_n == 1) bad("fixed_n must be >= 2 (redundancy below 100%)");
        if ((codec.fec_k != 0) != (codec.fec_n != 0)) bad("fec_k and fec_n come together");
        if (codec.fec_k != 0 && !(codec.fec_k >= 1 && codec.fec_k < codec.fec_n && codec.fec_n <= 255))
            bad("fixed FEC needs 1 <= k < n <= 255");
        if (codec.window_cap < 2) bad("window_cap too small");
    }
    if (timing.d_max_ms <= 0 || timing.ack_period_ms <= 0) bad("timing values must be positive");

    if (codec.adaptive && codec.scheme != CodecSpec::Scheme::None) {
        // Adaptive runs need the recovery-delay model; fail before any event
        // runs if the table cannot be found.
        resolve_calibration_path(controller.calibration);
    }
}

std::filesystem::path resolve_calibration_path(const std::string& configured) {
    namespace fs = std::filesystem;
    std::vector<fs::path> candidates;
    if (!configured.empty()) candidates.emplace_back(configured);
    if (const char* env = std::getenv("TETRYSIM_CALIBRATION")) candidates.emplace_back(env);
    candidates.emplace_back("data/recovery_coeffs.txt");
#ifdef TETRYSIM_SOURCE_DIR
    candidates.emplace_back(fs::path(TETRYSIM_SOURCE_DIR) / "data" / "recovery_coeffs.txt");
#endif
    for (const auto& c : candidates)
        if (fs::exists(c)) return c;
    throw std::runtime_error(
        "calibration table not found (looked for " +
        (configured.empty() ? std::string("data/recovery_coeffs.txt") : configured) +
        "); set TETRYSIM_CALIBRATION or run `tetrysim calibrate` first");
}

// ---------------------------------------------------------------------------
// Presets

namespace {

const std::map<std::string, const char*>& preset_texts() {
    static const std::map<std::string, const char*> presets = {
        // Two-packet-window walkthrough: P2..P4 and the first window repair
        // lost, first ACK lost, second ACK clean. Recovery happens at the
        // first and fourth repairs and the window restarts at P9.
        {"fig1", R"(
[run]
name = fig1
seed = 1

[traffic]
type = cbr
rate_kbps = 2000
packet_size = 500
packets = 20

[codec]
scheme = tetrys
adaptive = false
fixed_n = 3

[channel]
loss = 0 none
delay = 0 5
drop = src 2
drop = src 3
drop = src 4
drop = rep 2
drop = ack 1

[timing]
d_max_ms = 150
ack_period_ms = 12
ack_offset_ms = 8
)"},
        // CBR workbench: 1900 kb/s of 500-byte packets, 50 ms one way,
        // 150 ms deadline, ACK every 10 ms, 50000 packets.
        {"cbr", R"(
[run]
name = cbr
seed = 1

[traffic]
type = cbr
rate_kbps = 1900
packet_size = 500
packets = 50000

[codec]
scheme = tetrys
adaptive = true
rung = 0

[channel]
loss = 0 ge 0.01 3
delay = 0 50

[controller]
f = 2
min_th = 0.9
max_th = 0.99

[timing]
d_max_ms = 150
ack_period_ms = 10
)"},
        // Fixed loss rate, varied burstiness: lossless, then GE(2%, b=2),
        // then Bernoulli 2%.
        {"table2", R"(
[run]
name = table2
seed = 1

[traffic]
type = video
base_rate_kbps = 774
base_qp = 27
frame_rate = 30
gain_per_step = 0.15
duration_s = 50

[codec]
scheme = tetrys
adaptive = true
rung = 0

[channel]
loss = 0 none
loss = 10 ge 0.02 2
loss = 30 bernoulli 0.02
delay = 0 50

[controller]
f = 4
min_th = 0.9
max_th = 0.99

[timing]
d_max_ms = 150
ack_period_ms = 10
)"},
        // Varied loss rate and burstiness in 10 s segments.
        {"table4", R"(
[run]
name = table4
seed = 1

[traffic]
type = video
base_rate_kbps = 774
base_qp = 27
frame_rate = 30
gain_per_step = 0.15
duration_s = 50

[codec]
scheme = tetrys
adaptive = true
rung = 0

[channel]
loss = 0 none
loss = 10 ge 0.02 2
loss = 20 ge 0.02 3
loss = 30 ge 0.03 2
loss = 40 ge 0.03 3
delay = 0 50

[controller]
f = 4
min_th = 0.9
max_th = 0.99

[timing]
d_max_ms = 150
ack_period_ms = 10
)"},
        // table4 schedule with the adaptive block-FEC baseline.
        {"table4-fec", R"(
[run]
name = table4-fec
seed = 1

[traffic]
type = video
base_rate_kbps = 774
base_qp = 27
frame_rate = 30
gain_per_step = 0.15
duration_s = 50

[codec]
scheme = fec
adaptive = true
rung = 0

[channel]
loss = 0 none
loss = 10 ge 0.02 2
loss = 20 ge 0.02 3
loss = 30 ge 0.03 2
loss = 40 ge 0.03 3
delay = 0 50

[controller]
min_fec = 0.2
max_fec = 0.25

[timing]
d_max_ms = 150
ack_period_ms = 10
)"},
        // Fixed GE(2%, 2); one-way delay climbs from 50 to 70 ms at t=20 s.
        {"varied-rtt", R"(
[run]
name = varied-rtt
seed = 1

[traffic]
type = video
base_rate_kbps = 774
base_qp = 27
frame_rate = 30
gain_per_step = 0.15
duration_s = 50

[codec]
scheme = tetrys
adaptive = true
rung = 0

[channel]
loss = 0 ge 0.02 2
delay = 0 50
delay = 20 70

[controller]
f = 4
min_th = 0.9
max_th = 0.99

[timing]
d_max_ms = 150
ack_period_ms = 10
)"},
    };
    return presets;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : preset_texts()) names.push_back(name);
    return names;
}

ScenarioConfig preset(std::string_view name) {
    const auto& presets = preset_texts();
    const auto it = presets.find(std::string(name));
    if (it == presets.end())
        throw std::invalid_argument("unknown preset '" + std::string(name) +
                                    "' (see `tetrysim presets`)");
    return ScenarioConfig::parse(it->second, "preset:" + std::string(name));
}

} // namespace tetrysim
