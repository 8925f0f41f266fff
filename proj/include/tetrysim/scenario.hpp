#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tetrysim {

struct ScenarioError : std::runtime_error {
    ScenarioError(const std::string& origin, int line, const std::string& what)
        : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what),
          line_number(line) {}
    int line_number;
};

struct TrafficSpec {
    enum class Type { Cbr, Video } type = Type::Cbr;
    // cbr
    double rate_kbps = 1900.0;
    std::size_t packet_size = 500;
    std::uint64_t packets = 50000;
    // video
    double base_rate_kbps = 774.0;
    int base_qp = 27;
    double frame_rate = 30.0;
    double gain_per_step = 0.15;
    int gop = 30;
    double jitter = 0.2;
    std::size_t mtu = 1500;
    double duration_s = 50.0;
    std::vector<std::pair<int, double>> qp_table; // optional (qp, kb/s) anchors
    std::uint64_t seed_offset = 0;
};

struct CodecSpec {
    enum class Scheme { Tetrys, Fec, None } scheme = Scheme::Tetrys;
    bool adaptive = true;
    int initial_rung = 0;
    int fixed_n = 0;          // tetrys fixed redundancy 1/n when not adaptive
    int fec_k = 0, fec_n = 0; // fixed FEC(k, n) when not adaptive
    std::size_t window_cap = 1024;
};

struct LossSegmentSpec {
    double start_s = 0.0;
    enum class Kind { None, Ge, Bernoulli } kind = Kind::None;
    double p = 0.0;
    double b = 1.0;
};

struct DelaySegmentSpec {
    double start_s = 0.0;
    double one_way_ms = 50.0;
};

// Scripted drop of the nth packet of a kind (1-based), for golden traces.
struct DropRuleSpec {
    enum class Kind { Source, Repair, Ack } kind = Kind::Source;
    std::uint64_t ordinal = 0;
};

struct ChannelSpec {
    std::vector<LossSegmentSpec> loss{{}};
    std::vector<DelaySegmentSpec> delay{{0.0, 50.0}};
    double feedback_loss = 0.0;
    std::vector<DropRuleSpec> drops;
};

struct ControllerSpec {
    double f = 2.0;
    double min_th = 0.9;
    double max_th = 0.99;
    bool condition1 = true;
    bool condition2 = true;
    double min_fec = 0.20;
    double max_fec = 0.25;
    double cooldown_ms = 0.0; // 0: one RTT estimate
    std::string calibration;  // empty: resolve default table path
};

struct TimingSpec {
    double d_max_ms = 150.0;
    double ack_period_ms = 10.0;
    double ack_offset_ms = 0.0; // 0: first tick after one period
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    TrafficSpec traffic;
    CodecSpec codec;
    ChannelSpec channel;
    ControllerSpec controller;
    TimingSpec timing;

    void validate() const; // throws std::invalid_argument with context
    std::string serialize() const;
    static ScenarioConfig parse(std::string_view text, std::string_view origin = "<string>");
    static ScenarioConfig parse_file(const std::filesystem::path& file);

    // "section.key=value"; list keys take ';'-separated entries and replace
    // the whole list.
    void apply_override(std::string_view assignment);
};

std::vector<std::string> preset_names();
ScenarioConfig preset(std::string_view name); // throws on unknown name

// Calibration table resolution order: explicit config path, then the
// TETRYSIM_CALIBRATION environment variable, then data/recovery_coeffs.txt
// (cwd, then the source tree).
std::filesystem::path resolve_calibration_path(const std::string& configured);

} // namespace tetrysim
