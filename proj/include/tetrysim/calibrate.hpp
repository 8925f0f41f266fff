#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tetrysim/recovery_model.hpp"

namespace tetrysim {

// Offline calibration of the recovery-delay model: for each (p, b, n) grid
// entry, run the fixed-redundancy CBR scenario over a grid of dR = 1/n - p'
// margins, fit a Weibull per margin by maximum likelihood, then fit the
// lambda power law and kappa line across margins.
struct CalibrationOptions {
    std::vector<double> p_grid{0.01, 0.02, 0.03, 0.05, 0.10};
    std::vector<double> b_grid{1.0, 2.0, 3.0};
    std::vector<int> n_grid{10, 5, 3, 2};
    std::uint64_t seed = 1;
    std::size_t min_samples = 100;     // below this the grid point is skipped
    std::size_t target_samples = 1200; // sizes the per-point packet budget
    std::uint64_t max_packets = 300000;
    int seeds_per_point = 2;
    double rate_kbps = 1900.0;
    std::size_t packet_size = 500;
};

struct CalibrationPointDiag {
    double p_target = 0, b = 0;
    int n = 0;
    double p_used = 0;
    double delta_r = 0;
    std::size_t samples = 0;
    WeibullParams params;
    double ks = 0;
    bool skipped = false;
};

struct CalibrationResult {
    CalibrationTable table;
    std::vector<CalibrationPointDiag> points;
    std::size_t skipped_points = 0;
};

// Independent entry runs fan out over OpenMP threads; the result is
// deterministic in the options (enumeration order is fixed).
CalibrationResult run_calibration(const CalibrationOptions& opt, std::ostream* progress = nullptr);

// Recovery-delay samples from one fixed-redundancy CBR run (exposed for the
// calibration quality tests).
std::vector<double> fixed_run_recovery_samples(double p, double b, int n, std::uint64_t packets,
                                               std::uint64_t seed, double rate_kbps = 1900.0,
                                               std::size_t packet_size = 500);

} // namespace tetrysim
