#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tetrysim {

// Recovery-delay model: P[X < x] = 1 - exp(-(x/lambda)^kappa) with
//   lambda(dR) = a_lambda / dR^b_lambda   (scale, ms)
//   kappa(dR)  = a_kappa * dR + b_kappa   (shape)
// where dR = R - p is the margin between redundancy ratio and loss rate.
// The coefficient quadruple depends on the loss pattern (p, b) and on n and
// is fitted offline from fixed-redundancy simulation runs.

struct WeibullParams {
    double lambda = 1.0; // ms
    double kappa = 1.0;
};

double weibull_cdf(double x_ms, const WeibullParams& params);

// Inverse CDF, for synthesizing samples in tests and round-trip checks.
double weibull_quantile(double u, const WeibullParams& params);

struct CoefficientEntry {
    double p = 0.0;
    double b = 1.0;
    int n = 0;
    double a_lambda = 0.0;
    double b_lambda = 1.0;
    double a_kappa = 0.0;
    double b_kappa = 1.0;

    // nullopt when delta_r <= 0: the model is undefined at R <= p and the
    // controller must treat that as a mandatory increase.
    std::optional<WeibullParams> params_for(double delta_r) const;
};

struct CalibrationTable {
    std::vector<CoefficientEntry> entries;

    // Nearest neighbor in (p, b) among entries for this n (falling back to
    // the nearest n if absent). Returns nullptr only when empty.
    const CoefficientEntry* nearest(double p_hat, double b_hat, int n) const;

    void save(const std::filesystem::path& file) const;
    static CalibrationTable load(const std::filesystem::path& file);
    std::string to_text() const;
    static CalibrationTable from_text(const std::string& text);
};

// Maximum-likelihood Weibull fit (profile likelihood in kappa, bisection).
// Samples must be positive; throws std::invalid_argument on fewer than 2.
WeibullParams fit_weibull_mle(std::span<const double> samples);

// Kolmogorov-Smirnov distance between the empirical CDF of samples and the
// fitted distribution.
double ks_distance(std::span<const double> samples, const WeibullParams& params);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

// One calibrated (delta_r -> Weibull) grid point.
struct GridPointFit {
    double delta_r = 0.0;
    WeibullParams params;
    double ks = 0.0;
    std::size_t sample_count = 0;
};

// Cross-point fits: log-log least squares for the lambda power law, plain
// least squares for the kappa line. Needs at least one point; with a single
// point the power-law exponent defaults to 1.
CoefficientEntry fit_entry(double p, double b, int n, std::span<const GridPointFit> points);

} // namespace tetrysim
