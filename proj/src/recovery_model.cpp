#include "tetrysim/recovery_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tetrysim {

namespace {
constexpr double kMinKappa = 0.05;
constexpr double kMinLambda = 1e-9;
} // namespace

double weibull_cdf(double x_ms, const WeibullParams& params) {
    if (x_ms <= 0.0) return 0.0;
    return 1.0 - std::exp(-std::pow(x_ms / params.lambda, params.kappa));
}

double weibull_quantile(double u, const WeibullParams& params) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) throw std::invalid_argument("weibull_quantile: u must be < 1");
    return params.lambda * std::pow(-std::log1p(-u), 1.0 / params.kappa);
}

std::optional<WeibullParams> CoefficientEntry::params_for(double delta_r) const {
    if (delta_r <= 0.0) return std::nullopt;
    WeibullParams w;
    w.lambda = std::max(kMinLambda, a_lambda / std::pow(delta_r, b_lambda));
    w.kappa = std::max(kMinKappa, a_kappa * delta_r + b_kappa);
    return w;
}

const CoefficientEntry* CalibrationTable::nearest(double p_hat, double b_hat, int n) const {
    const CoefficientEntry* best = nullptr;
    double best_d = 0.0;
    for (const auto& e : entries) {
        // (p, b) scaled to comparable ranges; wrong-n entries heavily
        // penalized so same-n neighbors always win when present.
        const double dp = (e.p - p_hat) / 0.10;
        const double db = (e.b - b_hat) / 3.0;
        const double dn = (e.n == n) ? 0.0 : 1e3 + std::abs(e.n - n);
        const double d = dp * dp + db * db + dn;
        if (!best || d < best_d) {
            best = &e;
            best_d = d;
        }
    }
    return best;
}

std::string CalibrationTable::to_text() const {
    std::ostringstream out;
    out << "# p b n a_lambda b_lambda a_kappa b_kappa\n";
    char buf[256];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g %d %.9g %.9g %.9g %.9g\n", e.p, e.b, e.n,
                      e.a_lambda, e.b_lambda, e.a_kappa, e.b_kappa);
        out << buf;
    }
    return out.str();
}

CalibrationTable CalibrationTable::from_text(const std::string& text) {
    CalibrationTable t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        CoefficientEntry e;
        if (!(ls >> e.p >> e.b >> e.n >> e.a_lambda >> e.b_lambda >> e.a_kappa >> e.b_kappa))
            throw std::runtime_error("calibration table: malformed row: " + line);
        t.entries.push_back(e);
    }
    return t;
}

void CalibrationTable::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("calibration table: cannot write " + file.string());
    out << to_text();
}

CalibrationTable CalibrationTable::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("calibration table: cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

WeibullParams fit_weibull_mle(std::span<const double> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("fit_weibull_mle: need at least 2 samples");

    // Scale by the median to keep x^kappa in range.
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double scale = std::max(x[x.size() / 2], 1e-12);
    double mean_ln = 0.0;
    for (auto& v : x) {
        v = std::max(v / scale, 1e-12);
        mean_ln += std::log(v);
    }
    mean_ln /= static_cast<double>(x.size());

    // Profile-likelihood equation g(kappa) = 0, g increasing in kappa:
    //   g(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x)
    const auto g = [&](double k) {
        double num = 0.0, den = 0.0;
        for (double v : x) {
            const double w = std::pow(v, k);
            num += w * std::log(v);
            den += w;
        }
        return num / den - 1.0 / k - mean_ln;
    };

    double lo = 1e-3, hi = 1.0;
    while (g(hi) < 0.0 && hi < 512.0) hi *= 2.0;
    double kappa;
    if (g(hi) < 0.0) {
        kappa = hi; // pathologically concentrated samples
    } else {
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) < 0.0 ? lo : hi) = mid;
        }
        kappa = 0.5 * (lo + hi);
    }

    double sum_pow = 0.0;
    for (double v : x) sum_pow += std::pow(v, kappa);
    const double lambda = std::pow(sum_pow / static_cast<double>(x.size()), 1.0 / kappa);
    return WeibullParams{lambda * scale, kappa};
}

double ks_distance(std::span<const double> samples, const WeibullParams& params) {
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = weibull_cdf(x[i], params);
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need matching x/y with >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw std::invalid_argument("least_squares: degenerate x");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

CoefficientEntry fit_entry(double p, double b, int n, std::span<const GridPointFit> points) {
    if (points.empty()) throw std::invalid_argument("fit_entry: no grid points");
    CoefficientEntry e;
    e.p = p;
    e.b = b;
    e.n = n;
    if (points.size() == 1) {
        e.b_lambda = 1.0;
        e.a_lambda = points[0].params.lambda * points[0].delta_r;
        e.a_kappa = 0.0;
        e.b_kappa = points[0].params.kappa;
        return e;
    }
    std::vector<double> ln_dr, ln_lambda, dr, kappa;
    for (const auto& pt : points) {
        ln_dr.push_back(std::log(pt.delta_r));
        ln_lambda.push_back(std::log(std::max(pt.params.lambda, kMinLambda)));
        dr.push_back(pt.delta_r);
        kappa.push_back(pt.params.kappa);
    }
    const LineFit lam = least_squares(ln_dr, ln_lambda); // ln L = ln a - b ln dR
    e.a_lambda = std::exp(lam.intercept);
    e.b_lambda = -lam.slope;
    const LineFit kap = least_squares(dr, kappa);
    e.a_kappa = kap.slope;
    e.b_kappa = kap.intercept;
    return e;
}

} // namespace tetrysim
