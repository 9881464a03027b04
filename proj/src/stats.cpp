#include "lexjudge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lexjudge/error.hpp"
#include "lexjudge/rng.hpp"
#include "lexjudge/util.hpp"

namespace lexjudge::stats {

namespace {

// Acklam's rational approximation of the standard normal quantile.
double normal_ppf(double p) {
    if (p <= 0.0 || p >= 1.0) throw Error(ErrorCode::Invalid, "normal_ppf needs p in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double low = 0.02425, high = 1.0 - low;
    double q, r;
    if (p < low) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > high) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Empirical quantile: sorted[ceil(n * p) - 1], clipped to the sample range.
double quantile(const std::vector<double>& sorted, double p) {
    auto n = std::ptrdiff_t(sorted.size());
    auto index = std::ptrdiff_t(std::ceil(double(n) * p)) - 1;
    index = std::clamp<std::ptrdiff_t>(index, 0, n - 1);
    return sorted[std::size_t(index)];
}

// Share of the squared W2 distance where the second sample's quantiles exceed
// the first's. 0.5 when the distance vanishes. Also reports the distance so
// callers can detect identical empirical quantile functions.
double violation_ratio(std::vector<double> a, std::vector<double> b, double dt,
                       double* w2_out = nullptr) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double w2 = 0.0, violation = 0.0;
    for (double t = 0.0; t < 1.0; t += dt) {
        double diff = quantile(b, t) - quantile(a, t);
        w2 += diff * diff * dt;
        if (diff > 0.0) violation += diff * diff * dt;
    }
    if (w2_out) *w2_out = w2;
    if (w2 == 0.0) return 0.5;
    return violation / w2;
}

std::vector<double> resample(const std::vector<double>& values, Rng& rng) {
    std::vector<double> out(values.size());
    for (auto& v : out) v = values[rng.uniform_int(values.size())];
    return out;
}

}  // namespace

AsoResult aso_epsilon(const std::vector<double>& scores_a, const std::vector<double>& scores_b,
                      const AsoOptions& options) {
    if (scores_a.size() < 2 || scores_b.size() < 2)
        throw Error(ErrorCode::Invalid, "aso_epsilon needs at least two scores per sample");
    if (options.alpha <= 0.0 || options.alpha >= 1.0)
        throw Error(ErrorCode::Invalid, "aso_epsilon needs alpha in (0, 1)");
    for (double v : scores_a)
        if (!std::isfinite(v)) throw Error(ErrorCode::Invalid, "aso_epsilon needs finite scores");
    for (double v : scores_b)
        if (!std::isfinite(v)) throw Error(ErrorCode::Invalid, "aso_epsilon needs finite scores");

    AsoResult result;
    double w2 = 0.0;
    result.epsilon_hat = violation_ratio(scores_a, scores_b, options.dt, &w2);
    if (w2 == 0.0) {
        // Equal empirical quantile functions: no dominance either way.
        result.epsilon_min = 0.5;
        return result;
    }

    double n = double(scores_a.size()), m = double(scores_b.size());
    double scale = std::sqrt(n * m / (n + m));

    Rng rng = Rng::stream(options.seed, "aso_bootstrap");
    std::vector<double> samples;
    samples.reserve(options.bootstrap_iterations);
    for (std::size_t i = 0; i < options.bootstrap_iterations; ++i) {
        auto a = resample(scores_a, rng);
        auto b = resample(scores_b, rng);
        samples.push_back(scale * (violation_ratio(std::move(a), std::move(b), options.dt) -
                                   result.epsilon_hat));
    }
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= double(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= double(samples.size());
    double sigma = std::sqrt(var);

    double corrected =
        result.epsilon_hat - (sigma / scale) * normal_ppf(1.0 - options.alpha);
    result.epsilon_min = std::clamp(corrected, 0.0, 1.0);
    return result;
}

AsoMatrix aso_matrix(const std::vector<NamedScores>& systems, const AsoOptions& options,
                     bool bonferroni) {
    if (systems.size() < 2) throw Error(ErrorCode::Invalid, "aso_matrix needs at least two systems");

    AsoMatrix matrix;
    for (const auto& [name, _] : systems) matrix.names.push_back(name);

    std::size_t pairs = systems.size() * (systems.size() - 1);
    matrix.alpha_effective = bonferroni ? options.alpha / double(pairs) : options.alpha;
    matrix.bootstrap_iterations = options.bootstrap_iterations;
    matrix.bonferroni = bonferroni;

    AsoOptions cell_options = options;
    cell_options.alpha = matrix.alpha_effective;

    matrix.epsilon_min.assign(systems.size(), std::vector<double>(systems.size(), 1.0));
    for (std::size_t i = 0; i < systems.size(); ++i)
        for (std::size_t j = 0; j < systems.size(); ++j) {
            if (i == j) continue;
            matrix.epsilon_min[i][j] =
                aso_epsilon(systems[i].second, systems[j].second, cell_options).epsilon_min;
        }
    return matrix;
}

std::string render_csv(const AsoMatrix& matrix) {
    std::ostringstream out;
    char caption[96];
    std::snprintf(caption, sizeof(caption), "# alpha=%g bootstrap=%zu bonferroni=%s\n",
                  matrix.alpha_effective, matrix.bootstrap_iterations,
                  matrix.bonferroni ? "on" : "off");
    out << caption;
    out << "system";
    for (const auto& name : matrix.names) out << "," << name;
    out << "\n";
    char buffer[32];
    for (std::size_t i = 0; i < matrix.names.size(); ++i) {
        out << matrix.names[i];
        for (std::size_t j = 0; j < matrix.names.size(); ++j) {
            std::snprintf(buffer, sizeof(buffer), "%.2f",
                          util::round_half_up(matrix.epsilon_min[i][j], 2));
            out << "," << buffer;
        }
        out << "\n";
    }
    return out.str();
}

double wasserstein_1d(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.empty() || p.size() != q.size())
        throw Error(ErrorCode::Invalid, "wasserstein_1d needs equal-length nonempty distributions");
    double sum_p = 0.0, sum_q = 0.0;
    for (double v : p) {
        if (v < 0.0) throw Error(ErrorCode::Invalid, "wasserstein_1d needs nonnegative mass");
        sum_p += v;
    }
    for (double v : q) {
        if (v < 0.0) throw Error(ErrorCode::Invalid, "wasserstein_1d needs nonnegative mass");
        sum_q += v;
    }
    if (std::abs(sum_p - 1.0) > 1e-6 || std::abs(sum_q - 1.0) > 1e-6)
        throw Error(ErrorCode::Invalid, "wasserstein_1d needs distributions summing to 1");

    double cdf_p = 0.0, cdf_q = 0.0, dist = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        cdf_p += p[k];
        cdf_q += q[k];
        dist += std::abs(cdf_p - cdf_q);
    }
    return dist;
}

DistanceTable distance_table(const std::vector<NamedDistribution>& test_groups,
                             const std::vector<NamedDistribution>& train_groups) {
    if (test_groups.empty() || train_groups.empty())
        throw Error(ErrorCode::Invalid, "distance_table needs test and train groups");
    DistanceTable table;
    for (const auto& [name, _] : test_groups) table.row_labels.push_back(name);
    for (const auto& [name, _] : train_groups) table.col_labels.push_back(name);
    for (const auto& [_, test_dist] : test_groups) {
        std::vector<double> row;
        for (const auto& [__, train_dist] : train_groups)
            row.push_back(wasserstein_1d(test_dist, train_dist));
        table.values.push_back(std::move(row));
    }
    return table;
}

std::string render_csv(const DistanceTable& table) {
    std::ostringstream out;
    out << "test\\train";
    for (const auto& name : table.col_labels) out << "," << name;
    out << "\n";
    for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
        out << table.row_labels[r];
        for (double v : table.values[r]) out << "," << util::format_dotted_2dp(v);
        out << "\n";
    }
    return out.str();
}

}  // namespace lexjudge::stats
