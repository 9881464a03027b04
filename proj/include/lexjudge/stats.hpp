#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lexjudge::stats {

struct AsoOptions {
    double alpha = 0.05;
    std::size_t bootstrap_iterations = 1000;
    double dt = 0.001;
    std::uint64_t seed = 1234;
};

struct AsoResult {
    double epsilon_hat = 0.0;  // violation ratio of the W2 distance
    double epsilon_min = 0.0;  // confidence-corrected lower bound
};

// Almost-stochastic-order comparison of score samples. Small epsilon means the
// first sample stochastically dominates the second; 0.5 means indistinguishable.
AsoResult aso_epsilon(const std::vector<double>& scores_a, const std::vector<double>& scores_b,
                      const AsoOptions& options = {});

struct AsoMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> epsilon_min;  // diagonal fixed at 1.0
    double alpha_effective = 0.0;
    std::size_t bootstrap_iterations = 0;
    bool bonferroni = false;
};

using NamedScores = std::pair<std::string, std::vector<double>>;

AsoMatrix aso_matrix(const std::vector<NamedScores>& systems, const AsoOptions& options,
                     bool bonferroni);

std::string render_csv(const AsoMatrix& matrix);

// W1 between two distributions over the same ordered integer support.
double wasserstein_1d(const std::vector<double>& p, const std::vector<double>& q);

struct DistanceTable {
    std::vector<std::string> row_labels;  // test groups
    std::vector<std::string> col_labels;  // train groups
    std::vector<std::vector<double>> values;
};

using NamedDistribution = std::pair<std::string, std::vector<double>>;

DistanceTable distance_table(const std::vector<NamedDistribution>& test_groups,
                             const std::vector<NamedDistribution>& train_groups);

std::string render_csv(const DistanceTable& table);

}  // namespace lexjudge::stats
