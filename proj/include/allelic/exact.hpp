#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "allelic/lambda_model.hpp"
#include "allelic/partitions.hpp"

namespace allelic {

// Exact law of the allele frequency spectrum for a sample of size n:
// probs[cfg] = q(cfg). residual = |sum of probs - 1| at build time.
struct SpectrumDistribution {
    std::int64_t n = 0;
    double rho = 0.0;
    LambdaModel model;
    std::unordered_map<AlleleConfig, double, AlleleConfigHash> probs;
    double residual = 0.0;

    double prob(const AlleleConfig& cfg) const {
        auto it = probs.find(cfg);
        return it == probs.end() ? 0.0 : it->second;
    }
};

// Moehle's recursion for q(m), solved top-down with memoisation. The freeze
// term recurses to sample size n-1 and each merge term to n-i, so the
// recursion is well-founded in n with base case q((1)) = 1.
class MoehleSolver {
public:
    MoehleSolver(const LambdaModel& model, double rho);

    double q(const AlleleConfig& cfg);
    SpectrumDistribution distribution(std::int64_t n);

private:
    LambdaModel model_;
    double rho_;
    std::unordered_map<AlleleConfig, double, AlleleConfigHash> memo_;
    std::unordered_map<std::int64_t, std::vector<double>> group_rates_; // per n
    const std::vector<double>& group_rates(std::int64_t n);
};

double moehle_q(const LambdaModel& model, double rho, const AlleleConfig& cfg);

// Ewens sampling formula, theta = 2*rho, evaluated in log space.
double ewens_q(double theta, const AlleleConfig& cfg);

SpectrumDistribution ewens_distribution(double theta, std::int64_t n);

// Independent oracle: builds the full continuous-time jump chain of the
// coalescent with freeze on states (active size multiset, frozen config) and
// propagates absorption probabilities level by level in the active block
// count. Guarded at n <= 9.
SpectrumDistribution absorption_oracle(const LambdaModel& model, double rho, std::int64_t n);

} // namespace allelic
