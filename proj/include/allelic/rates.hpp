#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "allelic/lambda_model.hpp"

namespace allelic {

// Per-k collision rates of a Lambda-coalescent with b active blocks:
//   lam[k]        rate at which any particular k of the b blocks merge,
//                 lambda_{b,k} = int_0^1 x^(k-2) (1-x)^(b-k) Lambda(dx)
//   group_rate[k] C(b,k) * lambda_{b,k}, the total rate of k-way merges
//   total         lambda_b = sum_k group_rate[k]
// Vectors are indexed by k with entries for k = 2..b (index k, size b+1).
struct RateTable {
    std::int64_t b = 0;
    std::vector<double> lam;
    std::vector<double> group_rate;
    double total = 0.0;
};

// lambda_{b,k}; closed forms for the named families, quadrature for grids.
// All factorial/Beta arithmetic is done in log space.
double collision_rate(const LambdaModel& model, std::int64_t b, std::int64_t k);

RateTable build_rate_table(const LambdaModel& model, std::int64_t b);

// Total merge rate lambda_b. O(1) for Kingman/BS/Star, O(b) otherwise.
double total_merge_rate(const LambdaModel& model, std::int64_t b);

// Inverse-CDF draw of the merge group size j in [2,b] with probability
// group_rate[j]/total from a single uniform variate. Bolthausen-Sznitman,
// Kingman and Star use O(1) closed forms; other families build the table.
std::int64_t sample_merge_size(const LambdaModel& model, std::int64_t b, double u);

// Compact per-b sampling table: cumulative group rates for binary search.
struct MergeCdf {
    std::int64_t b = 0;
    double total = 0.0;
    std::vector<double> cumulative; // cumulative[k] = sum_{j<=k} group_rate[j], k = 2..b
    std::int64_t sample(double u) const;
};

// Read-mostly LRU cache of MergeCdf tables keyed by b, shared by replicate
// workers. Block counts decrease monotonically within a run, so hit rates
// across replicates are high. Only families without closed-form samplers
// (Beta, GridDensity) go through the cache.
class RateTableCache {
public:
    explicit RateTableCache(const LambdaModel& model, std::size_t max_entries = 20000);

    std::shared_ptr<const MergeCdf> get(std::int64_t b);
    const LambdaModel& model() const { return model_; }

private:
    LambdaModel model_;
    std::size_t max_entries_;
    std::mutex mutex_;
    std::list<std::int64_t> lru_;
    struct Entry {
        std::shared_ptr<const MergeCdf> cdf;
        std::list<std::int64_t>::iterator lru_pos;
    };
    std::unordered_map<std::int64_t, Entry> entries_;
};

} // namespace allelic
