#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "allelic/fluid.hpp"
#include "allelic/lambda_model.hpp"
#include "allelic/partitions.hpp"
#include "allelic/rates.hpp"
#include "allelic/rng.hpp"

namespace allelic {

enum class SimMode { Full, Truncated };

struct SimOptions {
    SimMode mode = SimMode::Full;
    std::int64_t d = 1;        // truncation cutoff in Truncated mode
    bool coupled_sites = false; // track ghost lineages for segregating sites
    std::vector<double> sample_times; // rescaled trajectory grid (Truncated only)
    std::shared_ptr<RateTableCache> cache; // merge-size tables for Beta/Grid
};

// Active state snapshot: counts of active blocks by size.
struct BlockSpectrum {
    std::map<std::int64_t, std::int64_t> counts;
    std::int64_t total_blocks = 0;
    std::int64_t total_mass = 0; // not maintained in truncated mode
};

// Snapshot of the truncated chain (X_1..X_d, Y_{d+1}, Z_1..Z_d, tail
// freezes, elapsed time). Absorption is exactly x == 0 and y == 0.
struct TruncatedState {
    std::vector<std::int64_t> x;
    std::int64_t y = 0;
    std::vector<std::int64_t> z;
    std::int64_t z_tail = 0;
    double t = 0.0;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    std::map<std::int64_t, std::int64_t> spectrum; // allelic blocks by size (truncated: sizes <= d)
    std::int64_t tail_frozen = 0;  // frozen blocks of size > d (truncated mode)
    std::int64_t n_total = 0;      // N(n), all frozen blocks
    std::int64_t n_skeleton = 0;   // freezes on the tree skeleton (== n_total unless coupled)
    std::int64_t s_count = 0;      // segregating sites (coupled mode only)
    double tree_length = 0.0;      // active-lineage length; coupled: full tree length to the MRCA
    std::int64_t event_count = 0;
    FluidPath trajectory;          // filled when sample_times given
};

// Event-driven coalescent-with-freeze chain. Exposed so tests can inspect the
// state event by event; simulate_freeze drives it to absorption.
//
// Randomness is consumed identically in full and truncated mode: one
// exponential per epoch, one uniform for the freeze/merge split, one uniform
// per merge for the group size, one uniform per participant, one uniform per
// freeze for the block choice. Block choices walk size classes in ascending
// order (then the tail bucket, then ghosts), so both modes make the same
// decisions from the same stream.
class FreezeChain {
public:
    FreezeChain(const LambdaModel& model, double rho, std::int64_t n, const SimOptions& opt, Rng& rng);

    bool done() const;
    void step();

    std::int64_t active_blocks() const { return active_; }
    std::int64_t ghost_blocks() const { return ghosts_; }
    double time() const { return time_; }
    std::int64_t events() const { return events_; }

    // (X_1..X_d, Y_{d+1}, Z_d) for any d <= the tracked cutoff
    std::vector<double> truncated_coordinates(std::int64_t d) const;

    TruncatedState truncated_state() const; // truncated mode only
    BlockSpectrum active_spectrum() const;  // full mode only

    RunResult result() const;

private:
    void freeze_event(std::uint64_t pick);
    void merge_event(std::int64_t j);
    void ghost_phase_step();

    const LambdaModel model_;
    double rho_;
    std::int64_t n_;
    SimOptions opt_;
    Rng& rng_;

    // full-mode state
    std::map<std::int64_t, std::int64_t> counts_;
    // truncated-mode state: x_[k-1] = X_k for k = 1..d, plus tail bucket
    std::vector<std::int64_t> x_;
    std::int64_t y_tail_ = 0;

    std::map<std::int64_t, std::int64_t> frozen_; // spectrum (sizes <= d in truncated mode)
    std::int64_t frozen_tail_ = 0;
    std::int64_t active_ = 0;
    std::int64_t ghosts_ = 0;

    double time_ = 0.0;
    double tree_length_ = 0.0;
    std::int64_t s_count_ = 0;
    std::int64_t n_skeleton_ = 0;
    std::int64_t n_total_ = 0;
    std::int64_t events_ = 0;

    std::size_t grid_pos_ = 0;
    FluidPath trajectory_;

    double total_merge_rate_at(std::int64_t blocks);
    std::int64_t draw_merge_size(std::int64_t blocks);
};

RunResult simulate_freeze(const LambdaModel& model, double rho, std::int64_t n, const SimOptions& opt,
                          std::uint64_t seed);

struct TreeStats {
    double tree_length = 0.0;
    std::int64_t s_count = 0;
};

// Plain coalescent (no freeze) run to a single block; S(n) is Poisson with
// mean rho * tree length.
TreeStats simulate_tree_stats(const LambdaModel& model, double rho, std::int64_t n, std::uint64_t seed,
                              const std::shared_ptr<RateTableCache>& cache = nullptr);

// Distributional oracle: labelled coalescent tree with a Poisson(rho)
// mutation process on every branch, allelic partition read off by tracing
// each leaf to its most recent mutation. The root stub always carries a
// mutation (the process continues above the root until it does). n <= 10.
AlleleConfig tree_allelic_oracle(const LambdaModel& model, double rho, std::int64_t n, std::uint64_t seed);

// Paintbox partition of [n] from ranked frequencies; indices landing in the
// dust interval become singletons. Blocks are listed by frequency interval,
// then dust singletons in increasing index order.
std::vector<std::vector<std::int64_t>> paintbox_sample(const std::vector<double>& frequencies, std::int64_t n,
                                                       std::uint64_t seed);

AlleleConfig spectrum_of_blocks(const std::vector<std::vector<std::int64_t>>& blocks);

} // namespace allelic
