#include "allelic/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace allelic {

FreezeChain::FreezeChain(const LambdaModel& model, double rho, std::int64_t n, const SimOptions& opt, Rng& rng)
    : model_(model), rho_(rho), n_(n), opt_(opt), rng_(rng) {
    model_.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("simulate_freeze requires rho > 0");
    if (n < 1) throw std::invalid_argument("simulate_freeze requires n >= 1");
    if (opt_.mode == SimMode::Truncated && opt_.d < 1) throw std::invalid_argument("truncated mode requires d >= 1");
    if (!opt_.sample_times.empty()) {
        if (opt_.mode != SimMode::Truncated) {
            throw std::invalid_argument("trajectory sampling requires truncated mode");
        }
        if (n < 2) throw std::invalid_argument("trajectory sampling requires n >= 2");
        if (!std::is_sorted(opt_.sample_times.begin(), opt_.sample_times.end())) {
            throw std::invalid_argument("sample_times must be increasing");
        }
        trajectory_.d = opt_.d;
        trajectory_.rho = rho_;
    }
    if (opt_.mode == SimMode::Truncated) {
        x_.assign(static_cast<std::size_t>(opt_.d), 0);
        x_[0] = n;
    } else {
        counts_[1] = n;
    }
    active_ = n;
    if ((model_.family == Family::Beta || model_.family == Family::GridDensity) && !opt_.cache) {
        opt_.cache = std::make_shared<RateTableCache>(model_);
    }
}

double FreezeChain::total_merge_rate_at(std::int64_t blocks) {
    if (blocks < 2) return 0.0;
    const double b = static_cast<double>(blocks);
    switch (model_.family) {
        case Family::Kingman: return 0.5 * b * (b - 1.0);
        case Family::Star: return 1.0;
        case Family::BolthausenSznitman: return b - 1.0;
        default: return opt_.cache->get(blocks)->total;
    }
}

std::int64_t FreezeChain::draw_merge_size(std::int64_t blocks) {
    const double u = rng_.uniform();
    switch (model_.family) {
        case Family::Kingman: return 2;
        case Family::Star: return blocks;
        case Family::BolthausenSznitman: {
            const double t = (1.0 - u) + u / static_cast<double>(blocks);
            const double j = std::ceil(1.0 / t);
            return std::clamp(static_cast<std::int64_t>(j), std::int64_t{2}, blocks);
        }
        default: return opt_.cache->get(blocks)->sample(u);
    }
}

bool FreezeChain::done() const {
    if (active_ > 0) return false;
    return !(opt_.coupled_sites && ghosts_ >= 2);
}

std::vector<double> FreezeChain::truncated_coordinates(std::int64_t d) const {
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(d) + 2, 0.0);
    if (opt_.mode == SimMode::Truncated) {
        if (d > opt_.d) throw std::invalid_argument("d exceeds the tracked cutoff");
        for (std::int64_t k = 1; k <= d; ++k) v[static_cast<std::size_t>(k - 1)] = static_cast<double>(x_[static_cast<std::size_t>(k - 1)]);
        double tail = static_cast<double>(y_tail_);
        for (std::int64_t k = d + 1; k <= opt_.d; ++k) tail += static_cast<double>(x_[static_cast<std::size_t>(k - 1)]);
        v[static_cast<std::size_t>(d)] = tail;
    } else {
        double tail = 0.0;
        for (const auto& [size, count] : counts_) {
            if (size <= d) {
                v[static_cast<std::size_t>(size - 1)] = static_cast<double>(count);
            } else {
                tail += static_cast<double>(count);
            }
        }
        v[static_cast<std::size_t>(d)] = tail;
    }
    auto it = frozen_.find(d);
    v[static_cast<std::size_t>(d) + 1] = it == frozen_.end() ? 0.0 : static_cast<double>(it->second);
    return v;
}

TruncatedState FreezeChain::truncated_state() const {
    if (opt_.mode != SimMode::Truncated) throw std::logic_error("truncated_state is a truncated-mode observer");
    TruncatedState s;
    s.x = x_;
    s.y = y_tail_;
    s.z.assign(static_cast<std::size_t>(opt_.d), 0);
    for (const auto& [size, count] : frozen_) s.z[static_cast<std::size_t>(size - 1)] = count;
    s.z_tail = frozen_tail_;
    s.t = time_;
    return s;
}

BlockSpectrum FreezeChain::active_spectrum() const {
    if (opt_.mode != SimMode::Full) throw std::logic_error("active_spectrum is a full-mode observer");
    BlockSpectrum s;
    s.counts = counts_;
    for (const auto& [size, count] : counts_) {
        s.total_blocks += count;
        s.total_mass += size * count;
    }
    return s;
}

void FreezeChain::freeze_event(std::uint64_t pick) {
    // pick indexes a uniformly chosen active block; classes in ascending size
    std::int64_t size = 0; // 0 = tail bucket
    if (opt_.mode == SimMode::Truncated) {
        for (std::int64_t k = 1; k <= opt_.d; ++k) {
            const auto c = static_cast<std::uint64_t>(x_[static_cast<std::size_t>(k - 1)]);
            if (pick < c) {
                size = k;
                break;
            }
            pick -= c;
        }
        if (size > 0) {
            --x_[static_cast<std::size_t>(size - 1)];
            ++frozen_[size];
        } else {
            --y_tail_;
            ++frozen_tail_;
        }
    } else {
        for (auto& [s, c] : counts_) {
            if (pick < static_cast<std::uint64_t>(c)) {
                size = s;
                break;
            }
            pick -= static_cast<std::uint64_t>(c);
        }
        auto it = counts_.find(size);
        if (--it->second == 0) counts_.erase(it);
        ++frozen_[size];
    }
    --active_;
    ++n_total_;
}

void FreezeChain::merge_event(std::int64_t j) {
    // sequential uniform draws without replacement; ghosts sit after all
    // active classes so full and truncated walks agree on the stream
    std::int64_t ghost_taken = 0;
    if (opt_.mode == SimMode::Truncated) {
        std::vector<std::int64_t> taken(static_cast<std::size_t>(opt_.d) + 1, 0); // classes + tail
        std::int64_t remaining = active_ + ghosts_;
        std::int64_t mass = 0;
        bool tail_participant = false;
        std::int64_t active_taken = 0;
        for (std::int64_t draw = 0; draw < j; ++draw) {
            std::uint64_t r = rng_.uniform_below(static_cast<std::uint64_t>(remaining));
            bool assigned = false;
            for (std::int64_t k = 1; k <= opt_.d && !assigned; ++k) {
                const auto avail = static_cast<std::uint64_t>(x_[static_cast<std::size_t>(k - 1)] - taken[static_cast<std::size_t>(k - 1)]);
                if (r < avail) {
                    ++taken[static_cast<std::size_t>(k - 1)];
                    mass += k;
                    ++active_taken;
                    assigned = true;
                } else {
                    r -= avail;
                }
            }
            if (!assigned) {
                const auto avail = static_cast<std::uint64_t>(y_tail_ - taken[static_cast<std::size_t>(opt_.d)]);
                if (r < avail) {
                    ++taken[static_cast<std::size_t>(opt_.d)];
                    tail_participant = true;
                    ++active_taken;
                } else {
                    ++ghost_taken;
                }
            }
            --remaining;
        }
        for (std::int64_t k = 1; k <= opt_.d; ++k) x_[static_cast<std::size_t>(k - 1)] -= taken[static_cast<std::size_t>(k - 1)];
        y_tail_ -= taken[static_cast<std::size_t>(opt_.d)];
        ghosts_ -= ghost_taken;
        if (active_taken > 0) {
            // the merged block is active; uncovered mass comes only from the
            // active participants
            if (tail_participant || mass > opt_.d) {
                ++y_tail_;
            } else {
                ++x_[static_cast<std::size_t>(mass - 1)];
            }
            active_ -= active_taken - 1;
        } else {
            ++ghosts_; // pure ghost merge
        }
    } else {
        std::vector<std::pair<std::int64_t, std::int64_t>> taken; // (size, count)
        const auto taken_of = [&](std::int64_t size) {
            for (const auto& [s, c] : taken) {
                if (s == size) return c;
            }
            return std::int64_t{0};
        };
        std::int64_t remaining = active_ + ghosts_;
        std::int64_t mass = 0;
        std::int64_t active_taken = 0;
        for (std::int64_t draw = 0; draw < j; ++draw) {
            std::uint64_t r = rng_.uniform_below(static_cast<std::uint64_t>(remaining));
            bool assigned = false;
            for (const auto& [size, count] : counts_) {
                const auto avail = static_cast<std::uint64_t>(count - taken_of(size));
                if (r < avail) {
                    bool found = false;
                    for (auto& [s, c] : taken) {
                        if (s == size) {
                            ++c;
                            found = true;
                            break;
                        }
                    }
                    if (!found) taken.emplace_back(size, 1);
                    mass += size;
                    ++active_taken;
                    assigned = true;
                    break;
                }
                r -= avail;
            }
            if (!assigned) ++ghost_taken;
            --remaining;
        }
        for (const auto& [size, cnt] : taken) {
            auto it = counts_.find(size);
            it->second -= cnt;
            if (it->second == 0) counts_.erase(it);
        }
        ghosts_ -= ghost_taken;
        if (active_taken > 0) {
            ++counts_[mass];
            active_ -= active_taken - 1;
        } else {
            ++ghosts_;
        }
    }
}

void FreezeChain::ghost_phase_step() {
    const double rate = total_merge_rate_at(ghosts_);
    const double dt = rng_.exponential(rate);
    time_ += dt;
    tree_length_ += static_cast<double>(ghosts_) * dt;
    s_count_ += rng_.poisson(rho_ * static_cast<double>(ghosts_) * dt);
    const std::int64_t j = draw_merge_size(ghosts_);
    ghosts_ -= j - 1;
    ++events_;
}

void FreezeChain::step() {
    if (done()) throw std::logic_error("step() on an absorbed chain");
    if (active_ == 0) {
        ghost_phase_step();
        return;
    }
    const std::int64_t lineages = active_ + (opt_.coupled_sites ? ghosts_ : 0);
    const double merge_rate = total_merge_rate_at(lineages);
    const double freeze_rate = rho_ * static_cast<double>(active_);
    const double total = merge_rate + freeze_rate;
    const double dt = rng_.exponential(total);

    if (!opt_.sample_times.empty()) {
        const double log_n = std::log(static_cast<double>(n_));
        while (grid_pos_ < opt_.sample_times.size() &&
               opt_.sample_times[grid_pos_] / log_n < time_ + dt) {
            trajectory_.times.push_back(opt_.sample_times[grid_pos_]);
            trajectory_.values.push_back(
                rescale_truncated_state(truncated_coordinates(opt_.d), n_, opt_.d));
            ++grid_pos_;
        }
    }

    time_ += dt;
    tree_length_ += static_cast<double>(lineages) * dt;
    if (opt_.coupled_sites && ghosts_ > 0 && lineages >= 2) {
        s_count_ += rng_.poisson(rho_ * static_cast<double>(ghosts_) * dt);
    }

    const double u = rng_.uniform();
    if (u * total < freeze_rate) {
        const std::uint64_t pick = rng_.uniform_below(static_cast<std::uint64_t>(active_));
        freeze_event(pick);
        if (opt_.coupled_sites) {
            ++ghosts_;
            // a freeze while other lineages exist is a mutation on the tree
            // skeleton; the last block's freeze falls above the MRCA
            if (lineages >= 2) {
                ++s_count_;
                ++n_skeleton_;
            }
        }
    } else {
        const std::int64_t j = draw_merge_size(lineages);
        merge_event(j);
    }
    ++events_;
}

RunResult FreezeChain::result() const {
    RunResult r;
    r.n = n_;
    r.spectrum = frozen_;
    r.tail_frozen = frozen_tail_;
    r.n_total = n_total_;
    r.n_skeleton = opt_.coupled_sites ? n_skeleton_ : n_total_;
    r.s_count = s_count_;
    r.tree_length = tree_length_;
    r.event_count = events_;
    r.trajectory = trajectory_;
    // the state is constant past absorption; flush trailing grid points
    if (done()) {
        while (r.trajectory.times.size() < opt_.sample_times.size()) {
            r.trajectory.times.push_back(opt_.sample_times[r.trajectory.times.size()]);
            r.trajectory.values.push_back(rescale_truncated_state(truncated_coordinates(opt_.d), n_, opt_.d));
        }
    }
    return r;
}

RunResult simulate_freeze(const LambdaModel& model, double rho, std::int64_t n, const SimOptions& opt,
                          std::uint64_t seed) {
    Rng rng(seed);
    FreezeChain chain(model, rho, n, opt, rng);
    while (!chain.done()) chain.step();
    RunResult r = chain.result();
    r.seed = seed;
    return r;
}

TreeStats simulate_tree_stats(const LambdaModel& model, double rho, std::int64_t n, std::uint64_t seed,
                              const std::shared_ptr<RateTableCache>& cache) {
    model.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("simulate_tree_stats requires rho > 0");
    if (n < 2) throw std::invalid_argument("simulate_tree_stats requires n >= 2");
    Rng rng(seed);
    std::shared_ptr<RateTableCache> local = cache;
    if ((model.family == Family::Beta || model.family == Family::GridDensity) && !local) {
        local = std::make_shared<RateTableCache>(model);
    }
    std::int64_t blocks = n;
    double length = 0.0;
    while (blocks >= 2) {
        double rate = 0.0;
        switch (model.family) {
            case Family::Kingman: rate = 0.5 * static_cast<double>(blocks) * static_cast<double>(blocks - 1); break;
            case Family::Star: rate = 1.0; break;
            case Family::BolthausenSznitman: rate = static_cast<double>(blocks - 1); break;
            default: rate = local->get(blocks)->total; break;
        }
        length += static_cast<double>(blocks) * rng.exponential(rate);
        const double u = rng.uniform();
        std::int64_t j = 2;
        switch (model.family) {
            case Family::Kingman: j = 2; break;
            case Family::Star: j = blocks; break;
            case Family::BolthausenSznitman: {
                const double t = (1.0 - u) + u / static_cast<double>(blocks);
                j = std::clamp(static_cast<std::int64_t>(std::ceil(1.0 / t)), std::int64_t{2}, blocks);
                break;
            }
            default: j = local->get(blocks)->sample(u); break;
        }
        blocks -= j - 1;
    }
    TreeStats stats;
    stats.tree_length = length;
    stats.s_count = rng.poisson(rho * length);
    return stats;
}

AlleleConfig tree_allelic_oracle(const LambdaModel& model, double rho, std::int64_t n, std::uint64_t seed) {
    model.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("tree_allelic_oracle requires rho > 0");
    if (n < 1) throw std::invalid_argument("tree_allelic_oracle requires n >= 1");
    if (n > 10) throw std::runtime_error("tree_allelic_oracle guarded at n <= 10");

    struct Node {
        double birth = 0.0;
        double death = -1.0; // -1 = still a lineage tip of the shrinking forest
        std::int64_t parent = -1;
        std::int64_t mutations = 0;
    };
    Rng rng(seed);
    std::vector<Node> nodes(static_cast<std::size_t>(n));
    std::vector<std::int64_t> lineages(static_cast<std::size_t>(n));
    std::iota(lineages.begin(), lineages.end(), 0);

    double t = 0.0;
    while (lineages.size() >= 2) {
        const auto blocks = static_cast<std::int64_t>(lineages.size());
        const RateTable table = build_rate_table(model, blocks);
        t += rng.exponential(table.total);
        const std::int64_t j = sample_merge_size(model, blocks, rng.uniform());
        // uniform j-subset by partial Fisher-Yates
        for (std::int64_t i = 0; i < j; ++i) {
            const auto r = static_cast<std::size_t>(i) + rng.uniform_below(lineages.size() - static_cast<std::size_t>(i));
            std::swap(lineages[static_cast<std::size_t>(i)], lineages[r]);
        }
        Node merged;
        merged.birth = t;
        const auto merged_idx = static_cast<std::int64_t>(nodes.size());
        for (std::int64_t i = 0; i < j; ++i) {
            auto& child = nodes[static_cast<std::size_t>(lineages[static_cast<std::size_t>(i)])];
            child.death = t;
            child.parent = merged_idx;
        }
        nodes.push_back(merged);
        lineages.erase(lineages.begin(), lineages.begin() + j);
        lineages.push_back(merged_idx);
    }

    // Poisson mutations per branch; the root stub carries one almost surely
    for (auto& node : nodes) {
        if (node.parent < 0) {
            node.mutations = 1;
        } else {
            node.mutations = rng.poisson(rho * (node.death - node.birth));
        }
    }

    // each leaf joins the block of its most recent mutation
    std::map<std::int64_t, std::int64_t> block_sizes;
    for (std::int64_t leaf = 0; leaf < n; ++leaf) {
        std::int64_t at = leaf;
        while (nodes[static_cast<std::size_t>(at)].mutations == 0) at = nodes[static_cast<std::size_t>(at)].parent;
        ++block_sizes[at];
    }
    std::map<std::int64_t, std::int64_t> spectrum;
    for (const auto& [node, size] : block_sizes) ++spectrum[size];
    std::vector<std::int64_t> m;
    if (!spectrum.empty()) {
        m.assign(static_cast<std::size_t>(spectrum.rbegin()->first), 0);
        for (const auto& [size, count] : spectrum) m[static_cast<std::size_t>(size - 1)] = count;
    }
    return AlleleConfig(std::move(m));
}

std::vector<std::vector<std::int64_t>> paintbox_sample(const std::vector<double>& frequencies, std::int64_t n,
                                                       std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("paintbox requires n >= 0");
    double total = 0.0;
    double prev = 1.0;
    for (double f : frequencies) {
        if (f < 0.0 || f > prev + 1e-12) throw std::domain_error("frequencies must be decreasing in [0,1]");
        prev = f;
        total += f;
    }
    if (total > 1.0 + 1e-12) throw std::domain_error("frequencies must sum to at most 1");

    std::vector<double> cumulative(frequencies.size());
    double c = 0.0;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        c += frequencies[i];
        cumulative[i] = c;
    }

    Rng rng(seed);
    std::vector<std::vector<std::int64_t>> interval_blocks(frequencies.size());
    std::vector<std::int64_t> dust;
    for (std::int64_t i = 1; i <= n; ++i) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) {
            dust.push_back(i);
        } else {
            interval_blocks[static_cast<std::size_t>(it - cumulative.begin())].push_back(i);
        }
    }
    std::vector<std::vector<std::int64_t>> blocks;
    for (auto& b : interval_blocks) {
        if (!b.empty()) blocks.push_back(std::move(b));
    }
    for (auto i : dust) blocks.push_back({i});
    return blocks;
}

AlleleConfig spectrum_of_blocks(const std::vector<std::vector<std::int64_t>>& blocks) {
    std::vector<std::int64_t> m;
    for (const auto& b : blocks) {
        const auto size = static_cast<std::int64_t>(b.size());
        if (size < 1) continue;
        if (size > static_cast<std::int64_t>(m.size())) m.resize(static_cast<std::size_t>(size), 0);
        ++m[static_cast<std::size_t>(size - 1)];
    }
    return AlleleConfig(std::move(m));
}

} // namespace allelic
