#include "allelic/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "allelic/math.hpp"

namespace allelic {

namespace {

void check_bk(std::int64_t b, std::int64_t k) {
    if (b < 2) throw std::domain_error("collision rate requires b >= 2");
    if (k < 2 || k > b) throw std::domain_error("collision rate requires 2 <= k <= b");
}

} // namespace

double collision_rate(const LambdaModel& model, std::int64_t b, std::int64_t k) {
    check_bk(b, k);
    model.validate();
    const double bd = static_cast<double>(b);
    const double kd = static_cast<double>(k);
    switch (model.family) {
        case Family::Kingman:
            return k == 2 ? 1.0 : 0.0;
        case Family::Star:
            return k == b ? 1.0 : 0.0;
        case Family::BolthausenSznitman:
            // (k-2)! (b-k)! / (b-1)! = B(k-1, b-k+1)
            return std::exp(log_beta(kd - 1.0, bd - kd + 1.0));
        case Family::Beta:
            return std::exp(log_beta(kd - model.alpha, bd - kd + model.alpha) -
                            log_beta(2.0 - model.alpha, model.alpha));
        case Family::GridDensity: {
            KahanSum s;
            for (const auto& [x, w] : model.grid) {
                if (w == 0.0) continue;
                s.add(w * std::pow(x, kd - 2.0) * std::pow(1.0 - x, bd - kd));
            }
            return s.value();
        }
    }
    throw std::logic_error("unreachable");
}

RateTable build_rate_table(const LambdaModel& model, std::int64_t b) {
    if (b < 2) throw std::domain_error("rate table requires b >= 2");
    model.validate();
    RateTable t;
    t.b = b;
    t.lam.assign(static_cast<std::size_t>(b) + 1, 0.0);
    t.group_rate.assign(static_cast<std::size_t>(b) + 1, 0.0);
    const double bd = static_cast<double>(b);
    KahanSum total;
    for (std::int64_t k = 2; k <= b; ++k) {
        const double lam = collision_rate(model, b, k);
        double group = 0.0;
        if (lam > 0.0) {
            // exponentiate last: C(b,k)*lambda_{b,k} assembled in log space
            group = std::exp(log_binom(bd, static_cast<double>(k)) + std::log(lam));
        }
        t.lam[static_cast<std::size_t>(k)] = lam;
        t.group_rate[static_cast<std::size_t>(k)] = group;
        total.add(group);
    }
    t.total = total.value();
    return t;
}

double total_merge_rate(const LambdaModel& model, std::int64_t b) {
    if (b < 2) throw std::domain_error("total merge rate requires b >= 2");
    const double bd = static_cast<double>(b);
    switch (model.family) {
        case Family::Kingman:
            return 0.5 * bd * (bd - 1.0);
        case Family::Star:
            return 1.0;
        case Family::BolthausenSznitman:
            // sum_j b/(j(j-1)) telescopes to b-1
            return bd - 1.0;
        default:
            return build_rate_table(model, b).total;
    }
}

std::int64_t sample_merge_size(const LambdaModel& model, std::int64_t b, double u) {
    if (b < 2) throw std::domain_error("merge size sampling requires b >= 2");
    if (!(u > 0.0) || !(u < 1.0)) throw std::domain_error("merge size sampling requires u in (0,1)");
    switch (model.family) {
        case Family::Kingman:
            return 2;
        case Family::Star:
            return b;
        case Family::BolthausenSznitman: {
            // P(J <= j) = (1 - 1/j)/(1 - 1/b); smallest j with CDF >= u is
            // ceil(1/t) with t = (1-u) + u/b, which never exceeds b.
            const double t = (1.0 - u) + u / static_cast<double>(b);
            const double j = std::ceil(1.0 / t);
            return std::clamp(static_cast<std::int64_t>(j), std::int64_t{2}, b);
        }
        default: {
            const RateTable t = build_rate_table(model, b);
            KahanSum cum;
            const double target = u * t.total;
            for (std::int64_t j = 2; j < b; ++j) {
                cum.add(t.group_rate[static_cast<std::size_t>(j)]);
                if (cum.value() >= target) return j;
            }
            return b;
        }
    }
}

std::int64_t MergeCdf::sample(double u) const {
    const double target = u * total;
    const auto it = std::lower_bound(cumulative.begin() + 2, cumulative.end(), target);
    if (it == cumulative.end()) return b;
    return static_cast<std::int64_t>(it - cumulative.begin());
}

RateTableCache::RateTableCache(const LambdaModel& model, std::size_t max_entries)
    : model_(model), max_entries_(std::max<std::size_t>(max_entries, 1)) {
    model_.validate();
}

std::shared_ptr<const MergeCdf> RateTableCache::get(std::int64_t b) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(b);
        if (it != entries_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
            return it->second.cdf;
        }
    }
    // build outside the lock; duplicated work on a race is harmless
    const RateTable t = build_rate_table(model_, b);
    auto cdf = std::make_shared<MergeCdf>();
    cdf->b = b;
    cdf->total = t.total;
    cdf->cumulative.assign(static_cast<std::size_t>(b) + 1, 0.0);
    KahanSum cum;
    for (std::int64_t j = 2; j <= b; ++j) {
        cum.add(t.group_rate[static_cast<std::size_t>(j)]);
        cdf->cumulative[static_cast<std::size_t>(j)] = cum.value();
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(b);
    if (it != entries_.end()) return it->second.cdf;
    lru_.push_front(b);
    entries_[b] = Entry{cdf, lru_.begin()};
    if (entries_.size() > max_entries_) {
        entries_.erase(lru_.back());
        lru_.pop_back();
    }
    return cdf;
}

} // namespace allelic
