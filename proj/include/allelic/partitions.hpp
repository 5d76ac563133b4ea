#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace allelic {

// Allele frequency spectrum configuration in multiplicity representation:
// m[j-1] blocks of size j, with sum_j j*m[j-1] = n. Trailing zeros are
// stripped so equal configurations hash and compare equal.
class AlleleConfig {
public:
    AlleleConfig() = default;
    explicit AlleleConfig(std::vector<std::int64_t> m) : m_(std::move(m)) { normalize(); }

    static AlleleConfig singleton_sample() { return AlleleConfig({1}); }

    std::int64_t multiplicity(std::int64_t size) const {
        if (size < 1 || size > static_cast<std::int64_t>(m_.size())) return 0;
        return m_[static_cast<std::size_t>(size - 1)];
    }
    std::int64_t sample_size() const {
        std::int64_t n = 0;
        for (std::size_t j = 0; j < m_.size(); ++j) n += static_cast<std::int64_t>(j + 1) * m_[j];
        return n;
    }
    std::int64_t block_count() const {
        std::int64_t b = 0;
        for (auto v : m_) b += v;
        return b;
    }
    std::int64_t max_size() const { return static_cast<std::int64_t>(m_.size()); }
    const std::vector<std::int64_t>& values() const { return m_; }
    bool empty() const { return m_.empty(); }

    // returns a copy with m[size] adjusted by delta; throws if it goes negative
    AlleleConfig with(std::int64_t size, std::int64_t delta) const;

    bool operator==(const AlleleConfig& o) const { return m_ == o.m_; }
    bool operator<(const AlleleConfig& o) const { return m_ < o.m_; }

    std::string to_string() const;

private:
    void normalize() {
        while (!m_.empty() && m_.back() == 0) m_.pop_back();
    }
    std::vector<std::int64_t> m_;
};

struct AlleleConfigHash {
    std::size_t operator()(const AlleleConfig& c) const {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (auto v : c.values()) {
            h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// All integer partitions of n in multiplicity representation, each exactly
// once, in lexicographic order of the multiplicity vector. Guarded at n <= 40
// (p(40) = 37338).
std::vector<AlleleConfig> enumerate_configs(std::int64_t n);

} // namespace allelic
