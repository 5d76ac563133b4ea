#include "allelic/partitions.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace allelic {

AlleleConfig AlleleConfig::with(std::int64_t size, std::int64_t delta) const {
    if (size < 1) throw std::domain_error("block size must be >= 1");
    std::vector<std::int64_t> m = m_;
    if (size > static_cast<std::int64_t>(m.size())) m.resize(static_cast<std::size_t>(size), 0);
    auto& slot = m[static_cast<std::size_t>(size - 1)];
    slot += delta;
    if (slot < 0) throw std::domain_error("negative multiplicity");
    return AlleleConfig(std::move(m));
}

std::string AlleleConfig::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t j = 0; j < m_.size(); ++j) {
        if (j) os << ',';
        os << m_[j];
    }
    os << ')';
    return os.str();
}

namespace {

void enumerate_rec(std::int64_t remaining, std::int64_t max_part, std::vector<std::int64_t>& mult,
                   std::vector<AlleleConfig>& out) {
    if (remaining == 0) {
        out.emplace_back(mult);
        return;
    }
    // parts chosen in decreasing size keeps the multiplicity vectors unique
    for (std::int64_t part = std::min(remaining, max_part); part >= 1; --part) {
        ++mult[static_cast<std::size_t>(part - 1)];
        enumerate_rec(remaining - part, part, mult, out);
        --mult[static_cast<std::size_t>(part - 1)];
    }
}

} // namespace

std::vector<AlleleConfig> enumerate_configs(std::int64_t n) {
    if (n < 1) throw std::domain_error("enumerate_configs requires n >= 1");
    if (n > 40) throw std::runtime_error("enumerate_configs guarded at n <= 40");
    std::vector<AlleleConfig> out;
    std::vector<std::int64_t> mult(static_cast<std::size_t>(n), 0);
    enumerate_rec(n, n, mult, out);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace allelic
