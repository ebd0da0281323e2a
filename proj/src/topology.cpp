#include "csmarate/topology.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace csmarate {

ConflictGraph::ConflictGraph(int link_count, std::vector<std::pair<int, int>> conflicts)
    : link_count_(link_count) {
    if (link_count <= 0)
        throw std::invalid_argument("ConflictGraph: link_count must be positive");
    if (link_count > kMaxLinks)
        throw std::invalid_argument("ConflictGraph: link_count " + std::to_string(link_count) +
                                    " exceeds enumeration bound " + std::to_string(kMaxLinks));
    neighbor_mask_.assign(static_cast<std::size_t>(link_count), 0u);
    for (auto& [u, v] : conflicts) {
        if (u < 0 || u >= link_count || v < 0 || v >= link_count)
            throw std::invalid_argument("ConflictGraph: conflict pair (" + std::to_string(u) +
                                        ", " + std::to_string(v) + ") out of range");
        if (u == v)
            throw std::invalid_argument("ConflictGraph: self-conflict on link " + std::to_string(u));
        if (u > v) std::swap(u, v);
        neighbor_mask_[static_cast<std::size_t>(u)] |= 1u << v;
        neighbor_mask_[static_cast<std::size_t>(v)] |= 1u << u;
    }
    std::sort(conflicts.begin(), conflicts.end());
    conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
    conflicts_ = std::move(conflicts);
}

namespace {

// Densifying the family costs link_count * size doubles; cap the footprint
// at ~32 MiB so pathological sparse graphs still enumerate fine.
constexpr std::size_t kIndicatorCap = std::size_t{1} << 22;

std::vector<double> build_indicator(const ConflictGraph& g, const std::vector<std::uint32_t>& sets) {
    const auto n = static_cast<std::size_t>(g.link_count());
    const std::size_t m = sets.size();
    if (n * m > kIndicatorCap) return {};
    std::vector<double> ind(n * m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::uint32_t bits = sets[k]; bits; bits &= bits - 1) {
            const auto l = static_cast<std::size_t>(std::countr_zero(bits));
            ind[l * m + k] = 1.0;
        }
    return ind;
}

} // namespace

IndependentSetFamily::IndependentSetFamily(ConflictGraph graph, std::vector<std::uint32_t> sets)
    : graph_(std::move(graph)), sets_(std::move(sets)) {
    if (sets_.empty() || sets_.front() != 0u)
        throw std::invalid_argument("IndependentSetFamily: first set must be the empty set");
    for (std::size_t k = 1; k < sets_.size(); ++k)
        if (sets_[k] <= sets_[k - 1])
            throw std::invalid_argument("IndependentSetFamily: sets must be strictly ascending");
    for (std::uint32_t s : sets_)
        for (std::uint32_t bits = s; bits; bits &= bits - 1) {
            const int l = std::countr_zero(bits);
            if (l >= graph_.link_count())
                throw std::invalid_argument("IndependentSetFamily: set references missing link");
            if (s & graph_.neighbor_mask(l))
                throw std::invalid_argument("IndependentSetFamily: set contains a conflict pair");
        }
    indicator_ = build_indicator(graph_, sets_);
}

int IndependentSetFamily::set_size(std::size_t k) const {
    return std::popcount(sets_[k]);
}

IndependentSetFamily enumerate_independent_sets(const ConflictGraph& graph) {
    const int n = graph.link_count();
    std::vector<std::uint32_t> sets{0u};
    for (int l = 0; l < n; ++l) {
        const std::uint32_t bit = 1u << l;
        const std::uint32_t bad = graph.neighbor_mask(l);
        // Every set built so far only uses links < l, so appending the
        // extended sets keeps candidate masks unique.
        const std::size_t frozen = sets.size();
        for (std::size_t k = 0; k < frozen; ++k)
            if (!(sets[k] & bad)) sets.push_back(sets[k] | bit);
    }
    std::sort(sets.begin(), sets.end());
    return IndependentSetFamily(graph, std::move(sets));
}

} // namespace csmarate
