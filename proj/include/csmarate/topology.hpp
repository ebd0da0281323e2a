#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace csmarate {

// Conflict graph over wireless links.  Vertices are link indices
// [0, link_count); an edge means the two links carrier-sense each other and
// cannot transmit simultaneously.  Immutable after construction.
class ConflictGraph {
public:
    // Maximum number of links supported by the bitmask enumeration.
    static constexpr int kMaxLinks = 30;

    ConflictGraph(int link_count, std::vector<std::pair<int, int>> conflicts);

    int link_count() const { return link_count_; }

    // Normalized (u < v), sorted, de-duplicated conflict pairs.
    const std::vector<std::pair<int, int>>& conflicts() const { return conflicts_; }

    // Bitmask of links conflicting with l.
    std::uint32_t neighbor_mask(int l) const { return neighbor_mask_[static_cast<std::size_t>(l)]; }

    bool conflicts_with(int u, int v) const {
        return (neighbor_mask_[static_cast<std::size_t>(u)] >> v) & 1u;
    }

    bool operator==(const ConflictGraph& other) const {
        return link_count_ == other.link_count_ && conflicts_ == other.conflicts_;
    }

private:
    int link_count_;
    std::vector<std::pair<int, int>> conflicts_;
    std::vector<std::uint32_t> neighbor_mask_;
};

// All independent sets of a conflict graph, as bitmasks in ascending order.
// Always contains the empty set (mask 0).  The dense 0/1 indicator matrix
// (one row per link, one column per set) is kept alongside the masks when it
// is small enough; the hot numerical kernels consume it directly.
class IndependentSetFamily {
public:
    IndependentSetFamily(ConflictGraph graph, std::vector<std::uint32_t> sets);

    const ConflictGraph& graph() const { return graph_; }
    const std::vector<std::uint32_t>& sets() const { return sets_; }
    std::size_t size() const { return sets_.size(); }
    std::uint32_t set_mask(std::size_t k) const { return sets_[k]; }
    int link_count() const { return graph_.link_count(); }

    // Row-major per link: indicator[l * size() + k] is 1.0 when link l is a
    // member of set k.  Empty when the family is too large to densify.
    const std::vector<double>& indicator() const { return indicator_; }
    bool has_indicator() const { return !indicator_.empty(); }

    // Number of links in set k.
    int set_size(std::size_t k) const;

private:
    ConflictGraph graph_;
    std::vector<std::uint32_t> sets_;
    std::vector<double> indicator_;
};

// Enumerates every independent set by incremental bitmask extension.
// Deterministic: resulting masks are in ascending numeric order.
// Throws std::invalid_argument when link_count exceeds kMaxLinks.
IndependentSetFamily enumerate_independent_sets(const ConflictGraph& graph);

} // namespace csmarate
