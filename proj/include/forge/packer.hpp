#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/render.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

enum class PackingStrategy {
    Contiguous,          // arrival order, a new buffer only when the next sample does not fit
    FirstFit,            // arrival order, leftmost buffer with room
    FirstFitDecreasing,  // longest first (stable on index), then first fit
};

std::string_view to_string(PackingStrategy s) noexcept;
std::optional<PackingStrategy> parse_strategy(std::string_view text) noexcept;

inline constexpr std::size_t kDefaultCapacity = 8192;

struct Placement {
    std::uint32_t buffer = 0;
    std::uint32_t offset = 0;
    bool operator==(const Placement&) const = default;
};

struct PackingPlan {
    PackingStrategy strategy = PackingStrategy::FirstFitDecreasing;
    std::size_t capacity = kDefaultCapacity;
    std::vector<std::size_t> lengths;       // per sample, as packed
    std::vector<Placement> placements;      // per sample
    std::size_t buffer_count = 0;

    /// CSR view: samples of buffer b are members[member_start[b] .. member_start[b+1]) in offset order.
    struct Members {
        std::vector<std::size_t> member_start;
        std::vector<std::size_t> members;
        std::span<const std::size_t> of(std::size_t b) const {
            return {members.data() + member_start[b], member_start[b + 1] - member_start[b]};
        }
    };
    Members members() const;
    /// Sample indices in (buffer, offset) order, i.e. the order unpack() yields them.
    std::vector<std::size_t> packed_order() const;
    std::size_t used(std::size_t buffer) const;

    bool operator==(const PackingPlan&) const = default;
};

/// Assigns every sample a (buffer, offset). Throws OversizedSample for a length
/// above capacity and ConfigError for zero capacity or zero-length samples.
PackingPlan plan_packing(std::span<const std::size_t> lengths, std::size_t capacity, PackingStrategy strategy);

struct PackOptions {
    TokenId pad_token = 0;
    bool pad_as_segment = true;     // pads get their own trailing segment
    bool truncate_oversize = false;  // otherwise oversize samples throw
};

struct PackedBuffer {
    std::vector<TokenId> tokens;             // size == capacity
    std::vector<Label> labels;               // size == capacity
    std::vector<std::uint32_t> cu_seqlens;   // starts at 0, ends at capacity
    std::size_t pad_count = 0;

    std::size_t segment_count() const noexcept { return cu_seqlens.empty() ? 0 : cu_seqlens.size() - 1; }
    bool operator==(const PackedBuffer&) const = default;
};

struct PackedBatch {
    std::size_t capacity = 0;
    std::vector<PackedBuffer> buffers;
    std::vector<std::size_t> truncated;  // indices of samples cut to capacity

    bool operator==(const PackedBatch&) const = default;
};

/// Boundaries for one buffer of a plan.
std::vector<std::uint32_t> buffer_cu_seqlens(const PackingPlan& plan, const PackingPlan::Members& members,
                                             std::size_t buffer, bool pad_as_segment);

/// Lengths as they will be packed, applying truncation when enabled.
std::vector<std::size_t> packed_lengths(std::span<const RenderedSample> samples, std::size_t capacity,
                                        bool truncate_oversize, std::vector<std::size_t>* truncated = nullptr);

PackedBatch pack(std::span<const RenderedSample> samples, std::size_t capacity, PackingStrategy strategy,
                 const PackOptions& opts);

struct EfficiencyReport {
    std::size_t buffers = 0;
    std::size_t total_capacity = 0;
    std::size_t real_tokens = 0;
    std::size_t pad_tokens = 0;

    double efficiency() const noexcept;
    /// efficiency() rounded to four decimal places.
    double efficiency_rounded() const noexcept;
    nlohmann::json to_json() const;
};

EfficiencyReport efficiency(const PackedBatch& batch) noexcept;
EfficiencyReport efficiency(const PackingPlan& plan) noexcept;

struct Segment {
    std::vector<TokenId> tokens;
    std::vector<Label> labels;
    bool operator==(const Segment&) const = default;
};

/// Splits every buffer at its boundaries, dropping padding. Throws FormatError
/// on inconsistent boundaries.
std::vector<Segment> unpack(const PackedBatch& batch);

}  // namespace forge
