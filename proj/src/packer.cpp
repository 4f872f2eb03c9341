#include "forge/packer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

namespace forge {

using nlohmann::json;

std::string_view to_string(PackingStrategy s) noexcept {
    switch (s) {
        case PackingStrategy::Contiguous: return "contiguous";
        case PackingStrategy::FirstFit: return "first_fit";
        case PackingStrategy::FirstFitDecreasing: return "first_fit_decreasing";
    }
    return "unknown";
}

std::optional<PackingStrategy> parse_strategy(std::string_view text) noexcept {
    for (auto s : {PackingStrategy::Contiguous, PackingStrategy::FirstFit, PackingStrategy::FirstFitDecreasing}) {
        if (to_string(s) == text) return s;
    }
    if (text == "ffd") return PackingStrategy::FirstFitDecreasing;
    return std::nullopt;
}

namespace {

// Max-tree over bin residual capacities. Unopened bins sit at full capacity,
// so the leftmost leaf with enough room is exactly the first-fit choice.
class ResidualTree {
public:
    ResidualTree(std::size_t bins, std::size_t capacity)
        : leaves_(std::bit_ceil(std::max<std::size_t>(bins, 1))), tree_(2 * leaves_, 0) {
        for (std::size_t i = 0; i < bins; ++i) tree_[leaves_ + i] = capacity;
        for (std::size_t i = leaves_ - 1; i > 0; --i) tree_[i] = std::max(tree_[2 * i], tree_[2 * i + 1]);
    }

    // Leftmost bin with residual >= need. Caller guarantees one exists.
    std::size_t find(std::size_t need) const {
        std::size_t node = 1;
        while (node < leaves_) {
            node = tree_[2 * node] >= need ? 2 * node : 2 * node + 1;
        }
        return node - leaves_;
    }

    std::size_t residual(std::size_t bin) const { return tree_[leaves_ + bin]; }

    void take(std::size_t bin, std::size_t amount) {
        std::size_t node = leaves_ + bin;
        tree_[node] -= amount;
        for (node /= 2; node > 0; node /= 2) tree_[node] = std::max(tree_[2 * node], tree_[2 * node + 1]);
    }

private:
    std::size_t leaves_;
    std::vector<std::size_t> tree_;
};

void first_fit(PackingPlan& plan, std::span<const std::size_t> order) {
    ResidualTree tree(order.size(), plan.capacity);
    for (std::size_t idx : order) {
        const std::size_t len = plan.lengths[idx];
        const std::size_t bin = tree.find(len);
        plan.placements[idx] = {static_cast<std::uint32_t>(bin),
                                static_cast<std::uint32_t>(plan.capacity - tree.residual(bin))};
        tree.take(bin, len);
        plan.buffer_count = std::max(plan.buffer_count, bin + 1);
    }
}

}  // namespace

PackingPlan plan_packing(std::span<const std::size_t> lengths, std::size_t capacity, PackingStrategy strategy) {
    if (capacity == 0) throw ConfigError("capacity must be positive");
    if (capacity > UINT32_MAX) throw ConfigError("capacity exceeds 32-bit range");
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (lengths[i] == 0) throw ConfigError("sample " + std::to_string(i) + " is empty");
        if (lengths[i] > capacity) throw OversizedSample(i, lengths[i], capacity);
    }

    PackingPlan plan;
    plan.strategy = strategy;
    plan.capacity = capacity;
    plan.lengths.assign(lengths.begin(), lengths.end());
    plan.placements.resize(lengths.size());
    if (lengths.empty()) return plan;

    switch (strategy) {
        case PackingStrategy::Contiguous: {
            std::size_t buffer = 0, fill = 0;
            for (std::size_t i = 0; i < lengths.size(); ++i) {
                if (fill + lengths[i] > capacity) {
                    ++buffer;
                    fill = 0;
                }
                plan.placements[i] = {static_cast<std::uint32_t>(buffer), static_cast<std::uint32_t>(fill)};
                fill += lengths[i];
            }
            plan.buffer_count = buffer + 1;
            break;
        }
        case PackingStrategy::FirstFit: {
            std::vector<std::size_t> order(lengths.size());
            std::iota(order.begin(), order.end(), 0);
            first_fit(plan, order);
            break;
        }
        case PackingStrategy::FirstFitDecreasing: {
            std::vector<std::size_t> order(lengths.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lengths[a] > lengths[b]; });
            first_fit(plan, order);
            break;
        }
    }
    return plan;
}

PackingPlan::Members PackingPlan::members() const {
    Members m;
    m.member_start.assign(buffer_count + 1, 0);
    for (const auto& p : placements) ++m.member_start[p.buffer + 1];
    std::partial_sum(m.member_start.begin(), m.member_start.end(), m.member_start.begin());
    m.members.resize(placements.size());
    std::vector<std::size_t> cursor(m.member_start.begin(), m.member_start.end() - 1);
    for (std::size_t i = 0; i < placements.size(); ++i) m.members[cursor[placements[i].buffer]++] = i;
    for (std::size_t b = 0; b < buffer_count; ++b) {
        std::sort(m.members.begin() + m.member_start[b], m.members.begin() + m.member_start[b + 1],
                  [this](auto x, auto y) { return placements[x].offset < placements[y].offset; });
    }
    return m;
}

std::vector<std::size_t> PackingPlan::packed_order() const { return members().members; }

std::size_t PackingPlan::used(std::size_t buffer) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        if (placements[i].buffer == buffer) n += lengths[i];
    }
    return n;
}

std::vector<std::uint32_t> buffer_cu_seqlens(const PackingPlan& plan, const PackingPlan::Members& members,
                                             std::size_t buffer, bool pad_as_segment) {
    std::vector<std::uint32_t> cu{0};
    for (std::size_t idx : members.of(buffer)) {
        cu.push_back(static_cast<std::uint32_t>(cu.back() + plan.lengths[idx]));
    }
    if (cu.back() < plan.capacity) {
        if (pad_as_segment || cu.size() == 1) {
            cu.push_back(static_cast<std::uint32_t>(plan.capacity));
        } else {
            cu.back() = static_cast<std::uint32_t>(plan.capacity);
        }
    }
    return cu;
}

std::vector<std::size_t> packed_lengths(std::span<const RenderedSample> samples, std::size_t capacity,
                                        bool truncate_oversize, std::vector<std::size_t>* truncated) {
    std::vector<std::size_t> lengths(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        lengths[i] = samples[i].size();
        if (lengths[i] > capacity && truncate_oversize) {
            lengths[i] = capacity;
            if (truncated) truncated->push_back(i);
        }
    }
    return lengths;
}

PackedBatch pack(std::span<const RenderedSample> samples, std::size_t capacity, PackingStrategy strategy,
                 const PackOptions& opts) {
    PackedBatch batch;
    batch.capacity = capacity;
    const auto lengths = packed_lengths(samples, capacity, opts.truncate_oversize, &batch.truncated);
    const auto plan = plan_packing(lengths, capacity, strategy);
    batch.buffers = parallel::fill_buffers(samples, plan, opts);
    return batch;
}

double EfficiencyReport::efficiency() const noexcept {
    return total_capacity == 0 ? 0.0 : static_cast<double>(real_tokens) / static_cast<double>(total_capacity);
}

double EfficiencyReport::efficiency_rounded() const noexcept { return std::round(efficiency() * 1e4) / 1e4; }

json EfficiencyReport::to_json() const {
    return {{"buffers", buffers},
            {"total_capacity", total_capacity},
            {"real_tokens", real_tokens},
            {"pad_tokens", pad_tokens},
            {"efficiency", efficiency_rounded()}};
}

EfficiencyReport efficiency(const PackedBatch& batch) noexcept {
    EfficiencyReport r;
    r.buffers = batch.buffers.size();
    r.total_capacity = batch.capacity * batch.buffers.size();
    for (const auto& b : batch.buffers) r.pad_tokens += b.pad_count;
    r.real_tokens = r.total_capacity - r.pad_tokens;
    return r;
}

EfficiencyReport efficiency(const PackingPlan& plan) noexcept {
    EfficiencyReport r;
    r.buffers = plan.buffer_count;
    r.total_capacity = plan.capacity * plan.buffer_count;
    r.real_tokens = std::accumulate(plan.lengths.begin(), plan.lengths.end(), std::size_t{0});
    r.pad_tokens = r.total_capacity - r.real_tokens;
    return r;
}

std::vector<Segment> unpack(const PackedBatch& batch) {
    std::vector<Segment> out;
    for (std::size_t b = 0; b < batch.buffers.size(); ++b) {
        const auto& buf = batch.buffers[b];
        const auto& cu = buf.cu_seqlens;
        const std::string where = "buffer " + std::to_string(b) + ": ";
        if (buf.tokens.size() != batch.capacity || buf.labels.size() != batch.capacity) {
            throw FormatError(where + "token/label length differs from capacity");
        }
        if (cu.size() < 2 || cu.front() != 0 || cu.back() != batch.capacity) {
            throw FormatError(where + "cu_seqlens must start at 0 and end at capacity");
        }
        for (std::size_t i = 1; i < cu.size(); ++i) {
            if (cu[i] <= cu[i - 1]) throw FormatError(where + "cu_seqlens not strictly increasing");
        }
        std::size_t segments = cu.size() - 1;
        std::size_t last_trim = 0;
        if (buf.pad_count > 0) {
            const std::size_t last_len = cu[segments] - cu[segments - 1];
            if (last_len == buf.pad_count) {
                --segments;  // dedicated pad segment
            } else if (last_len > buf.pad_count) {
                last_trim = buf.pad_count;  // pads folded into the final sample
            } else {
                throw FormatError(where + "pad_count larger than final segment");
            }
        }
        for (std::size_t s = 0; s < segments; ++s) {
            const std::size_t begin = cu[s];
            const std::size_t end = cu[s + 1] - (s + 1 == segments ? last_trim : 0);
            out.push_back(Segment{{buf.tokens.begin() + begin, buf.tokens.begin() + end},
                                  {buf.labels.begin() + begin, buf.labels.begin() + end}});
        }
    }
    return out;
}

}  // namespace forge
