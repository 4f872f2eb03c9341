#pragma once

// HPAK packed-batch container, little-endian:
//   "HPAK" u32 version=1 u32 capacity u32 n_buffers
//   per buffer: u32 n_segments, u32 cu_seqlens[n_segments+1], u32 tokens[capacity], i32 labels[capacity]

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "forge/error.hpp"
#include "forge/packer.hpp"

namespace forge {

inline constexpr std::uint32_t kHpakVersion = 1;

class UnsupportedVersion : public FormatError {
public:
    explicit UnsupportedVersion(std::uint32_t version)
        : FormatError("unsupported HPAK version " + std::to_string(version)), version_(version) {}
    std::uint32_t version() const noexcept { return version_; }

private:
    std::uint32_t version_;
};

void write_hpak(std::ostream& out, const PackedBatch& batch);
void write_hpak_file(const std::string& path, const PackedBatch& batch);

/// Reads a batch. pad_count per buffer is recovered from trailing `pad_token`
/// positions carrying the ignore label; the pad id is not stored in the file.
PackedBatch read_hpak(std::istream& in, TokenId pad_token);
PackedBatch read_hpak_file(const std::string& path, TokenId pad_token);

/// Writes an HPAK file from a plan without holding the samples: the skeleton
/// (boundaries and padding) is laid down up front and each sample is then
/// written in place. Produces the same bytes as write_hpak(pack(...)).
class HpakPlanWriter {
public:
    HpakPlanWriter(std::ostream& out, const PackingPlan& plan, TokenId pad_token, bool pad_as_segment);

    /// Writes the first plan.lengths[index] positions of `sample`.
    void write_sample(std::size_t index, const RenderedSample& sample);
    void finish();

private:
    std::ostream& out_;
    const PackingPlan& plan_;
    std::vector<std::uint64_t> token_base_;  // file offset of each buffer's token array
};

}  // namespace forge
