#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forge/corpus.hpp"

namespace forge {

struct SynthConfig {
    std::size_t samples = 5000;
    double mean_length = 600.0;  // mean of the log-normal before clipping
    double sigma = 1.0;          // log-space standard deviation
    std::size_t min_length = 32;
    std::size_t max_length = 8192;
    std::uint64_t seed = 20240815;
};

/// Log-normal sample lengths clipped to [min_length, max_length]. Deterministic per seed.
std::vector<std::size_t> synthetic_lengths(const SynthConfig& cfg);

/// Rendered-length overhead of a single user/assistant exchange under the
/// default template with the byte-level tokenizer.
inline constexpr std::size_t kExchangeOverhead = 21;

/// A user/assistant conversation whose default rendering is exactly
/// `rendered_length` tokens with the byte-level tokenizer (>= kExchangeOverhead + 2).
Conversation synthetic_conversation(std::string id, std::size_t rendered_length, std::uint64_t seed,
                                    std::string category = {});

}  // namespace forge
