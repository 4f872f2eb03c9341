#pragma once

// OpenMP kernels for the data-parallel parts of the pipeline. Each kernel has a
// serial reference twin with identical output, kept for tests and benchmarks.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/corpus.hpp"
#include "forge/packer.hpp"
#include "forge/render.hpp"

namespace forge::parallel {

/// Applies FORGE_THREADS (if set to a positive integer) as the OpenMP thread cap.
/// Returns the effective maximum thread count.
int configure_threads_from_env();
int max_threads();

/// Materializes buffers for a fixed plan; one buffer per work item.
std::vector<PackedBuffer> fill_buffers(std::span<const RenderedSample> samples, const PackingPlan& plan,
                                       const PackOptions& opts);
std::vector<PackedBuffer> fill_buffers_serial(std::span<const RenderedSample> samples, const PackingPlan& plan,
                                              const PackOptions& opts);

struct RenderOutcome {
    std::optional<RenderedSample> sample;
    std::string error;  // set when sample is empty
};

std::vector<RenderOutcome> render_corpus(std::span<const Conversation> convs, const ChatTemplate& tmpl,
                                         const Tokenizer& tok);
std::vector<RenderOutcome> render_corpus_serial(std::span<const Conversation> convs, const ChatTemplate& tmpl,
                                                const Tokenizer& tok);

struct CorpusStats {
    TokenSplit split;
    CategoryAccumulator categories;
    std::size_t render_errors = 0;
};

/// Renders and reduces; per-thread partials merge in a fixed order.
CorpusStats corpus_stats(std::span<const Conversation> convs, const ChatTemplate& tmpl, const Tokenizer& tok);
CorpusStats corpus_stats_serial(std::span<const Conversation> convs, const ChatTemplate& tmpl, const Tokenizer& tok);

}  // namespace forge::parallel
