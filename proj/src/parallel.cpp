#include "forge/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <omp.h>

#include "forge/error.hpp"

namespace forge::parallel {

int configure_threads_from_env() {
    if (const char* env = std::getenv("FORGE_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) {
            omp_set_num_threads(static_cast<int>(std::min<long>(n, omp_get_num_procs() * 4L)));
        }
    }
    return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

namespace {

PackedBuffer build_buffer(std::span<const RenderedSample> samples, const PackingPlan& plan,
                          const PackingPlan::Members& members, std::size_t b, const PackOptions& opts) {
    PackedBuffer buf;
    buf.tokens.assign(plan.capacity, opts.pad_token);
    buf.labels.assign(plan.capacity, kIgnoreIndex);
    std::size_t used = 0;
    for (std::size_t idx : members.of(b)) {
        const auto& s = samples[idx];
        const std::size_t len = plan.lengths[idx];
        const std::size_t at = plan.placements[idx].offset;
        std::copy_n(s.tokens.begin(), len, buf.tokens.begin() + at);
        std::copy_n(s.labels.begin(), len, buf.labels.begin() + at);
        used += len;
    }
    buf.pad_count = plan.capacity - used;
    buf.cu_seqlens = buffer_cu_seqlens(plan, members, b, opts.pad_as_segment);
    return buf;
}

void check_lengths(std::span<const RenderedSample> samples, const PackingPlan& plan) {
    if (samples.size() != plan.lengths.size()) throw Error("fill_buffers: plan and samples differ in size");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (plan.lengths[i] > samples[i].size()) throw Error("fill_buffers: plan length exceeds sample length");
    }
}

}  // namespace

std::vector<PackedBuffer> fill_buffers(std::span<const RenderedSample> samples, const PackingPlan& plan,
                                       const PackOptions& opts) {
    check_lengths(samples, plan);
    const auto members = plan.members();
    std::vector<PackedBuffer> out(plan.buffer_count);
    const auto n = static_cast<std::ptrdiff_t>(plan.buffer_count);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t b = 0; b < n; ++b) {
        out[b] = build_buffer(samples, plan, members, static_cast<std::size_t>(b), opts);
    }
    return out;
}

std::vector<PackedBuffer> fill_buffers_serial(std::span<const RenderedSample> samples, const PackingPlan& plan,
                                              const PackOptions& opts) {
    check_lengths(samples, plan);
    std::vector<PackedBuffer> out(plan.buffer_count);
    std::vector<std::vector<std::uint32_t>> cu(plan.buffer_count);
    std::vector<std::size_t> used(plan.buffer_count, 0);
    for (auto& buf : out) {
        buf.tokens.assign(plan.capacity, opts.pad_token);
        buf.labels.assign(plan.capacity, kIgnoreIndex);
    }
    // Walk samples in (buffer, offset) order so boundaries accumulate directly.
    for (std::size_t idx : plan.packed_order()) {
        const auto [b, at] = plan.placements[idx];
        const std::size_t len = plan.lengths[idx];
        for (std::size_t k = 0; k < len; ++k) {
            out[b].tokens[at + k] = samples[idx].tokens[k];
            out[b].labels[at + k] = samples[idx].labels[k];
        }
        if (cu[b].empty()) cu[b].push_back(0);
        cu[b].push_back(static_cast<std::uint32_t>(at + len));
        used[b] += len;
    }
    for (std::size_t b = 0; b < plan.buffer_count; ++b) {
        out[b].pad_count = plan.capacity - used[b];
        if (out[b].pad_count > 0) {
            if (opts.pad_as_segment) {
                cu[b].push_back(static_cast<std::uint32_t>(plan.capacity));
            } else {
                cu[b].back() = static_cast<std::uint32_t>(plan.capacity);
            }
        }
        out[b].cu_seqlens = std::move(cu[b]);
    }
    return out;
}

namespace {

RenderOutcome render_one(const Conversation& conv, const ChatTemplate& tmpl, const Tokenizer& tok) {
    RenderOutcome r;
    try {
        r.sample = render(conv, tmpl, tok);
    } catch (const Error& e) {
        r.error = e.what();
    }
    return r;
}

}  // namespace

std::vector<RenderOutcome> render_corpus(std::span<const Conversation> convs, const ChatTemplate& tmpl,
                                         const Tokenizer& tok) {
    std::vector<RenderOutcome> out(convs.size());
    const auto n = static_cast<std::ptrdiff_t>(convs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = render_one(convs[i], tmpl, tok);
    }
    return out;
}

std::vector<RenderOutcome> render_corpus_serial(std::span<const Conversation> convs, const ChatTemplate& tmpl,
                                                const Tokenizer& tok) {
    std::vector<RenderOutcome> out;
    out.reserve(convs.size());
    for (const auto& c : convs) out.push_back(render_one(c, tmpl, tok));
    return out;
}

CorpusStats corpus_stats(std::span<const Conversation> convs, const ChatTemplate& tmpl, const Tokenizer& tok) {
    const int threads = omp_get_max_threads();
    std::vector<CorpusStats> partial(static_cast<std::size_t>(threads));
    const auto n = static_cast<std::ptrdiff_t>(convs.size());
#pragma omp parallel num_threads(threads)
    {
        auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            auto r = render_one(convs[i], tmpl, tok);
            if (!r.sample) {
                ++mine.render_errors;
                continue;
            }
            mine.split.add(*r.sample);
            mine.categories.add(convs[i], *r.sample);
        }
    }
    CorpusStats total;
    for (const auto& p : partial) {
        total.split.merge(p.split);
        total.categories.merge(p.categories);
        total.render_errors += p.render_errors;
    }
    return total;
}

CorpusStats corpus_stats_serial(std::span<const Conversation> convs, const ChatTemplate& tmpl, const Tokenizer& tok) {
    CorpusStats total;
    for (const auto& c : convs) {
        auto r = render_one(c, tmpl, tok);
        if (!r.sample) {
            ++total.render_errors;
            continue;
        }
        total.split.add(*r.sample);
        total.categories.add(c, *r.sample);
    }
    return total;
}

}  // namespace forge::parallel
