#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "forge/corpus.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

enum class DropReason { TooShort, TooLong, Refusal, Malformed, EmptyTurn, MissingTurn, DuplicateLowerRank };
inline constexpr std::size_t kDropReasonCount = 7;

std::string_view to_string(DropReason reason) noexcept;

struct FilterDecision {
    std::optional<DropReason> reason;  // set iff dropped

    bool kept() const noexcept { return !reason.has_value(); }
    static FilterDecision keep() { return {}; }
    static FilterDecision drop(DropReason r) { return FilterDecision{r}; }
    bool operator==(const FilterDecision&) const = default;
};

struct FilterConfig {
    std::size_t min_tokens = 1;
    std::size_t max_tokens = 8192;
    std::vector<std::string> refusal_patterns;
    std::size_t refusal_window = 160;  // code points scanned at the head of each assistant turn
    std::vector<std::string> model_rank;  // strongest first

    /// Throws ConfigError when bounds are inverted or ranks repeat.
    void validate() const;

    static FilterConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// One pattern per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_patterns(std::istream& in);
std::vector<std::string> load_patterns_file(const std::string& path);

FilterDecision filter_length(const Conversation& conv, const Tokenizer& tok, const FilterConfig& cfg);
FilterDecision filter_refusal(const Conversation& conv, const FilterConfig& cfg);
FilterDecision filter_structure(const Conversation& conv);

/// Key shared by conversations that pose the same prompt: a hash over every
/// non-assistant turn (role and content), so responses do not affect it.
std::uint64_t duplicate_key(const Conversation& conv);

/// Position of `source` in the ranking, or ranks.size() for unranked/missing sources.
std::size_t source_rank(const std::optional<std::string>& source, const std::vector<std::string>& ranks);

/// Per-group winner tracking for source prioritization. Groupings built over
/// disjoint shards can be merged; merge is associative and matches a single pass
/// as long as sequence numbers reflect global input order.
class SourcePrioritizer {
public:
    explicit SourcePrioritizer(const std::vector<std::string>& ranks) : ranks_(&ranks) {}

    void add(const Conversation& conv, std::size_t seq);
    void add(std::uint64_t key, std::size_t rank, std::size_t seq);
    void merge(const SourcePrioritizer& other);

    bool is_winner(std::uint64_t key, std::size_t seq) const;
    bool is_winner(const Conversation& conv, std::size_t seq) const { return is_winner(duplicate_key(conv), seq); }
    std::size_t groups() const noexcept { return best_.size(); }

private:
    struct Best {
        std::size_t rank;
        std::size_t seq;
    };
    const std::vector<std::string>* ranks_;
    std::unordered_map<std::uint64_t, Best> best_;
};

struct PrioritizeResult {
    std::vector<Conversation> kept;
    std::vector<Conversation> dropped;  // every entry dropped as DuplicateLowerRank
};

PrioritizeResult prioritize_sources(const std::vector<Conversation>& convs, const FilterConfig& cfg);

enum class Stage { Structure, Length, Refusal, Prioritize };
std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view text) noexcept;
std::vector<Stage> default_stage_order();

struct StageCounts {
    std::size_t seen = 0;
    std::size_t kept = 0;
    std::array<std::size_t, kDropReasonCount> dropped{};

    std::size_t dropped_total() const noexcept;
};

struct FilterReport {
    std::vector<Stage> order;
    std::vector<StageCounts> stages;  // parallel to order
    std::size_t total_input = 0;      // records read, including ingest errors
    std::size_t total_kept = 0;
    std::size_t ingest_errors = 0;
    std::array<std::size_t, kDropReasonCount> dropped_by_reason{};

    nlohmann::json to_json() const;
};

/// Staged filter with a gather barrier at the prioritize stage. Feed every
/// conversation through `observe`, then call `finish`, then ask `decide` for
/// each conversation (same sequence numbers) in any order.
class FilterPipeline {
public:
    FilterPipeline(FilterConfig cfg, std::vector<Stage> order, const Tokenizer& tok);

    void observe(const Conversation& conv, std::size_t seq);
    void note_ingest_error() { ++report_.total_input, ++report_.ingest_errors; }
    void finish();
    /// Final decision; also updates the report. Call once per observed conversation.
    FilterDecision decide(const Conversation& conv, std::size_t seq);

    const FilterReport& report() const noexcept { return report_; }
    const FilterConfig& config() const noexcept { return cfg_; }

private:
    FilterDecision run_stage(Stage stage, const Conversation& conv) const;

    FilterConfig cfg_;
    std::vector<Stage> order_;
    const Tokenizer& tok_;
    std::size_t prioritize_at_;  // index of the prioritize stage, or order_.size()
    SourcePrioritizer prioritizer_;
    FilterReport report_;
    bool finished_ = false;
};

struct PipelineResult {
    std::vector<Conversation> kept;
    std::vector<std::pair<Conversation, DropReason>> dropped;
    FilterReport report;
};

/// In-memory driver over FilterPipeline.
PipelineResult run_pipeline(const std::vector<Conversation>& convs, const FilterConfig& cfg,
                            const std::vector<Stage>& order, const Tokenizer& tok);

}  // namespace forge
