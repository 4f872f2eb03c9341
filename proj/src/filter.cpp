#include "forge/filter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

using nlohmann::json;

std::string_view to_string(DropReason reason) noexcept {
    switch (reason) {
        case DropReason::TooShort: return "TooShort";
        case DropReason::TooLong: return "TooLong";
        case DropReason::Refusal: return "Refusal";
        case DropReason::Malformed: return "Malformed";
        case DropReason::EmptyTurn: return "EmptyTurn";
        case DropReason::MissingTurn: return "MissingTurn";
        case DropReason::DuplicateLowerRank: return "DuplicateLowerRank";
    }
    return "Unknown";
}

void FilterConfig::validate() const {
    if (max_tokens == 0) throw ConfigError("max_tokens must be positive");
    if (min_tokens > max_tokens) throw ConfigError("min_tokens exceeds max_tokens");
    for (std::size_t i = 0; i < model_rank.size(); ++i) {
        if (std::find(model_rank.begin(), model_rank.begin() + i, model_rank[i]) != model_rank.begin() + i) {
            throw ConfigError("model_rank lists '" + model_rank[i] + "' twice");
        }
    }
}

FilterConfig FilterConfig::from_json(const json& j) {
    FilterConfig cfg;
    try {
        cfg.min_tokens = j.value("min_tokens", cfg.min_tokens);
        cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
        cfg.refusal_window = j.value("refusal_window", cfg.refusal_window);
        cfg.refusal_patterns = j.value("refusal_patterns", cfg.refusal_patterns);
        cfg.model_rank = j.value("model_rank", cfg.model_rank);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad filter config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json FilterConfig::to_json() const {
    return {{"min_tokens", min_tokens},
            {"max_tokens", max_tokens},
            {"refusal_patterns", refusal_patterns},
            {"refusal_window", refusal_window},
            {"model_rank", model_rank}};
}

std::vector<std::string> load_patterns(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(line);
    }
    return out;
}

std::vector<std::string> load_patterns_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pattern file " + path);
    return load_patterns(in);
}

FilterDecision filter_length(const Conversation& conv, const Tokenizer& tok, const FilterConfig& cfg) {
    std::size_t total = 0;
    for (const auto& t : conv.turns) {
        total += tok.count(t.content);
    }
    if (total < cfg.min_tokens) return FilterDecision::drop(DropReason::TooShort);
    if (total > cfg.max_tokens) return FilterDecision::drop(DropReason::TooLong);
    return FilterDecision::keep();
}

namespace {

// Byte length of the first `n` code points of a UTF-8 string.
std::size_t prefix_bytes(std::string_view s, std::size_t n) {
    std::size_t i = 0;
    for (std::size_t cp = 0; cp < n && i < s.size(); ++cp) {
        ++i;
        while (i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) ++i;
    }
    return i;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

FilterDecision filter_refusal(const Conversation& conv, const FilterConfig& cfg) {
    if (cfg.refusal_patterns.empty()) return FilterDecision::keep();
    std::vector<std::string> patterns;
    patterns.reserve(cfg.refusal_patterns.size());
    for (const auto& p : cfg.refusal_patterns) patterns.push_back(ascii_lower(p));

    for (const auto& t : conv.turns) {
        if (t.role != Role::Assistant) continue;
        std::string_view head(t.content);
        head = head.substr(0, prefix_bytes(head, cfg.refusal_window));
        const std::string window = ascii_lower(head);
        for (const auto& p : patterns) {
            if (!p.empty() && window.find(p) != std::string::npos) {
                return FilterDecision::drop(DropReason::Refusal);
            }
        }
    }
    return FilterDecision::keep();
}

FilterDecision filter_structure(const Conversation& conv) {
    if (conv.turns.empty()) return FilterDecision::drop(DropReason::MissingTurn);
    for (const auto& t : conv.turns) {
        if (is_blank(t.content)) return FilterDecision::drop(DropReason::EmptyTurn);
    }
    std::size_t i = 0;
    if (conv.turns[0].role == Role::System) ++i;
    for (std::size_t k = i; k < conv.turns.size(); ++k) {
        if (conv.turns[k].role == Role::System) return FilterDecision::drop(DropReason::Malformed);
    }
    if (i == conv.turns.size()) return FilterDecision::drop(DropReason::MissingTurn);

    // user -> assistant -> (user | tool) ..., where tool is always answered by assistant.
    Role prev = Role::System;
    for (; i < conv.turns.size(); ++i) {
        const Role r = conv.turns[i].role;
        bool ok = false;
        switch (r) {
            case Role::User: ok = prev == Role::System || prev == Role::Assistant; break;
            case Role::Assistant: ok = prev == Role::User || prev == Role::Tool; break;
            case Role::Tool: ok = prev == Role::Assistant; break;
            case Role::System: ok = false; break;
        }
        if (!ok) return FilterDecision::drop(DropReason::MissingTurn);
        prev = r;
    }
    if (prev != Role::Assistant) return FilterDecision::drop(DropReason::MissingTurn);
    return FilterDecision::keep();
}

std::uint64_t duplicate_key(const Conversation& conv) {
    Fnv1a h;
    for (const auto& t : conv.turns) {
        if (t.role == Role::Assistant) continue;
        h.update(to_string(t.role)).update("\x1f").update(t.content).update("\x1e");
    }
    return h.digest();
}

std::size_t source_rank(const std::optional<std::string>& source, const std::vector<std::string>& ranks) {
    if (!source) return ranks.size();
    auto it = std::find(ranks.begin(), ranks.end(), *source);
    return static_cast<std::size_t>(it - ranks.begin());
}

void SourcePrioritizer::add(const Conversation& conv, std::size_t seq) {
    add(duplicate_key(conv), source_rank(conv.source_model, *ranks_), seq);
}

void SourcePrioritizer::add(std::uint64_t key, std::size_t rank, std::size_t seq) {
    auto [it, inserted] = best_.try_emplace(key, Best{rank, seq});
    if (!inserted) {
        auto& b = it->second;
        if (rank < b.rank || (rank == b.rank && seq < b.seq)) b = Best{rank, seq};
    }
}

void SourcePrioritizer::merge(const SourcePrioritizer& other) {
    for (const auto& [key, b] : other.best_) add(key, b.rank, b.seq);
}

bool SourcePrioritizer::is_winner(std::uint64_t key, std::size_t seq) const {
    auto it = best_.find(key);
    return it != best_.end() && it->second.seq == seq;
}

PrioritizeResult prioritize_sources(const std::vector<Conversation>& convs, const FilterConfig& cfg) {
    SourcePrioritizer p(cfg.model_rank);
    for (std::size_t i = 0; i < convs.size(); ++i) p.add(convs[i], i);
    PrioritizeResult out;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        (p.is_winner(convs[i], i) ? out.kept : out.dropped).push_back(convs[i]);
    }
    return out;
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Structure: return "structure";
        case Stage::Length: return "length";
        case Stage::Refusal: return "refusal";
        case Stage::Prioritize: return "prioritize";
    }
    return "unknown";
}

std::optional<Stage> parse_stage(std::string_view text) noexcept {
    for (Stage s : {Stage::Structure, Stage::Length, Stage::Refusal, Stage::Prioritize}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::vector<Stage> default_stage_order() {
    return {Stage::Structure, Stage::Length, Stage::Refusal, Stage::Prioritize};
}

std::size_t StageCounts::dropped_total() const noexcept {
    std::size_t n = 0;
    for (auto d : dropped) n += d;
    return n;
}

namespace {

json reason_counts(const std::array<std::size_t, kDropReasonCount>& counts) {
    json j = json::object();
    for (std::size_t r = 0; r < kDropReasonCount; ++r) {
        j[std::string(to_string(static_cast<DropReason>(r)))] = counts[r];
    }
    return j;
}

}  // namespace

json FilterReport::to_json() const {
    json stages_json = json::array();
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& s = stages[i];
        stages_json.push_back({{"stage", to_string(order[i])},
                               {"seen", s.seen},
                               {"kept", s.kept},
                               {"dropped", s.dropped_total()},
                               {"dropped_by_reason", reason_counts(s.dropped)}});
    }
    std::size_t dropped = 0;
    for (auto d : dropped_by_reason) dropped += d;
    return {{"total_input", total_input},
            {"total_kept", total_kept},
            {"dropped", dropped},
            {"ingest_errors", ingest_errors},
            {"dropped_by_reason", reason_counts(dropped_by_reason)},
            {"stages", std::move(stages_json)}};
}

FilterPipeline::FilterPipeline(FilterConfig cfg, std::vector<Stage> order, const Tokenizer& tok)
    : cfg_(std::move(cfg)), order_(std::move(order)), tok_(tok), prioritizer_(cfg_.model_rank) {
    cfg_.validate();
    for (std::size_t i = 0; i < order_.size(); ++i) {
        if (std::find(order_.begin(), order_.begin() + i, order_[i]) != order_.begin() + i) {
            throw ConfigError("stage '" + std::string(to_string(order_[i])) + "' listed twice");
        }
    }
    prioritize_at_ = static_cast<std::size_t>(std::find(order_.begin(), order_.end(), Stage::Prioritize) - order_.begin());
    report_.order = order_;
    report_.stages.resize(order_.size());
}

FilterDecision FilterPipeline::run_stage(Stage stage, const Conversation& conv) const {
    switch (stage) {
        case Stage::Structure: return filter_structure(conv);
        case Stage::Length: return filter_length(conv, tok_, cfg_);
        case Stage::Refusal: return filter_refusal(conv, cfg_);
        case Stage::Prioritize: break;
    }
    return FilterDecision::keep();
}

void FilterPipeline::observe(const Conversation& conv, std::size_t seq) {
    if (prioritize_at_ == order_.size()) return;
    for (std::size_t i = 0; i < prioritize_at_; ++i) {
        if (!run_stage(order_[i], conv).kept()) return;
    }
    prioritizer_.add(conv, seq);
}

void FilterPipeline::finish() { finished_ = true; }

FilterDecision FilterPipeline::decide(const Conversation& conv, std::size_t seq) {
    if (prioritize_at_ != order_.size() && !finished_) {
        throw Error("FilterPipeline::decide called before finish()");
    }
    ++report_.total_input;
    for (std::size_t i = 0; i < order_.size(); ++i) {
        auto& counts = report_.stages[i];
        ++counts.seen;
        FilterDecision d = order_[i] == Stage::Prioritize
                               ? (prioritizer_.is_winner(conv, seq) ? FilterDecision::keep()
                                                                     : FilterDecision::drop(DropReason::DuplicateLowerRank))
                               : run_stage(order_[i], conv);
        if (!d.kept()) {
            const auto r = static_cast<std::size_t>(*d.reason);
            ++counts.dropped[r];
            ++report_.dropped_by_reason[r];
            return d;
        }
        ++counts.kept;
    }
    ++report_.total_kept;
    return FilterDecision::keep();
}

PipelineResult run_pipeline(const std::vector<Conversation>& convs, const FilterConfig& cfg,
                            const std::vector<Stage>& order, const Tokenizer& tok) {
    FilterPipeline pipeline(cfg, order, tok);
    for (std::size_t i = 0; i < convs.size(); ++i) pipeline.observe(convs[i], i);
    pipeline.finish();
    PipelineResult out;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        auto d = pipeline.decide(convs[i], i);
        if (d.kept()) {
            out.kept.push_back(convs[i]);
        } else {
            out.dropped.emplace_back(convs[i], *d.reason);
        }
    }
    out.report = pipeline.report();
    return out;
}

}  // namespace forge
