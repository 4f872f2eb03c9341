#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/corpus.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

/// Per-turn layout: <start_of_turn> role "\n" content <end_of_turn> "\n".
struct ChatTemplate {
    std::string start_of_turn = "<|im_start|>";
    std::string end_of_turn = "<|im_end|>";
    std::string pad = "<|pad|>";
    std::string system_name = "system";
    std::string user_name = "user";
    std::string assistant_name = "assistant";
    std::string tool_name = "tool";

    const std::string& role_name(Role role) const noexcept;

    static ChatTemplate from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RenderedSample {
    std::vector<TokenId> tokens;
    std::vector<Label> labels;  // tokens[i] or kIgnoreIndex
    std::size_t supervised_count = 0;

    std::size_t size() const noexcept { return tokens.size(); }
    bool operator==(const RenderedSample&) const = default;
};

/// Renders a conversation. Only assistant content and the assistant's
/// end-of-turn marker are supervised; throws RenderError(NoSupervisedTokens)
/// when the conversation has no assistant turn.
RenderedSample render(const Conversation& conv, const ChatTemplate& tmpl, const Tokenizer& tok);

struct TokenSplit {
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;

    /// output / total, or 0 for an empty corpus.
    double output_fraction() const noexcept;
    void add(const RenderedSample& s) noexcept;
    TokenSplit& merge(const TokenSplit& other) noexcept;
    nlohmann::json to_json() const;
};

TokenSplit token_split(const std::vector<RenderedSample>& samples) noexcept;

inline constexpr const char* kUncategorized = "Uncategorized";

struct CategoryRow {
    std::string category;
    std::size_t tokens = 0;
    double proportion = 0.0;  // fraction of all tokens, in [0, 1]
};

/// Token totals per category; merging partial accumulators is order-independent.
class CategoryAccumulator {
public:
    void add(const Conversation& conv, const RenderedSample& sample);
    void add(const std::string& category, std::size_t tokens);
    CategoryAccumulator& merge(const CategoryAccumulator& other);

    /// Rows ordered by token count descending, then name.
    std::vector<CategoryRow> table() const;
    std::size_t total() const noexcept { return total_; }

private:
    std::map<std::string, std::size_t> tokens_;
    std::size_t total_ = 0;
};

std::vector<CategoryRow> category_table(const std::vector<Conversation>& convs,
                                        const std::vector<RenderedSample>& samples);

/// Aligned index/token/label/piece columns for debugging.
std::string preview(const RenderedSample& sample, const Tokenizer& tok);

}  // namespace forge
