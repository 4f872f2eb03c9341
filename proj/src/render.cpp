#include "forge/render.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

const std::string& ChatTemplate::role_name(Role role) const noexcept {
    switch (role) {
        case Role::System: return system_name;
        case Role::User: return user_name;
        case Role::Assistant: return assistant_name;
        case Role::Tool: return tool_name;
    }
    return user_name;
}

ChatTemplate ChatTemplate::from_json(const json& j) {
    ChatTemplate t;
    try {
        t.start_of_turn = j.value("start_of_turn", t.start_of_turn);
        t.end_of_turn = j.value("end_of_turn", t.end_of_turn);
        t.pad = j.value("pad", t.pad);
        if (auto roles = j.find("roles"); roles != j.end()) {
            t.system_name = roles->value("system", t.system_name);
            t.user_name = roles->value("user", t.user_name);
            t.assistant_name = roles->value("assistant", t.assistant_name);
            t.tool_name = roles->value("tool", t.tool_name);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad template config: ") + e.what());
    }
    return t;
}

json ChatTemplate::to_json() const {
    return {{"start_of_turn", start_of_turn},
            {"end_of_turn", end_of_turn},
            {"pad", pad},
            {"roles", {{"system", system_name}, {"user", user_name}, {"assistant", assistant_name}, {"tool", tool_name}}}};
}

namespace {

void append(RenderedSample& s, TokenId id, bool supervised) {
    s.tokens.push_back(id);
    s.labels.push_back(supervised ? static_cast<Label>(id) : kIgnoreIndex);
    s.supervised_count += supervised;
}

void append(RenderedSample& s, const std::vector<TokenId>& ids, bool supervised) {
    for (TokenId id : ids) append(s, id, supervised);
}

}  // namespace

RenderedSample render(const Conversation& conv, const ChatTemplate& tmpl, const Tokenizer& tok) {
    const TokenId start = tok.special(tmpl.start_of_turn);
    const TokenId end = tok.special(tmpl.end_of_turn);
    const auto newline = tok.encode("\n");

    RenderedSample s;
    for (const auto& turn : conv.turns) {
        const bool train = turn.role == Role::Assistant;
        append(s, start, false);
        append(s, tok.encode(tmpl.role_name(turn.role)), false);
        append(s, newline, false);
        append(s, tok.encode(turn.content), train);
        append(s, end, train);
        append(s, newline, false);
    }
    if (s.supervised_count == 0) {
        throw RenderError(RenderError::Kind::NoSupervisedTokens,
                          "conversation '" + conv.id + "' has no assistant turn to supervise");
    }
    return s;
}

double TokenSplit::output_fraction() const noexcept {
    const std::size_t total = input_tokens + output_tokens;
    return total == 0 ? 0.0 : static_cast<double>(output_tokens) / static_cast<double>(total);
}

void TokenSplit::add(const RenderedSample& s) noexcept {
    output_tokens += s.supervised_count;
    input_tokens += s.size() - s.supervised_count;
}

TokenSplit& TokenSplit::merge(const TokenSplit& other) noexcept {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    return *this;
}

json TokenSplit::to_json() const {
    return {{"input_tokens", input_tokens},
            {"output_tokens", output_tokens},
            {"total_tokens", input_tokens + output_tokens},
            {"output_fraction", output_fraction()}};
}

TokenSplit token_split(const std::vector<RenderedSample>& samples) noexcept {
    TokenSplit split;
    for (const auto& s : samples) split.add(s);
    return split;
}

void CategoryAccumulator::add(const Conversation& conv, const RenderedSample& sample) {
    add(conv.category.value_or(kUncategorized), sample.size());
}

void CategoryAccumulator::add(const std::string& category, std::size_t tokens) {
    tokens_[category] += tokens;
    total_ += tokens;
}

CategoryAccumulator& CategoryAccumulator::merge(const CategoryAccumulator& other) {
    for (const auto& [name, n] : other.tokens_) add(name, n);
    return *this;
}

std::vector<CategoryRow> CategoryAccumulator::table() const {
    std::vector<CategoryRow> rows;
    rows.reserve(tokens_.size());
    for (const auto& [name, n] : tokens_) {
        rows.push_back({name, n, total_ == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total_)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.tokens > b.tokens; });
    return rows;
}

std::vector<CategoryRow> category_table(const std::vector<Conversation>& convs,
                                        const std::vector<RenderedSample>& samples) {
    if (convs.size() != samples.size()) throw Error("category_table: conversations and samples differ in length");
    CategoryAccumulator acc;
    for (std::size_t i = 0; i < convs.size(); ++i) acc.add(convs[i], samples[i]);
    return acc.table();
}

std::string preview(const RenderedSample& sample, const Tokenizer& tok) {
    std::ostringstream out;
    out << std::setw(6) << "idx" << std::setw(8) << "token" << std::setw(8) << "label" << "  piece\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const TokenId id = sample.tokens[i];
        std::string piece = tok.decode(std::span<const TokenId>(&id, 1));
        std::string shown;
        for (unsigned char c : piece) {
            if (c == '\n') {
                shown += "\\n";
            } else if (c < 0x20 || c >= 0x80) {
                std::ostringstream hex;
                hex << "\\x" << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
                shown += hex.str();
            } else {
                shown.push_back(static_cast<char>(c));
            }
        }
        out << std::setw(6) << i << std::setw(8) << id << std::setw(8) << sample.labels[i] << "  " << shown << '\n';
    }
    return out.str();
}

}  // namespace forge
