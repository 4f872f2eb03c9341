#include <doctest.h>

#include <cmath>

#include "forge/error.hpp"
#include "forge/render.hpp"
#include "support.hpp"

using namespace forge;

namespace {

Conversation conv(std::vector<Turn> turns, std::optional<std::string> category = std::nullopt) {
    Conversation c;
    c.id = "r";
    c.turns = std::move(turns);
    c.category = std::move(category);
    return c;
}

// Hand-built oracle for the two-turn example: every byte written out.
std::pair<std::vector<TokenId>, std::vector<Label>> hi_yo_oracle() {
    const Label I = kIgnoreIndex;
    std::vector<TokenId> t{256, 'u', 's', 'e', 'r', '\n', 'H', 'i', 257, '\n',
                           256, 'a', 's', 's', 'i', 's', 't', 'a', 'n', 't', '\n', 'Y', 'o', 257, '\n'};
    std::vector<Label> l(t.size(), I);
    l[21] = 'Y';
    l[22] = 'o';
    l[23] = 257;
    return {t, l};
}

}  // namespace

TEST_CASE("two-turn example matches the hand-rendered oracle") {
    ReferenceTokenizer tok;
    auto s = render(conv({{Role::User, "Hi"}, {Role::Assistant, "Yo"}}), ChatTemplate{}, tok);
    auto [tokens, labels] = hi_yo_oracle();
    CHECK(s.size() == 25);
    CHECK(s.tokens == tokens);
    CHECK(s.labels == labels);
    CHECK(s.supervised_count == 3);

    auto split = token_split({s});
    CHECK(split.input_tokens == 22);
    CHECK(split.output_tokens == 3);
    CHECK(std::round(split.output_fraction() * 100) / 100 == doctest::Approx(0.12));
}

TEST_CASE("tool turns are masked") {
    ReferenceTokenizer tok;
    auto s = render(conv({{Role::User, "Hi"}, {Role::Assistant, "Yo"}, {Role::Tool, "{\"t\":1}"}, {Role::Assistant, "Done"}}),
                    ChatTemplate{}, tok);
    // tool turn spans 25 .. 25 + 1+4+1+7+1+1
    for (std::size_t i = 25; i < 25 + 15; ++i) CHECK(s.labels[i] == kIgnoreIndex);
    CHECK(s.supervised_count == 3 + 5);
}

TEST_CASE("no assistant turn is an error") {
    ReferenceTokenizer tok;
    try {
        render(conv({{Role::User, "Hi"}}), ChatTemplate{}, tok);
        FAIL("expected RenderError");
    } catch (const RenderError& e) {
        CHECK(e.kind() == RenderError::Kind::NoSupervisedTokens);
    }
}

TEST_CASE("template specials must exist in the tokenizer") {
    ReferenceTokenizer tok;
    ChatTemplate t;
    t.start_of_turn = "<s>";
    CHECK_THROWS_AS(render(conv({{Role::User, "Hi"}, {Role::Assistant, "Yo"}}), t, tok), RenderError);
}

TEST_CASE("empty corpus split reports zero fraction") {
    auto split = token_split({});
    CHECK(split.input_tokens == 0);
    CHECK(split.output_tokens == 0);
    CHECK(split.output_fraction() == 0.0);
    TokenSplit target_scale{120'000'000, 270'000'000};
    CHECK(target_scale.output_fraction() == doctest::Approx(0.69).epsilon(0.005));
}

TEST_CASE("category table") {
    CategoryAccumulator acc;
    acc.add("Math", 26);
    acc.add("Other", 364);
    auto rows = acc.table();
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].category == "Other");
    CHECK(std::round(rows[1].proportion * 1000) / 10 == doctest::Approx(6.7));

    CategoryAccumulator one;
    one.add("Only", 5);
    CHECK(one.table()[0].proportion == 1.0);

    CategoryAccumulator even;
    even.add("A", 7);
    even.add("B", 7);
    CHECK(even.table()[0].proportion == 0.5);
    CHECK(even.table()[1].proportion == 0.5);
    CHECK(even.table()[0].category == "A");

    ReferenceTokenizer tok;
    auto c = conv({{Role::User, "Hi"}, {Role::Assistant, "Yo"}});
    auto t = category_table({c}, {render(c, ChatTemplate{}, tok)});
    CHECK(t[0].category == kUncategorized);
    CHECK(t[0].tokens == 25);
}

TEST_CASE("category accumulators merge in any order") {
    std::mt19937_64 rng(4);
    const std::vector<std::string> names{"Math", "Coding", "General", "RAG"};
    CategoryAccumulator whole, a, b;
    for (int i = 0; i < 500; ++i) {
        auto& name = names[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
        const auto n = std::uniform_int_distribution<std::size_t>(1, 1000)(rng);
        whole.add(name, n);
        (i % 3 ? a : b).add(name, n);
    }
    CategoryAccumulator ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    CHECK(ab.total() == whole.total());
    double sum = 0;
    auto rows = whole.table();
    for (auto& r : rows) sum += r.proportion;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(ab.table()[i].tokens == rows[i].tokens);
        CHECK(ba.table()[i].category == rows[i].category);
    }
}

TEST_CASE("masking properties over fuzzed conversations") {
    ReferenceTokenizer tok;
    ChatTemplate tmpl;
    const TokenId eot = tok.special(tmpl.end_of_turn);
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 1000; ++i) {
        auto c = test::random_conversation(rng, "m");
        auto s = render(c, tmpl, tok);
        REQUIRE(s.labels.size() == s.tokens.size());

        std::string assistant_text;
        for (auto& t : c.turns)
            if (t.role == Role::Assistant) assistant_text += t.content;

        std::vector<TokenId> supervised;
        std::size_t count = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (s.labels[k] == kIgnoreIndex) continue;
            CHECK(s.labels[k] == static_cast<Label>(s.tokens[k]));
            ++count;
            if (s.tokens[k] != eot) supervised.push_back(s.tokens[k]);
        }
        CHECK(count == s.supervised_count);
        CHECK(tok.decode(supervised) == assistant_text);

        // walk turns by construction; only assistant content + end marker supervised
        std::size_t pos = 0;
        for (auto& t : c.turns) {
            const std::size_t header = 1 + tmpl.role_name(t.role).size() + 1;
            const std::size_t body = t.content.size();
            for (std::size_t k = pos; k < pos + header + body + 2; ++k) {
                const bool inside = k >= pos + header && k <= pos + header + body;
                const bool want = t.role == Role::Assistant && inside;
                CHECK((s.labels[k] != kIgnoreIndex) == want);
            }
            pos += header + body + 2;
        }
        CHECK(pos == s.size());

        // prefix composition
        if (c.turns.size() > 2) {
            auto shorter = c;
            shorter.turns.pop_back();
            shorter.turns.pop_back();
            bool has_assistant = false;
            for (auto& t : shorter.turns) has_assistant |= t.role == Role::Assistant;
            if (has_assistant) {
                auto p = render(shorter, tmpl, tok);
                CHECK(std::equal(p.tokens.begin(), p.tokens.end(), s.tokens.begin()));
                CHECK(std::equal(p.labels.begin(), p.labels.end(), s.labels.begin()));
            }
        }
    }
}

TEST_CASE("preview lists every position") {
    ReferenceTokenizer tok;
    auto s = render(conv({{Role::User, "Hi"}, {Role::Assistant, "Yo"}}), ChatTemplate{}, tok);
    auto text = preview(s, tok);
    CHECK(std::count(text.begin(), text.end(), '\n') >= 25);
    CHECK(text.find("<|im_start|>") != std::string::npos);
}
