#include <doctest.h>

#include <sstream>

#include "forge/corpus.hpp"
#include "forge/error.hpp"
#include "forge/tokenizer.hpp"
#include "support.hpp"

using namespace forge;

TEST_CASE("ingest maps a minimal record") {
    std::istringstream in(R"({"id":"a","messages":[{"role":"user","content":"Hi"}]})");
    auto r = ingest(in);
    REQUIRE(r.errors.empty());
    REQUIRE(r.conversations.size() == 1);
    CHECK(r.conversations[0].id == "a");
    REQUIRE(r.conversations[0].turns.size() == 1);
    CHECK(r.conversations[0].turns[0] == Turn{Role::User, "Hi"});
    CHECK_FALSE(r.conversations[0].source_model);
}

TEST_CASE("ingest rejects unknown roles with the line number") {
    std::istringstream in(R"({"id":"a","messages":[{"role":"narrator","content":"Once"}]})");
    auto r = ingest(in);
    CHECK(r.conversations.empty());
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].kind == RecordError::Kind::UnknownRole);
    CHECK(r.errors[0].line == 1);
}

TEST_CASE("ingest of an empty stream yields nothing") {
    std::istringstream in("");
    auto r = ingest(in);
    CHECK(r.conversations.empty());
    CHECK(r.errors.empty());
}

TEST_CASE("ingest keeps going past bad lines and preserves order") {
    std::istringstream in(
        "{\"id\":\"one\",\"category\":\"Math\",\"source_model\":\"m\",\"messages\":[]}\n"
        "not json\n"
        "\n"
        "{\"messages\":[]}\n"
        "{\"id\":\"two\",\"messages\":[{\"role\":\"user\"}]}\n"
        "{\"id\":\"three\",\"messages\":\"nope\"}\n"
        "{\"id\":\"four\",\"messages\":[],\"license\":\"cc-by\"}\n");
    ConversationReader reader(in);
    std::vector<std::string> ids;
    std::vector<RecordError::Kind> kinds;
    std::vector<std::size_t> lines;
    while (auto item = reader.next()) {
        if (auto* c = std::get_if<Conversation>(&*item)) {
            ids.push_back(c->id);
        } else {
            kinds.push_back(std::get<RecordError>(*item).kind);
            lines.push_back(std::get<RecordError>(*item).line);
        }
    }
    CHECK(ids == std::vector<std::string>{"one", "four"});
    using K = RecordError::Kind;
    CHECK(kinds == std::vector<K>{K::InvalidJson, K::EmptyLine, K::MissingField, K::MissingField, K::WrongType});
    CHECK(lines == std::vector<std::size_t>{2, 3, 4, 5, 6});
    CHECK(reader.lines_read() == 7);
    CHECK(reader.errors() == 5);
}

TEST_CASE("unknown fields survive a round trip through JSON") {
    auto item = parse_record(R"({"id":"x","license":"mit","tags":[1,2],"messages":[{"role":"assistant","content":"ok"}]})", 1);
    auto& conv = std::get<Conversation>(item);
    CHECK(conv.extra.at("license") == "mit");
    auto again = std::get<Conversation>(parse_record(to_jsonl_line(conv), 1));
    CHECK(again == conv);
}

TEST_CASE("ingest totality and order over random streams") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::ostringstream text;
        std::vector<std::string> expected_ids;
        const int n = std::uniform_int_distribution<int>(0, 30)(rng);
        for (int i = 0; i < n; ++i) {
            switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
                case 0: text << "{broken\n"; break;
                case 1: text << R"({"id":"r","messages":[{"role":"robot","content":"x"}]})" << '\n'; break;
                default: {
                    auto c = test::random_conversation(rng, "c" + std::to_string(i));
                    expected_ids.push_back(c.id);
                    text << to_jsonl_line(c) << '\n';
                }
            }
        }
        std::istringstream in(text.str());
        auto r = ingest(in);
        CHECK(r.conversations.size() + r.errors.size() == static_cast<std::size_t>(n));
        std::vector<std::string> ids;
        for (auto& c : r.conversations) ids.push_back(c.id);
        CHECK(ids == expected_ids);
    }
}

TEST_CASE("reference tokenizer is byte level") {
    ReferenceTokenizer tok;
    CHECK(tok.encode("Hi") == std::vector<TokenId>{72, 105});
    CHECK(tok.encode("").empty());
    // U+00E9 through the independent bit-layout encoder.
    const std::string e_acute = test::utf8_encode(0xE9);
    REQUIRE(e_acute == "é");
    CHECK(tok.encode(e_acute) == std::vector<TokenId>{195, 169});
}

TEST_CASE("reference tokenizer specials follow the byte range in declaration order") {
    ReferenceTokenizer tok;
    CHECK(tok.special("<|im_start|>") == 256);
    CHECK(tok.special("<|im_end|>") == 257);
    CHECK(tok.special("<|pad|>") == 258);
    CHECK(tok.vocab_size() == 259);
    CHECK_THROWS_AS(tok.special("<|nope|>"), RenderError);
    CHECK_THROWS_AS(ReferenceTokenizer({"a", "a"}), ConfigError);
    const std::vector<TokenId> ids{72, 256, 105};
    CHECK(tok.decode(ids) == "H<|im_start|>i");
    const std::vector<TokenId> bad{999};
    CHECK_THROWS_AS(tok.decode(bad), FormatError);
}

TEST_CASE("reference tokenizer round trips and never emits special ids for text") {
    ReferenceTokenizer tok;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto s = test::random_unicode(rng, 64);
        const auto ids = tok.encode(s);
        CHECK(ids.size() == s.size());
        CHECK(tok.decode(ids) == s);
        CHECK(std::all_of(ids.begin(), ids.end(), [](TokenId id) { return id < ReferenceTokenizer::kFirstSpecial; }));
    }
}
