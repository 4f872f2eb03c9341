#include <doctest.h>

#include "forge/agentic.hpp"
#include "forge/protocol.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::proto;

namespace {

std::size_t count_kind(const TagTree& t, DiagnosticKind k) {
    return std::count_if(t.diagnostics.begin(), t.diagnostics.end(), [&](const Diagnostic& d) { return d.kind == k; });
}

const char* kComplete =
    "<SCRATCHPAD>\n<RESTATEMENT>r</RESTATEMENT>\n<REASONING>\n<THOUGHT_1>a</THOUGHT_1>\n<THOUGHT_2>b</THOUGHT_2>\n"
    "</REASONING>\n<PLAN><STEP_1>s</STEP_1><STEP_2>t</STEP_2></PLAN>\n"
    "<PYDANTIC_SCHEMAS><SCHEMA_1>class A: pass</SCHEMA_1></PYDANTIC_SCHEMAS>\n"
    "<DIAGRAM>graph LR; A --> B <not a tag></DIAGRAM>\n<REFLECTION>ok</REFLECTION>\n</SCRATCHPAD>\n"
    "<SOLUTION>if a < b: print('<x>')</SOLUTION>\n<EXPLANATION>e</EXPLANATION>\n<UNIT_TEST>assert 1</UNIT_TEST>\n";

}  // namespace

TEST_CASE("sample prefix parses cleanly in partial mode") {
    auto tree = parse_agentic(test::fixture("agentic_prefix.txt"), AgenticSchema::standard(), {true});
    CHECK(tree.diagnostics.empty());
    const auto* pad = tree.root.find("SCRATCHPAD");
    REQUIRE(pad != nullptr);
    CHECK(pad->find("RESTATEMENT") != nullptr);
    const auto* reasoning = pad->find("REASONING");
    REQUIRE(reasoning != nullptr);
    const auto* thought = reasoning->find("THOUGHT");
    REQUIRE(thought != nullptr);
    CHECK(thought->index == 1u);
    CHECK(thought->closed);
    CHECK(thought->text.find("Huggingface API") != std::string::npos);
}

TEST_CASE("sample prefix as a finished document reports what is missing") {
    auto tree = parse_agentic(test::fixture("agentic_prefix.txt"));
    CHECK(count_kind(tree, DiagnosticKind::UnbalancedTag) == 2);  // SCRATCHPAD and REASONING left open
    CHECK(count_kind(tree, DiagnosticKind::MissingSection) >= 3);
}

TEST_CASE("complete document has no diagnostics") {
    auto tree = parse_agentic(kComplete);
    CHECK(tree.diagnostics.empty());
    CHECK(tree.root.children.size() == 4);
    const auto* diagram = tree.root.find("SCRATCHPAD")->find("DIAGRAM");
    REQUIRE(diagram != nullptr);
    CHECK(diagram->text.find("<not a tag>") != std::string::npos);
    CHECK(tree.root.find("SOLUTION")->text == "if a < b: print('<x>')");
}

TEST_CASE("index gap") {
    auto tree = parse_agentic("<REASONING><THOUGHT_1>a</THOUGHT_1><THOUGHT_3>c</THOUGHT_3></REASONING>",
                              AgenticSchema::standard(), {true});
    REQUIRE(count_kind(tree, DiagnosticKind::IndexGap) == 1);
    auto it = std::find_if(tree.diagnostics.begin(), tree.diagnostics.end(),
                           [](auto& d) { return d.kind == DiagnosticKind::IndexGap; });
    CHECK(it->tag == "THOUGHT_3");
    CHECK(it->message.find('2') != std::string::npos);

    auto repeat = parse_agentic("<PLAN><STEP_1>a</STEP_1><STEP_1>b</STEP_1></PLAN>", AgenticSchema::standard(), {true});
    CHECK(count_kind(repeat, DiagnosticKind::IndexGap) == 1);
}

TEST_CASE("plain prose reports every required top-level section") {
    auto tree = parse_agentic("Just an answer without any structure.");
    CHECK(tree.root.children.empty());
    std::vector<std::string> missing;
    for (auto& d : tree.diagnostics) {
        CHECK(d.kind == DiagnosticKind::MissingSection);
        missing.push_back(d.tag);
    }
    CHECK(missing == std::vector<std::string>{"SCRATCHPAD", "SOLUTION", "EXPLANATION", "UNIT_TEST"});
}

TEST_CASE("missing reflection") {
    std::string doc = kComplete;
    const auto a = doc.find("<REFLECTION>");
    const auto b = doc.find("</REFLECTION>") + std::string("</REFLECTION>").size();
    doc.erase(a, b - a);
    auto tree = parse_agentic(doc);
    REQUIRE(tree.diagnostics.size() == 1);
    CHECK(tree.diagnostics[0].kind == DiagnosticKind::MissingSection);
    CHECK(tree.diagnostics[0].tag == "REFLECTION");
}

TEST_CASE("solution inside the scratchpad is misplaced") {
    auto tree = parse_agentic("<SCRATCHPAD><SOLUTION>x</SOLUTION></SCRATCHPAD>", AgenticSchema::standard(), {true});
    CHECK(count_kind(tree, DiagnosticKind::MisplacedSection) == 1);
}

TEST_CASE("unknown tags are kept and diagnosed") {
    auto tree = parse_agentic("<SOLUTION>a</SOLUTION><MYSTERY>b</MYSTERY>", AgenticSchema::standard(), {true});
    CHECK(count_kind(tree, DiagnosticKind::UnknownTag) == 1);
    CHECK(tree.root.find("MYSTERY") != nullptr);
}

TEST_CASE("free-floating registry tags are allowed anywhere") {
    auto tree = parse_agentic("<THINKING>t</THINKING><SCRATCHPAD><INNER_MONOLOGUE>m</INNER_MONOLOGUE>"
                              "<REASONING><EXECUTION>e</EXECUTION></REASONING></SCRATCHPAD>",
                              AgenticSchema::standard(), {true});
    CHECK(count_kind(tree, DiagnosticKind::MisplacedSection) == 0);
    CHECK(count_kind(tree, DiagnosticKind::UnknownTag) == 0);
    CHECK(count_kind(tree, DiagnosticKind::UnbalancedTag) == 0);
}

TEST_CASE("unbalanced tags") {
    auto stray = parse_agentic("</PLAN>text", AgenticSchema::standard(), {true});
    CHECK(count_kind(stray, DiagnosticKind::UnbalancedTag) == 1);
    auto crossed = parse_agentic("<SCRATCHPAD><PLAN>x</SCRATCHPAD>", AgenticSchema::standard(), {true});
    CHECK(count_kind(crossed, DiagnosticKind::UnbalancedTag) == 1);
}

TEST_CASE("invalid utf-8 is the only hard failure") {
    CHECK_THROWS_AS(parse_agentic("<SOLUTION>\xFF</SOLUTION>"), ProtocolError);
    CHECK_NOTHROW(parse_agentic("<<<>>></></SOLUTION><"));
}

TEST_CASE("diagnostics are deterministic and ordered by offset") {
    std::mt19937_64 rng(12);
    static const std::vector<std::string> pieces{"<SCRATCHPAD>", "</SCRATCHPAD>", "<THOUGHT_1>", "<THOUGHT_3>", "</THOUGHT_3>",
                                                 "<REASONING>", "</REASONING>", "<SOLUTION>", "</SOLUTION>", "<FOO>",
                                                 "</BAR>", "text ", "<STEP_2>", "<PLAN>", "</PLAN>", "<", "<DIAGRAM>", "</DIAGRAM>"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string doc;
        const int n = std::uniform_int_distribution<int>(0, 12)(rng);
        for (int i = 0; i < n; ++i) doc += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
        for (bool partial : {false, true}) {
            auto a = parse_agentic(doc, AgenticSchema::standard(), {partial});
            auto b = parse_agentic(doc, AgenticSchema::standard(), {partial});
            CHECK(a.diagnostics == b.diagnostics);
            CHECK(a.to_json() == b.to_json());
            CHECK(std::is_sorted(a.diagnostics.begin(), a.diagnostics.end(),
                                 [](auto& x, auto& y) { return x.offset < y.offset; }));
        }
    }
}
