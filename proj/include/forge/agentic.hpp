#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace forge::proto {

struct TagNode {
    std::string name;                 // as written, e.g. THOUGHT_3; empty for the document root
    std::string family;               // name without the numeric suffix for indexed tags
    std::optional<unsigned> index;    // N of THOUGHT_N / STEP_N / SCHEMA_N
    std::size_t offset = 0;
    std::size_t end_offset = 0;
    bool closed = false;
    std::string text;                 // direct text content, concatenated
    std::vector<TagNode> children;

    const TagNode* find(std::string_view family_name) const;
};

enum class DiagnosticKind { UnknownTag, IndexGap, MissingSection, UnbalancedTag, MisplacedSection };
std::string_view to_string(DiagnosticKind kind) noexcept;

struct Diagnostic {
    DiagnosticKind kind;
    std::size_t offset;
    std::string tag;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

struct TagTree {
    TagNode root;
    std::vector<Diagnostic> diagnostics;  // ordered by offset

    nlohmann::json to_json() const;
};

/// The reasoning-tag registry and the expected nesting:
///   SCRATCHPAD{RESTATEMENT, REASONING{THOUGHT_N}, PLAN{STEP_N}, PYDANTIC_SCHEMAS{SCHEMA_N}, DIAGRAM, REFLECTION}
///   SOLUTION, EXPLANATION, UNIT_TEST
/// INNER_MONOLOGUE, EXECUTION and THINKING are registered and may appear anywhere.
struct AgenticSchema {
    struct Rule {
        std::string family;
        bool indexed = false;
        std::optional<std::string> parent;  // "" = document root; nullopt = anywhere
    };
    std::vector<Rule> rules;
    std::vector<std::pair<std::string, std::vector<std::string>>> required;  // parent family -> children

    static AgenticSchema standard();

    const Rule* rule(std::string_view family) const;
    const std::vector<std::string>* required_children(std::string_view family) const;
};

struct AgenticOptions {
    /// Treat the text as an unfinished generation: tags still open at the end
    /// and sections that could still arrive are not diagnosed.
    bool partial = false;
};

/// Error-tolerant: schema violations become diagnostics. Throws
/// ProtocolError(InvalidUtf8) only when the text is not valid UTF-8.
TagTree parse_agentic(std::string_view text, const AgenticSchema& schema = AgenticSchema::standard(),
                      const AgenticOptions& opts = {});

}  // namespace forge::proto
