#pragma once

// Tag-delimited structured output: <tools>, <tool_call>, <tool_response>,
// <co:N> citations and the agentic reasoning tags. The surface is a restricted
// XML-like grammar: <NAME> and </NAME> with NAME = [A-Za-z_][A-Za-z0-9_]*, plus
// <co:N> / <co: N>. No attributes, no self-closing tags, case-sensitive names.
// Anything that does not lex as a recognized tag is text.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"

namespace forge::proto {

enum class ErrorKind { UnbalancedTag, MalformedPayload, NestedCitation, DuplicateTool, InvalidUtf8 };
std::string_view to_string(ErrorKind kind) noexcept;

class ProtocolError : public Error {
public:
    ProtocolError(ErrorKind kind, std::size_t offset, const std::string& detail);
    ErrorKind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    ErrorKind kind_;
    std::size_t offset_;
};

struct ToolDefinition {
    std::string name;
    nlohmann::json schema = nlohmann::json::object();  // JSON-schema for the parameters
    std::optional<std::string> description;

    bool operator==(const ToolDefinition&) const = default;
};

struct ToolCall {
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const ToolCall&) const = default;
};

struct CitationSpan {
    std::uint32_t doc_id = 0;
    std::size_t start = 0;  // byte offsets into the tag-free text
    std::size_t end = 0;
    std::string text;

    bool operator==(const CitationSpan&) const = default;
};

/// Which tags the lexer recognizes; everything else stays text.
enum class TagSet {
    Tools,      // tools, tool_call, tool_response
    Citations,  // co
    All,        // any identifier tag plus co
    Agentic,    // any identifier tag; tool and co tags carry no special meaning
};

struct Event {
    enum class Kind { TagOpen, TagClose, Text, ToolCallComplete, CitationComplete, Error };

    Kind kind = Kind::Text;
    std::size_t offset = 0;  // byte offset in the input
    std::string name;        // tag name for TagOpen/TagClose
    std::string text;        // Text payload or error detail
    std::optional<std::uint32_t> doc_id;
    std::optional<ToolCall> call;
    std::optional<CitationSpan> citation;
    std::optional<ErrorKind> error;

    bool operator==(const Event&) const = default;
};

std::string_view to_string(Event::Kind kind) noexcept;
nlohmann::json to_json(const Event& e);

/// Incremental lexer. Output is independent of how the input is chunked:
/// text runs are emitted whole, just before the next tag or at finish().
/// After an Error event the parser ignores further input.
class TagStreamParser {
public:
    explicit TagStreamParser(TagSet tags = TagSet::All) : tags_(tags) {}

    void feed(std::string_view chunk, std::vector<Event>& out);
    void finish(std::vector<Event>& out);

    bool failed() const noexcept { return failed_; }

private:
    enum class Lex { NeedMore, NotTag, Tag };
    struct TagToken {
        bool closing = false;
        std::string name;
        std::optional<std::uint32_t> doc_id;
        std::size_t length = 0;
    };

    void drain(bool eof, std::vector<Event>& out);
    Lex classify(std::string_view s, bool eof, TagToken& tok) const;
    bool recognized(std::string_view name) const;
    bool could_be_recognized(std::string_view prefix) const;
    void append_text(std::string_view s);
    void flush_text(std::vector<Event>& out);
    void on_tag(const TagToken& tok, std::size_t offset, std::vector<Event>& out);
    void fail(ErrorKind kind, std::size_t offset, std::string detail, std::vector<Event>& out);

    TagSet tags_;
    std::string pending_;
    std::size_t pending_offset_ = 0;  // input offset of pending_[0]
    std::string text_;
    std::size_t text_offset_ = 0;
    std::size_t clean_offset_ = 0;  // bytes of text emitted so far

    struct Open {
        std::string name;
        std::size_t offset;
    };
    std::optional<Open> opaque_;  // raw region: only its own close tag ends it
    std::string opaque_body_;

    struct OpenCitation {
        std::uint32_t doc_id;
        std::size_t offset;
        std::size_t clean_start;
    };
    std::optional<OpenCitation> citation_;
    std::string citation_text_;
    bool failed_ = false;
};

/// Whole-text lexing; equal to a single feed() followed by finish().
std::vector<Event> lex(std::string_view text, TagSet tags = TagSet::All);
/// Lexes the concatenation of `chunks` incrementally.
std::vector<Event> stream_events(std::span<const std::string_view> chunks, TagSet tags = TagSet::All);
std::vector<Event> stream_events(std::span<const std::string> chunks, TagSet tags = TagSet::All);

/// Tool calls in document order. Throws ProtocolError on unbalanced tags or bodies
/// that are not {"name": ..., "arguments": ...} objects.
std::vector<ToolCall> parse_tool_calls(std::string_view text);
/// Bodies of <tool_response> elements (object or array).
std::vector<nlohmann::json> parse_tool_responses(std::string_view text);

nlohmann::json to_json(const ToolDefinition& def);
nlohmann::json to_json(const ToolCall& call);
ToolDefinition tool_definition_from_json(const nlohmann::json& j);

/// "<tools>[...]</tools>"; throws ProtocolError(DuplicateTool) on repeated names.
std::string emit_tools_block(std::span<const ToolDefinition> defs);
std::vector<ToolDefinition> parse_tools_block(std::string_view text);
std::string emit_tool_call(const ToolCall& call);
std::string emit_tool_response(const nlohmann::json& body);

struct CitationResult {
    std::string clean_text;
    std::vector<CitationSpan> spans;
    std::vector<std::uint32_t> cited_ids;  // first-appearance order, unique
};

/// Strips <co:N>...</co> tags. Throws ProtocolError on nesting or imbalance.
CitationResult extract_citations(std::string_view text);
std::string emit_citation(std::uint32_t doc_id, std::string_view text);

/// True iff `text` is well-formed UTF-8; `bad_offset` receives the first bad byte.
bool valid_utf8(std::string_view text, std::size_t* bad_offset = nullptr) noexcept;

}  // namespace forge::proto
