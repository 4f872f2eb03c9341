#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace forge {

enum class Role { System, User, Assistant, Tool };

std::string_view to_string(Role role) noexcept;
/// Returns nullopt for anything outside the four known roles.
std::optional<Role> parse_role(std::string_view text) noexcept;

struct Turn {
    Role role;
    std::string content;

    bool operator==(const Turn&) const = default;
};

struct Conversation {
    std::string id;
    std::optional<std::string> source_model;
    std::optional<std::string> category;
    std::vector<Turn> turns;
    // Unrecognized top-level fields, carried through untouched.
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const Conversation&) const = default;
};

nlohmann::json to_json(const Conversation& conv);
std::string to_jsonl_line(const Conversation& conv);

struct RecordError {
    enum class Kind { InvalidJson, MissingField, WrongType, UnknownRole, EmptyLine };

    Kind kind;
    std::size_t line;  // 1-based
    std::string message;
};

std::string_view to_string(RecordError::Kind kind) noexcept;

/// Parses one record. `line_no` is only used to label the error.
std::variant<Conversation, RecordError> parse_record(std::string_view line, std::size_t line_no);

/// Pull-based reader over line-delimited conversation records. Malformed lines
/// are reported as RecordError items and reading continues.
class ConversationReader {
public:
    using Item = std::variant<Conversation, RecordError>;

    explicit ConversationReader(std::istream& in) : in_(in) {}

    std::optional<Item> next();

    std::size_t lines_read() const noexcept { return line_no_; }
    std::size_t errors() const noexcept { return errors_; }

private:
    std::istream& in_;
    std::string line_;
    std::size_t line_no_ = 0;
    std::size_t errors_ = 0;
};

struct IngestResult {
    std::vector<Conversation> conversations;
    std::vector<RecordError> errors;
};

/// Convenience wrapper that drains a reader into memory.
IngestResult ingest(std::istream& in);

}  // namespace forge
