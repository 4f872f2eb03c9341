#include "forge/corpus.hpp"

namespace forge {

using nlohmann::json;

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "unknown";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
    if (text == "system") return Role::System;
    if (text == "user") return Role::User;
    if (text == "assistant") return Role::Assistant;
    if (text == "tool") return Role::Tool;
    return std::nullopt;
}

std::string_view to_string(RecordError::Kind kind) noexcept {
    switch (kind) {
        case RecordError::Kind::InvalidJson: return "InvalidJson";
        case RecordError::Kind::MissingField: return "MissingField";
        case RecordError::Kind::WrongType: return "WrongType";
        case RecordError::Kind::UnknownRole: return "UnknownRole";
        case RecordError::Kind::EmptyLine: return "EmptyLine";
    }
    return "Unknown";
}

json to_json(const Conversation& conv) {
    json j = conv.extra.is_object() ? conv.extra : json::object();
    j["id"] = conv.id;
    if (conv.source_model) j["source_model"] = *conv.source_model;
    if (conv.category) j["category"] = *conv.category;
    json messages = json::array();
    for (const auto& t : conv.turns) {
        messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    }
    j["messages"] = std::move(messages);
    return j;
}

std::string to_jsonl_line(const Conversation& conv) {
    return to_json(conv).dump(-1, ' ', false, json::error_handler_t::replace);
}

namespace {

RecordError make_error(RecordError::Kind kind, std::size_t line, std::string msg) {
    return RecordError{kind, line, std::move(msg)};
}

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::variant<Conversation, RecordError> parse_record(std::string_view line, std::size_t line_no) {
    using K = RecordError::Kind;
    if (is_blank(line)) {
        return make_error(K::EmptyLine, line_no, "blank line");
    }
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded()) {
        return make_error(K::InvalidJson, line_no, "line is not valid JSON");
    }
    if (!j.is_object()) {
        return make_error(K::WrongType, line_no, "record must be an object");
    }

    Conversation conv;
    auto id = j.find("id");
    if (id == j.end()) return make_error(K::MissingField, line_no, "missing 'id'");
    if (!id->is_string()) return make_error(K::WrongType, line_no, "'id' must be a string");
    conv.id = id->get<std::string>();

    for (const char* key : {"source_model", "category"}) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) continue;
        if (!it->is_string()) return make_error(K::WrongType, line_no, std::string("'") + key + "' must be a string");
        (std::string_view(key) == "category" ? conv.category : conv.source_model) = it->get<std::string>();
    }

    auto messages = j.find("messages");
    if (messages == j.end()) return make_error(K::MissingField, line_no, "missing 'messages'");
    if (!messages->is_array()) return make_error(K::WrongType, line_no, "'messages' must be an array");
    conv.turns.reserve(messages->size());
    for (std::size_t i = 0; i < messages->size(); ++i) {
        const auto& m = (*messages)[i];
        const std::string where = "messages[" + std::to_string(i) + "]";
        if (!m.is_object()) return make_error(K::WrongType, line_no, where + " must be an object");
        auto role = m.find("role");
        auto content = m.find("content");
        if (role == m.end()) return make_error(K::MissingField, line_no, where + " missing 'role'");
        if (content == m.end()) return make_error(K::MissingField, line_no, where + " missing 'content'");
        if (!role->is_string() || !content->is_string()) {
            return make_error(K::WrongType, line_no, where + " role/content must be strings");
        }
        auto parsed = parse_role(role->get_ref<const std::string&>());
        if (!parsed) {
            return make_error(K::UnknownRole, line_no, where + " has unknown role '" + role->get<std::string>() + "'");
        }
        conv.turns.push_back(Turn{*parsed, content->get<std::string>()});
    }

    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        if (key != "id" && key != "source_model" && key != "category" && key != "messages") {
            conv.extra[key] = it.value();
        }
    }
    return conv;
}

std::optional<ConversationReader::Item> ConversationReader::next() {
    if (!std::getline(in_, line_)) {
        return std::nullopt;
    }
    ++line_no_;
    auto item = parse_record(line_, line_no_);
    if (std::holds_alternative<RecordError>(item)) {
        ++errors_;
    }
    return item;
}

IngestResult ingest(std::istream& in) {
    IngestResult result;
    ConversationReader reader(in);
    while (auto item = reader.next()) {
        if (auto* conv = std::get_if<Conversation>(&*item)) {
            result.conversations.push_back(std::move(*conv));
        } else {
            result.errors.push_back(std::get<RecordError>(std::move(*item)));
        }
    }
    return result;
}

}  // namespace forge
