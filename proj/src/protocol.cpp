#include "forge/protocol.hpp"

#include <algorithm>
#include <array>

namespace forge::proto {

using nlohmann::json;

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::UnbalancedTag: return "UnbalancedTag";
        case ErrorKind::MalformedPayload: return "MalformedPayload";
        case ErrorKind::NestedCitation: return "NestedCitation";
        case ErrorKind::DuplicateTool: return "DuplicateTool";
        case ErrorKind::InvalidUtf8: return "InvalidUtf8";
    }
    return "Unknown";
}

ProtocolError::ProtocolError(ErrorKind kind, std::size_t offset, const std::string& detail)
    : Error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

std::string_view to_string(Event::Kind kind) noexcept {
    switch (kind) {
        case Event::Kind::TagOpen: return "TagOpen";
        case Event::Kind::TagClose: return "TagClose";
        case Event::Kind::Text: return "Text";
        case Event::Kind::ToolCallComplete: return "ToolCallComplete";
        case Event::Kind::CitationComplete: return "CitationComplete";
        case Event::Kind::Error: return "Error";
    }
    return "Unknown";
}

namespace {

constexpr std::size_t kMaxNameLength = 64;
constexpr std::size_t kMaxDocIdDigits = 9;
constexpr std::array<std::string_view, 3> kToolTags = {"tools", "tool_call", "tool_response"};
// Bodies of these are raw payload (JSON, code, diagrams) and are not scanned for tags.
constexpr std::array<std::string_view, 6> kOpaqueTags = {"tools", "tool_call", "tool_response",
                                                         "SOLUTION", "UNIT_TEST", "DIAGRAM"};
constexpr std::array<std::string_view, 3> kAgenticOpaqueTags = {"SOLUTION", "UNIT_TEST", "DIAGRAM"};

bool is_ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_ident(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t'; }

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
    return std::find(set.begin(), set.end(), name) != set.end();
}

Event make(Event::Kind kind, std::size_t offset) {
    Event e;
    e.kind = kind;
    e.offset = offset;
    return e;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::optional<ToolCall> tool_call_from_body(std::string_view body, std::string& why) {
    const auto trimmed = trim(body);
    json j = json::parse(trimmed.begin(), trimmed.end(), nullptr, false);
    if (j.is_discarded()) {
        why = "tool_call body is not valid JSON";
        return std::nullopt;
    }
    if (!j.is_object()) {
        why = "tool_call body must be an object";
        return std::nullopt;
    }
    auto name = j.find("name");
    auto args = j.find("arguments");
    if (name == j.end() || !name->is_string() || name->get_ref<const std::string&>().empty()) {
        why = "tool_call needs a non-empty string 'name'";
        return std::nullopt;
    }
    if (args == j.end()) {
        why = "tool_call needs 'arguments'";
        return std::nullopt;
    }
    return ToolCall{name->get<std::string>(), *args};
}

}  // namespace

json to_json(const Event& e) {
    json j = {{"kind", to_string(e.kind)}, {"offset", e.offset}};
    if (!e.name.empty()) j["name"] = e.name;
    if (e.kind == Event::Kind::Text || e.kind == Event::Kind::Error) j["text"] = e.text;
    if (e.doc_id) j["doc_id"] = *e.doc_id;
    if (e.call) j["call"] = to_json(*e.call);
    if (e.citation) {
        j["citation"] = {{"doc_id", e.citation->doc_id},
                         {"start", e.citation->start},
                         {"end", e.citation->end},
                         {"text", e.citation->text}};
    }
    if (e.error) j["error"] = to_string(*e.error);
    return j;
}

bool TagStreamParser::recognized(std::string_view name) const {
    switch (tags_) {
        case TagSet::Tools: return contains(kToolTags, name);
        case TagSet::Citations: return name == "co";
        case TagSet::All:
        case TagSet::Agentic: return true;
    }
    return false;
}

bool TagStreamParser::could_be_recognized(std::string_view prefix) const {
    switch (tags_) {
        case TagSet::Tools:
            return std::any_of(kToolTags.begin(), kToolTags.end(), [&](auto t) { return t.starts_with(prefix); });
        case TagSet::Citations: return std::string_view("co").starts_with(prefix);
        case TagSet::All:
        case TagSet::Agentic: return true;
    }
    return false;
}

// Decides what the '<' at s[0] starts. NeedMore is only returned before eof;
// at eof an incomplete but still plausible tag is reported as NeedMore with
// tok.length == 0 so the caller can flag it.
TagStreamParser::Lex TagStreamParser::classify(std::string_view s, bool eof, TagToken& tok) const {
    auto incomplete = [&](bool plausible) {
        tok.length = 0;
        if (!eof) return Lex::NeedMore;
        return plausible ? Lex::NeedMore : Lex::NotTag;
    };
    if (s.size() < 2) return incomplete(false);
    std::size_t k = 1;
    tok.closing = s[1] == '/';
    if (tok.closing) ++k;
    if (k == s.size()) return incomplete(false);
    if (!is_ident_start(s[k])) return Lex::NotTag;

    const std::size_t name_start = k;
    while (k < s.size() && is_ident(s[k]) && k - name_start <= kMaxNameLength) ++k;
    if (k - name_start > kMaxNameLength) return Lex::NotTag;
    const std::string_view name = s.substr(name_start, k - name_start);
    if (k == s.size()) {
        return could_be_recognized(name) ? incomplete(true) : Lex::NotTag;
    }

    const bool citations = tags_ != TagSet::Agentic;
    if (citations && !tok.closing && name == "co" && s[k] == ':' && recognized(name)) {
        std::size_t m = k + 1;
        while (m < s.size() && is_space(s[m])) ++m;
        const std::size_t digits = m;
        while (m < s.size() && is_digit(s[m]) && m - digits <= kMaxDocIdDigits) ++m;
        if (m - digits > kMaxDocIdDigits) return Lex::NotTag;
        if (m == s.size()) return incomplete(true);
        if (m == digits || s[m] != '>') return Lex::NotTag;
        tok.name = "co";
        tok.doc_id = static_cast<std::uint32_t>(std::stoul(std::string(s.substr(digits, m - digits))));
        tok.length = m + 1;
        return Lex::Tag;
    }
    if (s[k] != '>' || !recognized(name)) return Lex::NotTag;
    if (citations && !tok.closing && name == "co") return Lex::NotTag;  // an opening co needs a doc id
    tok.name = std::string(name);
    tok.length = k + 1;
    return Lex::Tag;
}

void TagStreamParser::append_text(std::string_view s) {
    if (s.empty()) return;
    text_ += s;
    clean_offset_ += s.size();
    if (citation_) citation_text_ += s;
    if (opaque_) opaque_body_ += s;
}

void TagStreamParser::flush_text(std::vector<Event>& out) {
    if (text_.empty()) return;
    auto e = make(Event::Kind::Text, text_offset_);
    e.text = std::move(text_);
    out.push_back(std::move(e));
    text_.clear();
}

void TagStreamParser::fail(ErrorKind kind, std::size_t offset, std::string detail, std::vector<Event>& out) {
    flush_text(out);
    auto e = make(Event::Kind::Error, offset);
    e.error = kind;
    e.text = std::move(detail);
    out.push_back(std::move(e));
    failed_ = true;
    pending_.clear();
}

void TagStreamParser::on_tag(const TagToken& tok, std::size_t offset, std::vector<Event>& out) {
    if (tags_ == TagSet::Agentic) {
        flush_text(out);
        auto e = make(tok.closing ? Event::Kind::TagClose : Event::Kind::TagOpen, offset);
        e.name = tok.name;
        out.push_back(std::move(e));
        if (!tok.closing && contains(kAgenticOpaqueTags, tok.name)) {
            opaque_ = Open{tok.name, offset};
            opaque_body_.clear();
        }
        return;
    }
    if (tok.closing) {
        if (tok.name == "co") {
            if (!citation_) return fail(ErrorKind::UnbalancedTag, offset, "</co> without an open citation", out);
            flush_text(out);
            auto close = make(Event::Kind::TagClose, offset);
            close.name = tok.name;
            out.push_back(std::move(close));
            auto done = make(Event::Kind::CitationComplete, citation_->offset);
            done.doc_id = citation_->doc_id;
            done.citation = CitationSpan{citation_->doc_id, citation_->clean_start, clean_offset_, std::move(citation_text_)};
            out.push_back(std::move(done));
            citation_.reset();
            citation_text_.clear();
            return;
        }
        if (contains(kToolTags, tok.name)) {
            return fail(ErrorKind::UnbalancedTag, offset, "</" + tok.name + "> without a matching open tag", out);
        }
        flush_text(out);
        auto close = make(Event::Kind::TagClose, offset);
        close.name = tok.name;
        out.push_back(std::move(close));
        return;
    }

    if (tok.name == "co") {
        if (citation_) return fail(ErrorKind::NestedCitation, offset, "citation opened inside another citation", out);
        flush_text(out);
        auto open = make(Event::Kind::TagOpen, offset);
        open.name = tok.name;
        open.doc_id = tok.doc_id;
        out.push_back(std::move(open));
        citation_ = OpenCitation{*tok.doc_id, offset, clean_offset_};
        return;
    }
    flush_text(out);
    auto open = make(Event::Kind::TagOpen, offset);
    open.name = tok.name;
    out.push_back(std::move(open));
    if (contains(kOpaqueTags, tok.name)) {
        opaque_ = Open{tok.name, offset};
        opaque_body_.clear();
    }
}

void TagStreamParser::drain(bool eof, std::vector<Event>& out) {
    std::size_t pos = 0;
    auto at = [&](std::size_t i) { return pending_offset_ + i; };
    auto text = [&](std::size_t from, std::size_t to) {
        if (to <= from) return;
        if (text_.empty()) text_offset_ = at(from);
        append_text(std::string_view(pending_).substr(from, to - from));
    };

    while (!failed_ && pos < pending_.size()) {
        if (opaque_) {
            const std::string close = "</" + opaque_->name + ">";
            const auto found = pending_.find(close, pos);
            if (found == std::string::npos) {
                std::size_t keep = 0;
                if (!eof) {
                    // Longest tail that could still grow into the close tag.
                    for (std::size_t n = std::min(close.size() - 1, pending_.size() - pos); n > 0; --n) {
                        if (std::string_view(pending_).substr(pending_.size() - n) == std::string_view(close).substr(0, n)) {
                            keep = n;
                            break;
                        }
                    }
                }
                text(pos, pending_.size() - keep);
                pos = pending_.size() - keep;
                break;
            }
            text(pos, found);
            flush_text(out);
            auto close_event = make(Event::Kind::TagClose, at(found));
            close_event.name = opaque_->name;
            out.push_back(std::move(close_event));
            const Open region = *opaque_;
            opaque_.reset();
            pos = found + close.size();
            if (region.name == "tool_call" && tags_ != TagSet::Agentic) {
                std::string why;
                if (auto call = tool_call_from_body(opaque_body_, why)) {
                    auto done = make(Event::Kind::ToolCallComplete, region.offset);
                    done.call = std::move(call);
                    out.push_back(std::move(done));
                } else {
                    fail(ErrorKind::MalformedPayload, region.offset, why, out);
                    return;
                }
            }
            opaque_body_.clear();
            continue;
        }

        const auto lt = pending_.find('<', pos);
        if (lt == std::string::npos) {
            text(pos, pending_.size());
            pos = pending_.size();
            break;
        }
        text(pos, lt);
        pos = lt;
        TagToken tok;
        switch (classify(std::string_view(pending_).substr(lt), eof, tok)) {
            case Lex::NotTag:
                text(lt, lt + 1);
                pos = lt + 1;
                break;
            case Lex::NeedMore:
                if (eof) {
                    fail(ErrorKind::UnbalancedTag, at(lt), "input ends inside a tag", out);
                    return;
                }
                pending_.erase(0, pos);
                pending_offset_ += pos;
                return;
            case Lex::Tag: {
                const std::size_t offset = at(lt);
                pos = lt + tok.length;
                on_tag(tok, offset, out);
                break;
            }
        }
    }
    if (failed_) return;
    pending_.erase(0, pos);
    pending_offset_ += pos;
}

void TagStreamParser::feed(std::string_view chunk, std::vector<Event>& out) {
    if (failed_ || chunk.empty()) return;
    pending_ += chunk;
    drain(false, out);
}

void TagStreamParser::finish(std::vector<Event>& out) {
    if (failed_) return;
    drain(true, out);
    if (failed_) return;
    if (opaque_) return fail(ErrorKind::UnbalancedTag, opaque_->offset, "<" + opaque_->name + "> is never closed", out);
    if (citation_) return fail(ErrorKind::UnbalancedTag, citation_->offset, "<co> is never closed", out);
    flush_text(out);
}

std::vector<Event> lex(std::string_view text, TagSet tags) {
    std::vector<Event> out;
    TagStreamParser p(tags);
    p.feed(text, out);
    p.finish(out);
    return out;
}

std::vector<Event> stream_events(std::span<const std::string_view> chunks, TagSet tags) {
    std::vector<Event> out;
    TagStreamParser p(tags);
    for (auto c : chunks) p.feed(c, out);
    p.finish(out);
    return out;
}

std::vector<Event> stream_events(std::span<const std::string> chunks, TagSet tags) {
    std::vector<std::string_view> views(chunks.begin(), chunks.end());
    return stream_events(std::span<const std::string_view>(views), tags);
}

namespace {

[[noreturn]] void rethrow(const Event& e) { throw ProtocolError(*e.error, e.offset, e.text); }

// "</" only occurs inside JSON strings; "<\/" is the same string and cannot close the region.
std::string dump_embedded(const json& j) {
    std::string s = j.dump();
    for (std::size_t pos = 0; (pos = s.find("</", pos)) != std::string::npos; pos += 3) s.replace(pos, 2, "<\\/");
    return s;
}

}  // namespace

std::vector<ToolCall> parse_tool_calls(std::string_view text) {
    std::vector<ToolCall> calls;
    for (auto& e : lex(text, TagSet::Tools)) {
        if (e.kind == Event::Kind::Error) rethrow(e);
        if (e.kind == Event::Kind::ToolCallComplete) calls.push_back(std::move(*e.call));
    }
    return calls;
}

namespace {

// Bodies of every `name` element, with the offset of each opening tag.
std::vector<std::pair<std::string, std::size_t>> element_bodies(std::string_view text, std::string_view name) {
    std::vector<std::pair<std::string, std::size_t>> bodies;
    std::optional<std::size_t> open;
    std::string body;
    for (auto& e : lex(text, TagSet::Tools)) {
        switch (e.kind) {
            case Event::Kind::Error: rethrow(e);
            case Event::Kind::TagOpen:
                if (e.name == name) {
                    open = e.offset;
                    body.clear();
                }
                break;
            case Event::Kind::Text:
                if (open) body += e.text;
                break;
            case Event::Kind::TagClose:
                if (e.name == name && open) {
                    bodies.emplace_back(std::move(body), *open);
                    open.reset();
                    body.clear();
                }
                break;
            default: break;
        }
    }
    return bodies;
}

}  // namespace

std::vector<json> parse_tool_responses(std::string_view text) {
    std::vector<json> out;
    for (auto& [body, offset] : element_bodies(text, "tool_response")) {
        const auto t = trim(body);
        json j = json::parse(t.begin(), t.end(), nullptr, false);
        if (j.is_discarded() || !(j.is_object() || j.is_array())) {
            throw ProtocolError(ErrorKind::MalformedPayload, offset, "tool_response body must be a JSON object or array");
        }
        out.push_back(std::move(j));
    }
    return out;
}

json to_json(const ToolDefinition& def) {
    json fn = {{"name", def.name}};
    if (def.description) fn["description"] = *def.description;
    fn["parameters"] = def.schema;
    return {{"type", "function"}, {"function", std::move(fn)}};
}

json to_json(const ToolCall& call) { return {{"name", call.name}, {"arguments", call.arguments}}; }

ToolDefinition tool_definition_from_json(const json& j) {
    const json& fn = (j.is_object() && j.contains("function")) ? j.at("function") : j;
    if (!fn.is_object()) throw ProtocolError(ErrorKind::MalformedPayload, 0, "tool definition must be an object");
    ToolDefinition def;
    auto name = fn.find("name");
    if (name == fn.end() || !name->is_string() || name->get_ref<const std::string&>().empty()) {
        throw ProtocolError(ErrorKind::MalformedPayload, 0, "tool definition needs a non-empty name");
    }
    def.name = name->get<std::string>();
    if (auto d = fn.find("description"); d != fn.end() && d->is_string()) def.description = d->get<std::string>();
    if (auto p = fn.find("parameters"); p != fn.end()) {
        if (!p->is_object()) throw ProtocolError(ErrorKind::MalformedPayload, 0, "tool parameters must be an object");
        def.schema = *p;
    }
    return def;
}

std::string emit_tools_block(std::span<const ToolDefinition> defs) {
    json arr = json::array();
    for (std::size_t i = 0; i < defs.size(); ++i) {
        if (defs[i].name.empty()) throw ProtocolError(ErrorKind::MalformedPayload, 0, "tool name must be non-empty");
        if (!defs[i].schema.is_object()) {
            throw ProtocolError(ErrorKind::MalformedPayload, 0, "tool '" + defs[i].name + "' schema must be an object");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (defs[k].name == defs[i].name) {
                throw ProtocolError(ErrorKind::DuplicateTool, 0, "tool '" + defs[i].name + "' defined twice");
            }
        }
        arr.push_back(to_json(defs[i]));
    }
    return "<tools>" + dump_embedded(arr) + "</tools>";
}

std::vector<ToolDefinition> parse_tools_block(std::string_view text) {
    std::vector<ToolDefinition> defs;
    for (auto& [body, offset] : element_bodies(text, "tools")) {
        const auto t = trim(body);
        if (t.empty()) continue;
        json j = json::parse(t.begin(), t.end(), nullptr, false);
        if (j.is_discarded()) throw ProtocolError(ErrorKind::MalformedPayload, offset, "tools body is not valid JSON");
        if (!j.is_array()) j = json::array({j});
        for (const auto& item : j) {
            auto def = tool_definition_from_json(item);
            if (std::any_of(defs.begin(), defs.end(), [&](const auto& d) { return d.name == def.name; })) {
                throw ProtocolError(ErrorKind::DuplicateTool, offset, "tool '" + def.name + "' defined twice");
            }
            defs.push_back(std::move(def));
        }
    }
    return defs;
}

std::string emit_tool_call(const ToolCall& call) { return "<tool_call>\n" + dump_embedded(to_json(call)) + "\n</tool_call>"; }

std::string emit_tool_response(const json& body) { return "<tool_response>\n" + dump_embedded(body) + "\n</tool_response>"; }

CitationResult extract_citations(std::string_view text) {
    CitationResult r;
    for (auto& e : lex(text, TagSet::Citations)) {
        switch (e.kind) {
            case Event::Kind::Error: rethrow(e);
            case Event::Kind::Text: r.clean_text += e.text; break;
            case Event::Kind::CitationComplete:
                if (std::find(r.cited_ids.begin(), r.cited_ids.end(), e.citation->doc_id) == r.cited_ids.end()) {
                    r.cited_ids.push_back(e.citation->doc_id);
                }
                r.spans.push_back(std::move(*e.citation));
                break;
            default: break;
        }
    }
    return r;
}

std::string emit_citation(std::uint32_t doc_id, std::string_view text) {
    return "<co:" + std::to_string(doc_id) + ">" + std::string(text) + "</co>";
}

bool valid_utf8(std::string_view text, std::size_t* bad_offset) noexcept {
    const auto* s = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    std::size_t i = 0;
    auto bad = [&](std::size_t at) {
        if (bad_offset) *bad_offset = at;
        return false;
    };
    while (i < n) {
        const unsigned char c = s[i];
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return bad(i);
        }
        if (i + len > n) return bad(i);
        for (std::size_t k = 1; k < len; ++k) {
            if ((s[i + k] & 0xC0) != 0x80) return bad(i);
            cp = (cp << 6) | (s[i + k] & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return bad(i);
        i += len;
    }
    return true;
}

}  // namespace forge::proto
