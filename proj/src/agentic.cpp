#include "forge/agentic.hpp"

#include <algorithm>

#include "forge/protocol.hpp"

namespace forge::proto {

using nlohmann::json;

std::string_view to_string(DiagnosticKind kind) noexcept {
    switch (kind) {
        case DiagnosticKind::UnknownTag: return "UnknownTag";
        case DiagnosticKind::IndexGap: return "IndexGap";
        case DiagnosticKind::MissingSection: return "MissingSection";
        case DiagnosticKind::UnbalancedTag: return "UnbalancedTag";
        case DiagnosticKind::MisplacedSection: return "MisplacedSection";
    }
    return "Unknown";
}

const TagNode* TagNode::find(std::string_view family_name) const {
    for (const auto& c : children) {
        if (c.family == family_name) return &c;
    }
    return nullptr;
}

AgenticSchema AgenticSchema::standard() {
    AgenticSchema s;
    auto add = [&](std::string family, bool indexed, std::optional<std::string> parent) {
        s.rules.push_back({std::move(family), indexed, std::move(parent)});
    };
    add("SCRATCHPAD", false, "");
    add("RESTATEMENT", false, "SCRATCHPAD");
    add("REASONING", false, "SCRATCHPAD");
    add("THOUGHT", true, "REASONING");
    add("PLAN", false, "SCRATCHPAD");
    add("STEP", true, "PLAN");
    add("PYDANTIC_SCHEMAS", false, "SCRATCHPAD");
    add("SCHEMA", true, "PYDANTIC_SCHEMAS");
    add("DIAGRAM", false, "SCRATCHPAD");
    add("REFLECTION", false, "SCRATCHPAD");
    add("SOLUTION", false, "");
    add("EXPLANATION", false, "");
    add("UNIT_TEST", false, "");
    add("INNER_MONOLOGUE", false, std::nullopt);
    add("EXECUTION", false, std::nullopt);
    add("THINKING", false, std::nullopt);
    s.required = {
        {"", {"SCRATCHPAD", "SOLUTION", "EXPLANATION", "UNIT_TEST"}},
        {"SCRATCHPAD", {"RESTATEMENT", "REASONING", "PLAN", "PYDANTIC_SCHEMAS", "DIAGRAM", "REFLECTION"}},
    };
    return s;
}

const AgenticSchema::Rule* AgenticSchema::rule(std::string_view family) const {
    auto it = std::find_if(rules.begin(), rules.end(), [&](const Rule& r) { return r.family == family; });
    return it == rules.end() ? nullptr : &*it;
}

const std::vector<std::string>* AgenticSchema::required_children(std::string_view family) const {
    for (const auto& [parent, kids] : required) {
        if (parent == family) return &kids;
    }
    return nullptr;
}

namespace {

// Splits THOUGHT_12 into ("THOUGHT", 12) when THOUGHT is an indexed family.
void classify_name(TagNode& node, const AgenticSchema& schema) {
    node.family = node.name;
    const auto us = node.name.rfind('_');
    if (us == std::string::npos || us + 1 == node.name.size()) return;
    const std::string_view digits = std::string_view(node.name).substr(us + 1);
    if (digits.size() > 9 || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return;
    }
    const std::string family = node.name.substr(0, us);
    const auto* r = schema.rule(family);
    if (r && r->indexed) {
        node.family = family;
        node.index = static_cast<unsigned>(std::stoul(std::string(digits)));
    }
}

class TreeBuilder {
public:
    TreeBuilder(const AgenticSchema& schema, const AgenticOptions& opts, std::size_t text_size)
        : schema_(schema), opts_(opts), text_size_(text_size) {
        stack_.push_back(&tree_.root);
    }

    void on(const Event& e) {
        switch (e.kind) {
            case Event::Kind::TagOpen: open(e); break;
            case Event::Kind::TagClose: close(e); break;
            case Event::Kind::Text: stack_.back()->text += e.text; break;
            case Event::Kind::Error:
                // Lexer errors in agentic mode all stem from input ending inside a tag or raw section.
                if (!opts_.partial) diag(DiagnosticKind::UnbalancedTag, e.offset, "", e.text);
                break;
            default: break;
        }
    }

    TagTree finish() {
        while (stack_.size() > 1) {
            TagNode* n = stack_.back();
            n->end_offset = text_size_;
            if (!opts_.partial) diag(DiagnosticKind::UnbalancedTag, n->offset, n->name, "<" + n->name + "> is never closed");
            stack_.pop_back();
        }
        tree_.root.closed = !opts_.partial;
        tree_.root.end_offset = text_size_;
        validate(tree_.root);
        std::stable_sort(tree_.diagnostics.begin(), tree_.diagnostics.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.offset < b.offset; });
        return std::move(tree_);
    }

private:
    void diag(DiagnosticKind kind, std::size_t offset, std::string tag, std::string message) {
        tree_.diagnostics.push_back({kind, offset, std::move(tag), std::move(message)});
    }

    void open(const Event& e) {
        TagNode node;
        node.name = e.name;
        node.offset = e.offset;
        classify_name(node, schema_);
        const TagNode& parent = *stack_.back();
        if (const auto* r = schema_.rule(node.family)) {
            if (r->parent && *r->parent != parent.family) {
                const std::string where = parent.name.empty() ? "the document root" : "<" + parent.name + ">";
                const std::string expected = r->parent->empty() ? "the document root" : "<" + *r->parent + ">";
                diag(DiagnosticKind::MisplacedSection, e.offset, node.name,
                     "<" + node.name + "> inside " + where + ", expected under " + expected);
            }
        } else {
            diag(DiagnosticKind::UnknownTag, e.offset, node.name, "<" + node.name + "> is not a registered tag");
        }
        stack_.back()->children.push_back(std::move(node));
        stack_.push_back(&stack_.back()->children.back());
    }

    void close(const Event& e) {
        auto it = std::find_if(stack_.rbegin(), stack_.rend() - 1, [&](const TagNode* n) { return n->name == e.name; });
        if (it == stack_.rend() - 1) {
            diag(DiagnosticKind::UnbalancedTag, e.offset, e.name, "</" + e.name + "> has no matching open tag");
            return;
        }
        const auto depth = static_cast<std::size_t>(stack_.rend() - it) - 1;
        while (stack_.size() - 1 > depth) {
            TagNode* n = stack_.back();
            n->end_offset = e.offset;
            diag(DiagnosticKind::UnbalancedTag, n->offset, n->name, "<" + n->name + "> closed implicitly by </" + e.name + ">");
            stack_.pop_back();
        }
        TagNode* n = stack_.back();
        n->closed = true;
        n->end_offset = e.offset + e.name.size() + 3;
        stack_.pop_back();
    }

    void validate(const TagNode& node) {
        // Indexed families must count 1, 2, 3, ... in document order.
        std::vector<std::pair<std::string, unsigned>> next;
        for (const auto& c : node.children) {
            if (!c.index) continue;
            auto slot = std::find_if(next.begin(), next.end(), [&](const auto& p) { return p.first == c.family; });
            if (slot == next.end()) slot = next.insert(next.end(), {c.family, 1u});
            const unsigned want = slot->second;
            if (*c.index > want) {
                std::string missing = std::to_string(want);
                if (*c.index - want > 1) missing += ".." + std::to_string(*c.index - 1);
                diag(DiagnosticKind::IndexGap, c.offset, c.name, c.family + " indices skip " + missing);
            } else if (*c.index < want) {
                diag(DiagnosticKind::IndexGap, c.offset, c.name,
                     c.family + " index " + std::to_string(*c.index) + " repeats or runs backwards");
            }
            slot->second = std::max(want, *c.index + 1);
        }
        if (node.closed) {
            if (const auto* req = schema_.required_children(node.family)) {
                for (const auto& family : *req) {
                    if (!node.find(family)) {
                        const std::string where = node.name.empty() ? "document" : "<" + node.name + ">";
                        diag(DiagnosticKind::MissingSection, node.end_offset, family, where + " lacks <" + family + ">");
                    }
                }
            }
        }
        for (const auto& c : node.children) validate(c);
    }

    const AgenticSchema& schema_;
    const AgenticOptions& opts_;
    std::size_t text_size_;
    TagTree tree_;
    std::vector<TagNode*> stack_;
};

json node_json(const TagNode& n) {
    json j = {{"name", n.name}, {"offset", n.offset}, {"end_offset", n.end_offset}, {"closed", n.closed}};
    if (n.index) j["index"] = *n.index;
    j["text"] = n.text;
    json kids = json::array();
    for (const auto& c : n.children) kids.push_back(node_json(c));
    j["children"] = std::move(kids);
    return j;
}

}  // namespace

json TagTree::to_json() const {
    json diags = json::array();
    for (const auto& d : diagnostics) {
        diags.push_back({{"kind", to_string(d.kind)}, {"offset", d.offset}, {"tag", d.tag}, {"message", d.message}});
    }
    json kids = json::array();
    for (const auto& c : root.children) kids.push_back(node_json(c));
    return {{"tree", std::move(kids)}, {"text", root.text}, {"diagnostics", std::move(diags)}};
}

TagTree parse_agentic(std::string_view text, const AgenticSchema& schema, const AgenticOptions& opts) {
    std::size_t bad = 0;
    if (!valid_utf8(text, &bad)) throw ProtocolError(ErrorKind::InvalidUtf8, bad, "input is not valid UTF-8");
    TreeBuilder builder(schema, opts, text.size());
    for (const auto& e : lex(text, TagSet::Agentic)) builder.on(e);
    return builder.finish();
}

}  // namespace forge::proto
