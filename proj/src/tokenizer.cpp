#include "forge/tokenizer.hpp"

#include <algorithm>

#include "forge/error.hpp"

namespace forge {

std::vector<std::string> ReferenceTokenizer::default_specials() {
    return {"<|im_start|>", "<|im_end|>", "<|pad|>"};
}

ReferenceTokenizer::ReferenceTokenizer() : ReferenceTokenizer(default_specials()) {}

ReferenceTokenizer::ReferenceTokenizer(std::vector<std::string> specials) : specials_(std::move(specials)) {
    for (std::size_t i = 0; i < specials_.size(); ++i) {
        if (specials_[i].empty()) {
            throw ConfigError("special token names must be non-empty");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (specials_[i] == specials_[j]) {
                throw ConfigError("duplicate special token '" + specials_[i] + "'");
            }
        }
    }
}

std::vector<TokenId> ReferenceTokenizer::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) {
        ids.push_back(c);
    }
    return ids;
}

std::string ReferenceTokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (id < kFirstSpecial) {
            out.push_back(static_cast<char>(id));
        } else if (id - kFirstSpecial < specials_.size()) {
            out += specials_[id - kFirstSpecial];
        } else {
            throw FormatError("token id " + std::to_string(id) + " outside vocabulary");
        }
    }
    return out;
}

TokenId ReferenceTokenizer::special(std::string_view name) const {
    auto it = std::find(specials_.begin(), specials_.end(), name);
    if (it == specials_.end()) {
        throw RenderError(RenderError::Kind::UnknownSpecial, "special token '" + std::string(name) + "' not registered");
    }
    return kFirstSpecial + static_cast<TokenId>(it - specials_.begin());
}

bool ReferenceTokenizer::has_special(std::string_view name) const {
    return std::find(specials_.begin(), specials_.end(), name) != specials_.end();
}

std::string ReferenceTokenizer::identity() const {
    std::string id = "reference-byte-v1";
    for (const auto& s : specials_) {
        id += ':';
        id += s;
    }
    return id;
}

}  // namespace forge
