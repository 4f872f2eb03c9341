#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

using TokenId = std::uint32_t;
using Label = std::int32_t;

// Label assigned to positions excluded from the training loss.
inline constexpr Label kIgnoreIndex = -100;

/// Tokenizer interface. Implementations must guarantee decode(encode(t)) == t
/// for valid UTF-8 and keep special-token ids disjoint from encoded text ids.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<TokenId> encode(std::string_view text) const = 0;
    virtual std::string decode(std::span<const TokenId> ids) const = 0;
    /// Id of a registered special token; throws RenderError(UnknownSpecial) if absent.
    virtual TokenId special(std::string_view name) const = 0;
    virtual bool has_special(std::string_view name) const = 0;
    virtual std::size_t vocab_size() const = 0;
    /// Stable identity recorded in manifests.
    virtual std::string identity() const = 0;

    /// Token count of `text` without materializing ids when the implementation can.
    virtual std::size_t count(std::string_view text) const { return encode(text).size(); }
};

/// Byte-level tokenizer: UTF-8 byte b is token b, specials follow at 256, 257, ...
/// in declaration order.
class ReferenceTokenizer final : public Tokenizer {
public:
    static constexpr TokenId kFirstSpecial = 256;

    /// Registry used by the default chat template: start_of_turn, end_of_turn, pad.
    static std::vector<std::string> default_specials();

    ReferenceTokenizer();
    explicit ReferenceTokenizer(std::vector<std::string> specials);

    std::vector<TokenId> encode(std::string_view text) const override;
    std::string decode(std::span<const TokenId> ids) const override;
    TokenId special(std::string_view name) const override;
    bool has_special(std::string_view name) const override;
    std::size_t vocab_size() const override { return kFirstSpecial + specials_.size(); }
    std::string identity() const override;
    std::size_t count(std::string_view text) const override { return text.size(); }

    const std::vector<std::string>& specials() const noexcept { return specials_; }

private:
    std::vector<std::string> specials_;
};

}  // namespace forge
