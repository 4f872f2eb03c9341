#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forge {

// Base for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    enum class Kind { NoSupervisedTokens, UnknownRole, UnknownSpecial };

    RenderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class OversizedSample : public Error {
public:
    OversizedSample(std::size_t index, std::size_t length, std::size_t capacity)
        : Error("sample " + std::to_string(index) + " has length " + std::to_string(length) +
                " exceeding capacity " + std::to_string(capacity)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace forge
