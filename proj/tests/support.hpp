#pragma once

// Shared fixtures, generators and independent oracles for the test suites.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "forge/corpus.hpp"

namespace forge::test {

inline std::string fixture_path(const std::string& name) { return std::string(FORGE_DATA_DIR) + "/fixtures/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fixture(const std::string& name) { return read_file(fixture_path(name)); }

inline const std::vector<std::size_t> kReferenceLengths = {11, 6, 7, 4, 8, 4, 3, 4, 3, 3, 5, 3};

// Encodes one code point; written from the UTF-8 bit layout, independent of any library.
inline std::string utf8_encode(std::uint32_t cp) {
    std::string s;
    if (cp < 0x80) {
        s.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        s.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return s;
}

// Random valid UTF-8 mixing ASCII, 2-, 3- and 4-byte code points.
inline std::string random_unicode(std::mt19937_64& rng, std::size_t max_code_points) {
    std::uniform_int_distribution<std::size_t> len(0, max_code_points);
    std::uniform_int_distribution<int> width(0, 9);
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t cp;
        switch (width(rng)) {
            case 0: cp = std::uniform_int_distribution<std::uint32_t>(0x80, 0x7FF)(rng); break;
            case 1: cp = std::uniform_int_distribution<std::uint32_t>(0x800, 0xD7FF)(rng); break;
            case 2: cp = std::uniform_int_distribution<std::uint32_t>(0x10000, 0x10FFFF)(rng); break;
            default: cp = std::uniform_int_distribution<std::uint32_t>(0x20, 0x7E)(rng); break;
        }
        s += utf8_encode(cp);
    }
    return s;
}

// Non-blank random content.
inline std::string random_content(std::mt19937_64& rng, std::size_t max_code_points = 40) {
    std::string s = random_unicode(rng, max_code_points);
    return "x" + s;
}

// A structurally valid conversation: optional system, then user/assistant
// exchanges with optional tool round trips, ending on assistant.
inline Conversation random_conversation(std::mt19937_64& rng, const std::string& id) {
    Conversation c;
    c.id = id;
    std::bernoulli_distribution coin(0.5);
    if (coin(rng)) c.turns.push_back({Role::System, random_content(rng)});
    const int exchanges = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int e = 0; e < exchanges; ++e) {
        c.turns.push_back({Role::User, random_content(rng)});
        c.turns.push_back({Role::Assistant, random_content(rng)});
        const int tools = std::uniform_int_distribution<int>(0, 2)(rng);
        for (int t = 0; t < tools; ++t) {
            c.turns.push_back({Role::Tool, random_content(rng)});
            c.turns.push_back({Role::Assistant, random_content(rng)});
        }
    }
    return c;
}

// Minimum number of bins by exhaustive search (small n only).
inline std::size_t optimal_bins(std::vector<std::size_t> items, std::size_t capacity) {
    std::sort(items.rbegin(), items.rend());
    std::size_t best = items.size();
    std::vector<std::size_t> bins;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (bins.size() >= best) return;
        if (i == items.size()) {
            best = bins.size();
            return;
        }
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (bins[b] + items[i] <= capacity) {
                bins[b] += items[i];
                go(i + 1);
                bins[b] -= items[i];
            }
        }
        bins.push_back(items[i]);
        go(i + 1);
        bins.pop_back();
    };
    go(0);
    return best;
}

// Textbook first fit with a linear bin scan: returns the bin of each item.
inline std::vector<std::size_t> naive_first_fit(const std::vector<std::size_t>& items, const std::vector<std::size_t>& order,
                                                std::size_t capacity) {
    std::vector<std::size_t> fill, bin_of(items.size());
    for (std::size_t idx : order) {
        std::size_t b = 0;
        while (b < fill.size() && fill[b] + items[idx] > capacity) ++b;
        if (b == fill.size()) fill.push_back(0);
        fill[b] += items[idx];
        bin_of[idx] = b;
    }
    return bin_of;
}

}  // namespace forge::test
