#include "forge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "forge/error.hpp"

namespace forge {

std::vector<std::size_t> synthetic_lengths(const SynthConfig& cfg) {
    if (cfg.mean_length <= 0.0 || cfg.sigma <= 0.0) throw ConfigError("mean_length and sigma must be positive");
    if (cfg.min_length == 0 || cfg.min_length > cfg.max_length) throw ConfigError("bad length bounds");
    std::mt19937_64 rng(cfg.seed);
    const double mu = std::log(cfg.mean_length) - cfg.sigma * cfg.sigma / 2.0;
    std::lognormal_distribution<double> dist(mu, cfg.sigma);
    std::vector<std::size_t> out(cfg.samples);
    for (auto& len : out) {
        const double x = std::round(dist(rng));
        len = static_cast<std::size_t>(std::clamp(x, static_cast<double>(cfg.min_length), static_cast<double>(cfg.max_length)));
    }
    return out;
}

namespace {

std::string filler(std::size_t bytes, std::mt19937_64& rng) {
    static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
    std::uniform_int_distribution<int> letter(0, 25);
    std::uniform_int_distribution<int> word(2, 9);
    std::string s;
    s.reserve(bytes);
    int left = word(rng);
    while (s.size() < bytes) {
        if (left == 0 && s.size() + 1 < bytes) {
            s.push_back(' ');
            left = word(rng);
        } else {
            s.push_back(kLetters[letter(rng)]);
            if (left > 0) --left;
        }
    }
    return s;
}

}  // namespace

Conversation synthetic_conversation(std::string id, std::size_t rendered_length, std::uint64_t seed,
                                    std::string category) {
    if (rendered_length < kExchangeOverhead + 2) {
        throw ConfigError("synthetic conversation needs at least " + std::to_string(kExchangeOverhead + 2) + " tokens");
    }
    std::mt19937_64 rng(seed);
    const std::size_t body = rendered_length - kExchangeOverhead;
    const std::size_t user = std::max<std::size_t>(1, body / 3);
    Conversation c;
    c.id = std::move(id);
    if (!category.empty()) c.category = std::move(category);
    c.source_model = "synthetic";
    c.turns.push_back({Role::User, filler(user, rng)});
    c.turns.push_back({Role::Assistant, filler(body - user, rng)});
    return c;
}

}  // namespace forge
