#include <doctest.h>

#include "forge/error.hpp"
#include "forge/packer.hpp"
#include "support.hpp"

using namespace forge;

namespace {

constexpr TokenId kPad = 258;

RenderedSample sample_of(std::size_t len, std::mt19937_64& rng) {
    RenderedSample s;
    std::uniform_int_distribution<TokenId> byte(0, 255);
    std::bernoulli_distribution supervised(0.4);
    for (std::size_t i = 0; i < len; ++i) {
        s.tokens.push_back(byte(rng));
        const bool sup = supervised(rng);
        s.labels.push_back(sup ? static_cast<Label>(s.tokens.back()) : kIgnoreIndex);
        s.supervised_count += sup;
    }
    return s;
}

std::vector<RenderedSample> reference_samples() {
    std::vector<RenderedSample> out;
    char letter = 'A';
    for (std::size_t len : test::kReferenceLengths) {
        RenderedSample s;
        s.tokens.assign(len, static_cast<TokenId>(letter));
        s.labels.assign(len, letter);
        s.labels[0] = kIgnoreIndex;
        s.supervised_count = len - 1;
        out.push_back(s);
        ++letter;
    }
    return out;
}

std::vector<std::uint32_t> prefix_sums(const std::vector<std::size_t>& lengths, std::size_t capacity) {
    std::vector<std::uint32_t> cu{0};
    for (auto l : lengths) cu.push_back(cu.back() + static_cast<std::uint32_t>(l));
    if (cu.back() < capacity) cu.push_back(static_cast<std::uint32_t>(capacity));
    return cu;
}

const PackingStrategy kAll[] = {PackingStrategy::Contiguous, PackingStrategy::FirstFit,
                                PackingStrategy::FirstFitDecreasing};

}  // namespace

TEST_CASE("reference layout: contiguous packing into 64") {
    const auto& lengths = test::kReferenceLengths;
    auto plan = plan_packing(lengths, 64, PackingStrategy::Contiguous);
    CHECK(plan.buffer_count == 1);
    std::uint32_t off = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        CHECK(plan.placements[i] == Placement{0, off});
        off += static_cast<std::uint32_t>(lengths[i]);
    }
    auto eff = efficiency(plan);
    CHECK(eff.real_tokens == 61);
    CHECK(eff.pad_tokens == 3);

    auto samples = reference_samples();
    auto batch = pack(samples, 64, PackingStrategy::Contiguous, {kPad});
    REQUIRE(batch.buffers.size() == 1);
    CHECK(batch.buffers[0].cu_seqlens == std::vector<std::uint32_t>{0, 11, 17, 24, 28, 36, 40, 43, 47, 50, 53, 58, 61, 64});
    CHECK(batch.buffers[0].cu_seqlens == prefix_sums(lengths, 64));
    CHECK(batch.buffers[0].pad_count == 3);
    CHECK(efficiency(batch).efficiency_rounded() == 0.9531);
    for (std::size_t i = 61; i < 64; ++i) {
        CHECK(batch.buffers[0].tokens[i] == kPad);
        CHECK(batch.buffers[0].labels[i] == kIgnoreIndex);
    }
    auto segs = unpack(batch);
    REQUIRE(segs.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(segs[i].tokens == samples[i].tokens);
        CHECK(segs[i].labels == samples[i].labels);
    }
}

TEST_CASE("folded pads extend the last segment") {
    auto batch = pack(reference_samples(), 64, PackingStrategy::Contiguous, {kPad, false});
    auto& cu = batch.buffers[0].cu_seqlens;
    CHECK(cu.size() == 13);
    CHECK(cu.back() == 64);
    CHECK(cu[11] == 58);
    auto segs = unpack(batch);
    REQUIRE(segs.size() == 12);
    CHECK(segs.back().tokens.size() == 3);
}

TEST_CASE("small planning examples") {
    const std::vector<std::size_t> three{6, 5, 5};
    auto plan = plan_packing(three, 8, PackingStrategy::FirstFitDecreasing);
    CHECK(plan.buffer_count == 3);
    CHECK(test::optimal_bins(three, 8) == 3);

    const std::vector<std::size_t> full{8};
    auto one = plan_packing(full, 8, PackingStrategy::FirstFitDecreasing);
    CHECK(one.buffer_count == 1);
    CHECK(efficiency(one).efficiency() == 1.0);

    std::mt19937_64 rng(1);
    std::vector<RenderedSample> exact{sample_of(3, rng), sample_of(5, rng)};
    auto batch = pack(exact, 8, PackingStrategy::FirstFit, {kPad});
    REQUIRE(batch.buffers.size() == 1);
    CHECK(batch.buffers[0].cu_seqlens == std::vector<std::uint32_t>{0, 3, 8});
    CHECK(batch.buffers[0].pad_count == 0);

    auto empty = pack({}, 8, PackingStrategy::FirstFit, {kPad});
    CHECK(empty.buffers.empty());
    CHECK(unpack(empty).empty());
    CHECK(efficiency(empty).efficiency() == 0.0);
}

TEST_CASE("planning errors") {
    const std::vector<std::size_t> too_long{3, 9, 2};
    try {
        plan_packing(too_long, 8, PackingStrategy::FirstFit);
        FAIL("expected OversizedSample");
    } catch (const OversizedSample& e) {
        CHECK(e.index() == 1);
    }
    CHECK_THROWS_AS(plan_packing(too_long, 0, PackingStrategy::FirstFit), ConfigError);
    const std::vector<std::size_t> zero{0};
    CHECK_THROWS_AS(plan_packing(zero, 8, PackingStrategy::FirstFit), ConfigError);
}

TEST_CASE("truncation records the sample") {
    std::mt19937_64 rng(2);
    std::vector<RenderedSample> s{sample_of(4, rng), sample_of(12, rng)};
    CHECK_THROWS_AS(pack(s, 8, PackingStrategy::FirstFit, {kPad}), OversizedSample);
    auto batch = pack(s, 8, PackingStrategy::FirstFit, {kPad, true, true});
    CHECK(batch.truncated == std::vector<std::size_t>{1});
    auto segs = unpack(batch);
    REQUIRE(segs.size() == 2);
    CHECK(segs[1].tokens == std::vector<TokenId>(s[1].tokens.begin(), s[1].tokens.begin() + 8));
}

TEST_CASE("buffer holding only pads unpacks to nothing") {
    PackedBatch b;
    b.capacity = 4;
    b.buffers.push_back({std::vector<TokenId>(4, kPad), std::vector<Label>(4, kIgnoreIndex), {0, 4}, 4});
    CHECK(unpack(b).empty());
}

TEST_CASE("corrupt boundaries are rejected") {
    std::mt19937_64 rng(3);
    std::vector<RenderedSample> s{sample_of(3, rng), sample_of(2, rng)};
    auto good = pack(s, 8, PackingStrategy::Contiguous, {kPad});
    auto bad = good;
    bad.buffers[0].cu_seqlens = {0, 5, 3, 8};
    CHECK_THROWS_AS(unpack(bad), FormatError);
    bad.buffers[0].cu_seqlens = {0, 3, 5, 7};
    CHECK_THROWS_AS(unpack(bad), FormatError);
    bad.buffers[0].cu_seqlens = {1, 3, 8};
    CHECK_THROWS_AS(unpack(bad), FormatError);
    bad.buffers[0].cu_seqlens = {};
    CHECK_THROWS_AS(unpack(bad), FormatError);
}

TEST_CASE("strategy names") {
    CHECK(parse_strategy("contiguous") == PackingStrategy::Contiguous);
    CHECK(parse_strategy("first_fit") == PackingStrategy::FirstFit);
    CHECK(parse_strategy("first_fit_decreasing") == PackingStrategy::FirstFitDecreasing);
    CHECK(parse_strategy("ffd") == PackingStrategy::FirstFitDecreasing);
    CHECK_FALSE(parse_strategy("best_fit"));
    for (auto s : kAll) CHECK(parse_strategy(to_string(s)) == s);
}

TEST_CASE("first fit agrees with a linear-scan oracle") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 80)(rng);
        std::vector<std::size_t> lengths(n);
        for (auto& l : lengths) l = std::uniform_int_distribution<std::size_t>(1, cap)(rng);

        std::vector<std::size_t> arrival(n);
        std::iota(arrival.begin(), arrival.end(), 0);
        auto ff = plan_packing(lengths, cap, PackingStrategy::FirstFit);
        auto want = test::naive_first_fit(lengths, arrival, cap);
        for (std::size_t i = 0; i < n; ++i) CHECK(ff.placements[i].buffer == want[i]);

        auto sorted = arrival;
        std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return lengths[a] > lengths[b]; });
        auto ffd = plan_packing(lengths, cap, PackingStrategy::FirstFitDecreasing);
        auto want_ffd = test::naive_first_fit(lengths, sorted, cap);
        for (std::size_t i = 0; i < n; ++i) CHECK(ffd.placements[i].buffer == want_ffd[i]);
    }
}

TEST_CASE("FFD stays within 11/9 OPT + 1 of the exhaustive optimum") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
        std::vector<std::size_t> lengths(n);
        for (auto& l : lengths) l = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
        const auto opt = test::optimal_bins(lengths, cap);
        const auto ffd = plan_packing(lengths, cap, PackingStrategy::FirstFitDecreasing).buffer_count;
        CHECK(ffd >= opt);
        CHECK(9 * ffd <= 11 * opt + 9);
    }
}

TEST_CASE("pack and unpack round trip for every strategy") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 30)(rng);
        std::vector<RenderedSample> samples;
        for (std::size_t i = 0; i < n; ++i) samples.push_back(sample_of(std::uniform_int_distribution<std::size_t>(1, cap)(rng), rng));
        std::vector<std::size_t> lengths;
        for (auto& s : samples) lengths.push_back(s.size());

        for (auto strategy : kAll) {
            for (bool pad_seg : {true, false}) {
                auto plan = plan_packing(lengths, cap, strategy);
                auto batch = pack(samples, cap, strategy, {kPad, pad_seg});
                CHECK(batch == pack(samples, cap, strategy, {kPad, pad_seg}));

                auto segs = unpack(batch);
                auto order = plan.packed_order();
                REQUIRE(segs.size() == n);
                for (std::size_t k = 0; k < n; ++k) {
                    CHECK(segs[k].tokens == samples[order[k]].tokens);
                    CHECK(segs[k].labels == samples[order[k]].labels);
                }

                auto eff = efficiency(batch);
                CHECK(eff.real_tokens + eff.pad_tokens == eff.total_capacity);
                CHECK(eff.real_tokens == std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}));
                CHECK(eff.efficiency() <= 1.0);

                auto members = plan.members();
                for (std::size_t b = 0; b < batch.buffers.size(); ++b) {
                    const auto& buf = batch.buffers[b];
                    CHECK(buf.tokens.size() == cap);
                    CHECK(buf.cu_seqlens.front() == 0);
                    CHECK(buf.cu_seqlens.back() == cap);
                    // segments partition [0, cap) and follow the packed lengths
                    std::vector<std::uint32_t> want{0};
                    for (auto idx : members.of(b)) want.push_back(want.back() + static_cast<std::uint32_t>(lengths[idx]));
                    if (want.back() < cap) {
                        if (pad_seg) want.push_back(static_cast<std::uint32_t>(cap));
                        else want.back() = static_cast<std::uint32_t>(cap);
                    }
                    CHECK(buf.cu_seqlens == want);
                    for (std::size_t i = cap - buf.pad_count; i < cap; ++i) {
                        CHECK(buf.tokens[i] == kPad);
                        CHECK(buf.labels[i] == kIgnoreIndex);
                    }
                    CHECK(plan.used(b) + buf.pad_count == cap);
                }
            }
        }
    }
}

TEST_CASE("contiguous packing never reorders") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t cap = 32;
        std::vector<std::size_t> lengths(std::uniform_int_distribution<std::size_t>(1, 40)(rng));
        for (auto& l : lengths) l = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
        auto plan = plan_packing(lengths, cap, PackingStrategy::Contiguous);
        auto order = plan.packed_order();
        for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
        for (std::size_t i = 1; i < lengths.size(); ++i) {
            const auto& a = plan.placements[i - 1];
            const auto& b = plan.placements[i];
            CHECK((b.buffer > a.buffer || b.offset > a.offset));
            if (b.buffer > a.buffer) CHECK(plan.used(a.buffer) + lengths[i] > cap);
        }
    }
}
