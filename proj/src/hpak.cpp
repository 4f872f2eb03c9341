#include "forge/hpak.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace forge {

namespace {

constexpr char kMagic[4] = {'H', 'P', 'A', 'K'};
constexpr std::uint64_t kHeaderBytes = 16;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw FormatError(std::string("truncated HPAK stream while reading ") + what);
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_header(std::ostream& out, std::size_t capacity, std::size_t buffers) {
    out.write(kMagic, 4);
    put_u32(out, kHpakVersion);
    put_u32(out, static_cast<std::uint32_t>(capacity));
    put_u32(out, static_cast<std::uint32_t>(buffers));
}

void write_u32_array(std::ostream& out, const auto& values) {
    std::string buf;
    buf.reserve(values.size() * 4);
    for (auto v : values) put_u32(buf, static_cast<std::uint32_t>(v));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_buffer(std::ostream& out, const PackedBuffer& b) {
    put_u32(out, static_cast<std::uint32_t>(b.segment_count()));
    write_u32_array(out, b.cu_seqlens);
    write_u32_array(out, b.tokens);
    write_u32_array(out, b.labels);  // two's complement bit pattern
}

}  // namespace

void write_hpak(std::ostream& out, const PackedBatch& batch) {
    write_header(out, batch.capacity, batch.buffers.size());
    for (const auto& b : batch.buffers) write_buffer(out, b);
    if (!out) throw Error("failed writing HPAK stream");
}

void write_hpak_file(const std::string& path, const PackedBatch& batch) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_hpak(out, batch);
}

PackedBatch read_hpak(std::istream& in, TokenId pad_token) {
    char magic[4];
    if (!in.read(magic, 4)) throw FormatError("truncated HPAK stream while reading magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad HPAK magic");
    const std::uint32_t version = get_u32(in, "version");
    if (version != kHpakVersion) throw UnsupportedVersion(version);

    PackedBatch batch;
    batch.capacity = get_u32(in, "capacity");
    const std::uint32_t n_buffers = get_u32(in, "buffer count");
    if (batch.capacity == 0 && n_buffers > 0) throw FormatError("zero capacity with non-empty buffers");
    batch.buffers.reserve(n_buffers);
    for (std::uint32_t b = 0; b < n_buffers; ++b) {
        PackedBuffer buf;
        const std::uint32_t n_segments = get_u32(in, "segment count");
        if (n_segments == 0 || n_segments > batch.capacity) throw FormatError("implausible segment count");
        buf.cu_seqlens.resize(n_segments + 1);
        for (auto& c : buf.cu_seqlens) c = get_u32(in, "cu_seqlens");
        buf.tokens.resize(batch.capacity);
        for (auto& t : buf.tokens) t = get_u32(in, "tokens");
        buf.labels.resize(batch.capacity);
        for (auto& l : buf.labels) l = static_cast<Label>(get_u32(in, "labels"));
        if (buf.cu_seqlens.front() != 0 || buf.cu_seqlens.back() != batch.capacity) {
            throw FormatError("buffer " + std::to_string(b) + " boundaries do not span capacity");
        }
        const std::size_t last_start = buf.cu_seqlens[n_segments - 1];
        std::size_t pos = batch.capacity;
        while (pos > last_start && buf.tokens[pos - 1] == pad_token && buf.labels[pos - 1] == kIgnoreIndex) --pos;
        buf.pad_count = batch.capacity - pos;
        batch.buffers.push_back(std::move(buf));
    }
    return batch;
}

PackedBatch read_hpak_file(const std::string& path, TokenId pad_token) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_hpak(in, pad_token);
}

HpakPlanWriter::HpakPlanWriter(std::ostream& out, const PackingPlan& plan, TokenId pad_token, bool pad_as_segment)
    : out_(out), plan_(plan) {
    write_header(out_, plan.capacity, plan.buffer_count);
    const auto members = plan.members();
    const std::vector<TokenId> pads(plan.capacity, pad_token);
    const std::vector<Label> ignore(plan.capacity, kIgnoreIndex);
    std::uint64_t pos = kHeaderBytes;
    token_base_.reserve(plan.buffer_count);
    for (std::size_t b = 0; b < plan.buffer_count; ++b) {
        const auto cu = buffer_cu_seqlens(plan, members, b, pad_as_segment);
        put_u32(out_, static_cast<std::uint32_t>(cu.size() - 1));
        write_u32_array(out_, cu);
        pos += 4 + 4 * cu.size();
        token_base_.push_back(pos);
        write_u32_array(out_, pads);
        write_u32_array(out_, ignore);
        pos += 8 * plan.capacity;
    }
    if (!out_) throw Error("failed writing HPAK skeleton");
}

void HpakPlanWriter::write_sample(std::size_t index, const RenderedSample& sample) {
    const std::size_t len = plan_.lengths.at(index);
    if (sample.size() < len) throw Error("sample shorter than its planned length");
    const auto [b, at] = plan_.placements[index];
    const std::uint64_t tokens_at = token_base_[b] + 4ULL * at;
    out_.seekp(static_cast<std::streamoff>(tokens_at));
    write_u32_array(out_, std::span<const TokenId>(sample.tokens.data(), len));
    out_.seekp(static_cast<std::streamoff>(tokens_at + 4ULL * plan_.capacity));
    write_u32_array(out_, std::span<const Label>(sample.labels.data(), len));
    if (!out_) throw Error("failed writing HPAK sample");
}

void HpakPlanWriter::finish() {
    out_.seekp(0, std::ios::end);
    out_.flush();
    if (!out_) throw Error("failed finalizing HPAK stream");
}

}  // namespace forge
