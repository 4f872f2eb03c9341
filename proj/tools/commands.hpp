#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/filter.hpp"
#include "forge/packer.hpp"
#include "forge/render.hpp"

namespace forge::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kDiagnostics = 2 };

/// Everything a run depends on. The JSON it was read from is kept verbatim
/// so manifests can embed it.
struct PipelineConfig {
    std::string tokenizer = "reference";
    ChatTemplate chat_template;
    FilterConfig filter;
    std::vector<Stage> stages = default_stage_order();
    std::size_t capacity = kDefaultCapacity;
    PackingStrategy strategy = PackingStrategy::FirstFitDecreasing;
    bool pad_as_segment = true;
    bool truncate_oversize = false;
    std::uint64_t seed = 0;
    nlohmann::json source = nlohmann::json::object();

    /// Defaults plus the shipped refusal pattern list.
    static PipelineConfig defaults();
    /// Throws ConfigError on unknown values.
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

std::string default_refusal_patterns_path();

struct Io {
    std::ostream& out;
    std::ostream& err;
};

struct CommonOptions {
    std::string config_path;  // empty = defaults
    std::optional<std::string> tokenizer;
    bool pretty = false;
};

struct FilterOptions {
    CommonOptions common;
    std::string in = "-";
    std::string out = "-";
    std::string report;  // empty: stdout when --out is a file, else stderr
};
int cmd_filter(const FilterOptions& opts, Io io);

struct RenderOptions {
    CommonOptions common;
    std::string in = "-";
    std::string out = "-";
    bool preview = false;
};
int cmd_render(const RenderOptions& opts, Io io);

struct PackOptionsCli {
    CommonOptions common;
    std::string in = "-";
    std::string out;
    std::string manifest;  // default: <out>.json
    std::optional<long long> seq_len;
    std::optional<std::string> strategy;
    std::optional<bool> pad_as_segment;
    bool truncate_oversize = false;
};
int cmd_pack(const PackOptionsCli& opts, Io io);

struct StatsOptions {
    CommonOptions common;
    std::string in = "-";
};
int cmd_stats(const StatsOptions& opts, Io io);

struct SelectOptions {
    std::string scores;
    bool pretty = false;
};
int cmd_select(const SelectOptions& opts, Io io);

struct ParseOptions {
    std::string mode = "tools";  // tools | citations | agentic
    std::string in = "-";
    bool partial = false;
    bool pretty = false;
};
int cmd_parse(const ParseOptions& opts, Io io);

struct SynthOptions {
    std::string out = "-";
    std::size_t samples = 5000;
    double mean_length = 600.0;
    double sigma = 1.0;
    std::size_t max_length = kDefaultCapacity;
    std::uint64_t seed = 20240815;
};
int cmd_synth(const SynthOptions& opts, Io io);

/// Percentage with one decimal place, as shown in category tables.
double percent_1dp(double fraction);

}  // namespace forge::cli
