#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "forge/agentic.hpp"
#include "forge/corpus.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/hpak.hpp"
#include "forge/parallel.hpp"
#include "forge/protocol.hpp"
#include "forge/select.hpp"
#include "forge/synth.hpp"

#ifndef FORGE_DATA_DIR
#define FORGE_DATA_DIR "data"
#endif

namespace forge::cli {

using nlohmann::json;

namespace {

constexpr std::size_t kChunk = 4096;

// A re-readable input; standard input is buffered once so multi-pass commands work.
class InputSource {
public:
    explicit InputSource(std::string path) : path_(std::move(path)) {
        if (path_ == "-") {
            std::ostringstream ss;
            ss << std::cin.rdbuf();
            stdin_ = ss.str();
        } else if (!std::ifstream(path_)) {
            throw Error("cannot open input " + path_);
        }
    }

    std::unique_ptr<std::istream> open() const {
        if (path_ == "-") return std::make_unique<std::istringstream>(stdin_);
        auto in = std::make_unique<std::ifstream>(path_, std::ios::binary);
        if (!*in) throw Error("cannot open input " + path_);
        return in;
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::string stdin_;
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback, bool binary = false) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
            if (!file_) throw Error("cannot open output " + path);
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }
    void close() {
        stream_->flush();
        if (!*stream_) throw Error("write failed");
    }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& name, const ChatTemplate& tmpl) {
    if (name != "reference") throw ConfigError("unknown tokenizer '" + name + "' (available: reference)");
    auto specials = ReferenceTokenizer::default_specials();
    for (const auto* s : {&tmpl.start_of_turn, &tmpl.end_of_turn, &tmpl.pad}) {
        if (std::find(specials.begin(), specials.end(), *s) == specials.end()) specials.push_back(*s);
    }
    return std::make_unique<ReferenceTokenizer>(std::move(specials));
}

PipelineConfig resolve_config(const CommonOptions& common) {
    auto cfg = common.config_path.empty() ? PipelineConfig::defaults() : PipelineConfig::load(common.config_path);
    if (common.tokenizer) cfg.tokenizer = *common.tokenizer;
    return cfg;
}

struct Record {
    std::size_t seq;  // index among successfully ingested conversations
    Conversation conv;
};

struct ReadCounters {
    std::size_t lines = 0;
    std::size_t ingest_errors = 0;
    Fnv1a content_hash;
};

// Streams conversations in bounded chunks. Ingest errors are reported to `on_error`.
void for_each_chunk(std::istream& in, ReadCounters& counters, const std::function<void(std::vector<Record>&)>& on_chunk,
                    const std::function<void(const RecordError&)>& on_error) {
    std::vector<Record> chunk;
    std::string line;
    std::size_t seq = 0;
    while (std::getline(in, line)) {
        ++counters.lines;
        counters.content_hash.update(line).update("\n");
        auto item = parse_record(line, counters.lines);
        if (auto* err = std::get_if<RecordError>(&item)) {
            ++counters.ingest_errors;
            on_error(*err);
            continue;
        }
        chunk.push_back({seq++, std::get<Conversation>(std::move(item))});
        if (chunk.size() == kChunk) {
            on_chunk(chunk);
            chunk.clear();
        }
    }
    if (!chunk.empty()) on_chunk(chunk);
}

std::vector<Conversation> conversations_of(std::vector<Record>& chunk) {
    std::vector<Conversation> convs;
    convs.reserve(chunk.size());
    for (auto& r : chunk) convs.push_back(r.conv);
    return convs;
}

struct SampleItem {
    std::string id;
    parallel::RenderOutcome outcome;
};

// A pre-rendered record carries "tokens" and "labels"; anything else is a conversation.
std::optional<parallel::RenderOutcome> prerendered(const json& j, const Tokenizer& tok, TokenId pad) {
    if (!j.is_object() || !j.contains("tokens")) return std::nullopt;
    parallel::RenderOutcome r;
    try {
        RenderedSample s;
        s.tokens = j.at("tokens").get<std::vector<TokenId>>();
        s.labels = j.at("labels").get<std::vector<Label>>();
        if (s.tokens.size() != s.labels.size()) throw Error("tokens and labels differ in length");
        for (std::size_t i = 0; i < s.size(); ++i) {
            // the pad id is reserved so readers can recover padding from the buffer tail
            if (s.tokens[i] >= tok.vocab_size() || s.tokens[i] == pad) throw Error("token id outside the usable vocabulary");
            if (s.labels[i] == kIgnoreIndex) continue;
            if (s.labels[i] != static_cast<Label>(s.tokens[i])) throw Error("label is neither the token nor the ignore value");
            ++s.supervised_count;
        }
        if (s.tokens.empty()) throw Error("empty sample");
        r.sample = std::move(s);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

// Streams samples (rendering conversations in parallel per chunk) in input order.
void for_each_sample_chunk(std::istream& in, ReadCounters& counters, const ChatTemplate& tmpl, const Tokenizer& tok,
                           const std::function<void(std::vector<SampleItem>&)>& on_chunk,
                           const std::function<void(const RecordError&)>& on_error) {
    std::vector<std::string> lines;
    auto flush = [&] {
        std::vector<SampleItem> items(lines.size());
        std::vector<Conversation> convs;
        std::vector<std::size_t> conv_slot;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::size_t line_no = counters.lines - lines.size() + i + 1;
            json j = json::parse(lines[i], nullptr, false);
            if (auto r = prerendered(j, tok, tok.special(tmpl.pad))) {
                items[i].id = j.value("id", "line " + std::to_string(line_no));
                items[i].outcome = std::move(*r);
                continue;
            }
            auto item = parse_record(lines[i], line_no);
            if (auto* err = std::get_if<RecordError>(&item)) {
                ++counters.ingest_errors;
                on_error(*err);
                items[i].id.clear();
                continue;
            }
            conv_slot.push_back(i);
            convs.push_back(std::get<Conversation>(std::move(item)));
        }
        const auto rendered = parallel::render_corpus(convs, tmpl, tok);
        for (std::size_t k = 0; k < convs.size(); ++k) {
            items[conv_slot[k]].id = convs[k].id;
            items[conv_slot[k]].outcome = rendered[k];
        }
        std::erase_if(items, [](const SampleItem& it) { return it.id.empty(); });
        on_chunk(items);
        lines.clear();
    };
    std::string line;
    while (std::getline(in, line)) {
        ++counters.lines;
        counters.content_hash.update(line).update("\n");
        lines.push_back(std::move(line));
        if (lines.size() == kChunk) flush();
    }
    if (!lines.empty()) flush();
}

void print_json(std::ostream& out, const json& j, bool pretty) { out << j.dump(pretty ? 2 : -1) << '\n'; }

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

void report_record_error(std::ostream& err, const RecordError& e) {
    err << "line " << e.line << ": " << to_string(e.kind) << ": " << e.message << '\n';
}

}  // namespace

std::string default_refusal_patterns_path() { return std::string(FORGE_DATA_DIR) + "/refusal_patterns.txt"; }

double percent_1dp(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig cfg;
    cfg.filter.refusal_patterns = load_patterns_file(default_refusal_patterns_path());
    return cfg;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig cfg = defaults();
    cfg.source = j;
    try {
        cfg.tokenizer = j.value("tokenizer", cfg.tokenizer);
        if (j.contains("template")) cfg.chat_template = ChatTemplate::from_json(j.at("template"));
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            cfg.filter = FilterConfig::from_json(f);
            if (!f.contains("refusal_patterns")) {
                cfg.filter.refusal_patterns = load_patterns_file(f.value("refusal_patterns_file", default_refusal_patterns_path()));
            }
        }
        if (j.contains("stages")) {
            cfg.stages.clear();
            for (const auto& s : j.at("stages")) {
                auto stage = parse_stage(s.get<std::string>());
                if (!stage) throw ConfigError("unknown stage '" + s.get<std::string>() + "'");
                cfg.stages.push_back(*stage);
            }
        }
        if (j.contains("capacity")) {
            const auto cap = j.at("capacity").get<long long>();
            if (cap <= 0) throw ConfigError("capacity must be positive");
            cfg.capacity = static_cast<std::size_t>(cap);
        }
        if (j.contains("strategy")) {
            auto s = parse_strategy(j.at("strategy").get<std::string>());
            if (!s) throw ConfigError("unknown strategy '" + j.at("strategy").get<std::string>() + "'");
            cfg.strategy = *s;
        }
        cfg.pad_as_segment = j.value("pad_as_segment", cfg.pad_as_segment);
        cfg.truncate_oversize = j.value("truncate_oversize", cfg.truncate_oversize);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
    return from_json(j);
}

json PipelineConfig::to_json() const {
    json stage_names = json::array();
    for (auto s : stages) stage_names.push_back(to_string(s));
    return {{"tokenizer", tokenizer},
            {"template", chat_template.to_json()},
            {"filter", filter.to_json()},
            {"stages", std::move(stage_names)},
            {"capacity", capacity},
            {"strategy", to_string(strategy)},
            {"pad_as_segment", pad_as_segment},
            {"truncate_oversize", truncate_oversize},
            {"seed", seed}};
}

int cmd_filter(const FilterOptions& opts, Io io) {
    try {
        const auto cfg = resolve_config(opts.common);
        const auto tok = make_tokenizer(cfg.tokenizer, cfg.chat_template);
        const InputSource source(opts.in);
        FilterPipeline pipeline(cfg.filter, cfg.stages, *tok);

        // Pass 1: gather duplicate groups. Pass 2: decide and copy kept lines verbatim.
        {
            auto in = source.open();
            std::size_t seq = 0;
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(*in, line)) {
                auto item = parse_record(line, ++line_no);
                if (auto* conv = std::get_if<Conversation>(&item)) pipeline.observe(*conv, seq++);
            }
        }
        pipeline.finish();

        Output out(opts.out, io.out);
        {
            auto in = source.open();
            std::size_t seq = 0;
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(*in, line)) {
                auto item = parse_record(line, ++line_no);
                if (auto* err = std::get_if<RecordError>(&item)) {
                    pipeline.note_ingest_error();
                    report_record_error(io.err, *err);
                    continue;
                }
                if (pipeline.decide(std::get<Conversation>(item), seq++).kept()) *out << line << '\n';
            }
        }
        out.close();

        json report = pipeline.report().to_json();
        report["config"] = cfg.source.empty() ? cfg.to_json() : cfg.source;
        const bool out_is_stdout = opts.out.empty() || opts.out == "-";
        Output rep(opts.report, out_is_stdout ? io.err : io.out);
        print_json(*rep, report, opts.common.pretty);
        rep.close();
        return kOk;
    } catch (const std::exception& e) {
        io.err << "filter: " << e.what() << '\n';
        return kFailure;
    }
}

int cmd_render(const RenderOptions& opts, Io io) {
    try {
        const auto cfg = resolve_config(opts.common);
        const auto tok = make_tokenizer(cfg.tokenizer, cfg.chat_template);
        const InputSource source(opts.in);
        Output out(opts.out, io.out);
        ReadCounters counters;
        std::size_t render_errors = 0;
        auto in = source.open();
        for_each_chunk(
            *in, counters,
            [&](std::vector<Record>& chunk) {
                const auto convs = conversations_of(chunk);
                const auto rendered = parallel::render_corpus(convs, cfg.chat_template, *tok);
                for (std::size_t i = 0; i < convs.size(); ++i) {
                    if (!rendered[i].sample) {
                        ++render_errors;
                        io.err << "record '" << convs[i].id << "': " << rendered[i].error << '\n';
                        continue;
                    }
                    const auto& s = *rendered[i].sample;
                    if (opts.preview) {
                        *out << "# " << convs[i].id << " (" << s.size() << " tokens, " << s.supervised_count
                             << " supervised)\n"
                             << preview(s, *tok);
                    } else {
                        *out << json{{"id", convs[i].id},
                                     {"tokens", s.tokens},
                                     {"labels", s.labels},
                                     {"supervised_count", s.supervised_count}}
                                    .dump()
                             << '\n';
                    }
                }
            },
            [&](const RecordError& e) { report_record_error(io.err, e); });
        out.close();
        return (render_errors || counters.ingest_errors) ? kDiagnostics : kOk;
    } catch (const std::exception& e) {
        io.err << "render: " << e.what() << '\n';
        return kFailure;
    }
}

int cmd_pack(const PackOptionsCli& opts, Io io) {
    try {
        auto cfg = resolve_config(opts.common);
        if (opts.seq_len) {
            if (*opts.seq_len <= 0) throw ConfigError("--seq-len must be positive");
            cfg.capacity = static_cast<std::size_t>(*opts.seq_len);
        }
        if (opts.strategy) {
            auto s = parse_strategy(*opts.strategy);
            if (!s) throw ConfigError("unknown strategy '" + *opts.strategy + "'");
            cfg.strategy = *s;
        }
        if (opts.pad_as_segment) cfg.pad_as_segment = *opts.pad_as_segment;
        if (opts.truncate_oversize) cfg.truncate_oversize = true;
        if (opts.out.empty() || opts.out == "-") throw ConfigError("pack needs --out <file.hpak>");

        const auto tok = make_tokenizer(cfg.tokenizer, cfg.chat_template);
        const TokenId pad = tok->special(cfg.chat_template.pad);
        const InputSource source(opts.in);

        // Pass 1: lengths only.
        std::vector<std::size_t> lengths;
        std::vector<std::string> truncated_ids;
        std::size_t render_errors = 0;
        ReadCounters counters;
        {
            auto in = source.open();
            for_each_sample_chunk(
                *in, counters, cfg.chat_template, *tok,
                [&](std::vector<SampleItem>& items) {
                    for (const auto& it : items) {
                        if (!it.outcome.sample) {
                            ++render_errors;
                            io.err << "record '" << it.id << "': " << it.outcome.error << '\n';
                            continue;
                        }
                        std::size_t len = it.outcome.sample->size();
                        if (len > cfg.capacity) {
                            if (!cfg.truncate_oversize) {
                                throw Error("record '" + it.id + "' renders to " + std::to_string(len) +
                                            " tokens, above --seq-len " + std::to_string(cfg.capacity) +
                                            " (use --truncate-oversize to cut it)");
                            }
                            truncated_ids.push_back(it.id);
                            len = cfg.capacity;
                        }
                        lengths.push_back(len);
                    }
                },
                [&](const RecordError& e) { report_record_error(io.err, e); });
        }

        const auto plan = plan_packing(lengths, cfg.capacity, cfg.strategy);

        // Pass 2: write each sample into its planned slot.
        {
            std::ofstream file(opts.out, std::ios::binary | std::ios::trunc);
            if (!file) throw Error("cannot open output " + opts.out);
            HpakPlanWriter writer(file, plan, pad, cfg.pad_as_segment);
            ReadCounters again;
            std::size_t index = 0;
            auto in = source.open();
            for_each_sample_chunk(
                *in, again, cfg.chat_template, *tok,
                [&](std::vector<SampleItem>& items) {
                    for (const auto& it : items) {
                        if (!it.outcome.sample) continue;
                        if (index >= plan.lengths.size()) throw Error("input changed between passes");
                        writer.write_sample(index++, *it.outcome.sample);
                    }
                },
                [](const RecordError&) {});
            writer.finish();
            if (index != plan.lengths.size()) throw Error("input changed between passes");
        }

        const auto report = efficiency(plan);
        json manifest = {{"format", "HPAK"},
                         {"version", kHpakVersion},
                         {"strategy", to_string(cfg.strategy)},
                         {"capacity", cfg.capacity},
                         {"pad_as_segment", cfg.pad_as_segment},
                         {"tokenizer", tok->identity()},
                         {"pad_token", pad},
                         {"counts",
                          {{"input_lines", counters.lines},
                           {"samples", plan.lengths.size()},
                           {"buffers", plan.buffer_count},
                           {"ingest_errors", counters.ingest_errors},
                           {"render_errors", render_errors},
                           {"truncated", truncated_ids.size()}}},
                         {"truncated_ids", truncated_ids},
                         {"efficiency", report.to_json()},
                         {"input", {{"path", source.path()}, {"fnv1a64", hex64(counters.content_hash.digest())}}},
                         {"config", cfg.source.empty() ? cfg.to_json() : cfg.source}};
        Output man(opts.manifest.empty() ? opts.out + ".json" : opts.manifest, io.out);
        print_json(*man, manifest, true);
        man.close();
        if (opts.common.pretty) {
            io.out << "buffers " << report.buffers << ", real " << report.real_tokens << ", pad " << report.pad_tokens
                   << ", efficiency " << std::fixed << std::setprecision(4) << report.efficiency_rounded() << '\n';
        }
        return (render_errors || counters.ingest_errors) ? kDiagnostics : kOk;
    } catch (const std::exception& e) {
        io.err << "pack: " << e.what() << '\n';
        return kFailure;
    }
}

int cmd_stats(const StatsOptions& opts, Io io) {
    try {
        const auto cfg = resolve_config(opts.common);
        const auto tok = make_tokenizer(cfg.tokenizer, cfg.chat_template);
        const InputSource source(opts.in);
        ReadCounters counters;
        parallel::CorpusStats total;
        std::size_t conversations = 0;
        auto in = source.open();
        for_each_chunk(
            *in, counters,
            [&](std::vector<Record>& chunk) {
                const auto convs = conversations_of(chunk);
                conversations += convs.size();
                auto part = parallel::corpus_stats(convs, cfg.chat_template, *tok);
                total.split.merge(part.split);
                total.categories.merge(part.categories);
                total.render_errors += part.render_errors;
            },
            [&](const RecordError& e) { report_record_error(io.err, e); });

        const auto rows = total.categories.table();
        if (opts.common.pretty) {
            auto& o = io.out;
            o << std::left << std::setw(32) << "Category" << std::right << std::setw(16) << "Proportion (%)"
              << std::setw(14) << "Tokens" << '\n';
            double pct_sum = 0.0;
            for (const auto& r : rows) {
                pct_sum += percent_1dp(r.proportion);
                o << std::left << std::setw(32) << r.category << std::right << std::setw(16) << std::fixed
                  << std::setprecision(1) << percent_1dp(r.proportion) << std::setw(14) << r.tokens << '\n';
            }
            o << std::left << std::setw(32) << "Total" << std::right << std::setw(16) << std::fixed << std::setprecision(1)
              << pct_sum << std::setw(14) << total.categories.total() << '\n';
            o << "output tokens " << total.split.output_tokens << " (" << std::setprecision(1)
              << percent_1dp(total.split.output_fraction()) << "%), input tokens " << total.split.input_tokens << '\n';
            return kOk;
        }
        json cats = json::array();
        for (const auto& r : rows) {
            cats.push_back({{"category", r.category},
                            {"tokens", r.tokens},
                            {"proportion", r.proportion},
                            {"percent", percent_1dp(r.proportion)}});
        }
        print_json(io.out,
                   {{"conversations", conversations},
                    {"ingest_errors", counters.ingest_errors},
                    {"render_errors", total.render_errors},
                    {"token_split", total.split.to_json()},
                    {"categories", std::move(cats)}},
                   false);
        return kOk;
    } catch (const std::exception& e) {
        io.err << "stats: " << e.what() << '\n';
        return kFailure;
    }
}

int cmd_select(const SelectOptions& opts, Io io) {
    try {
        std::ifstream in(opts.scores);
        if (!in) throw Error("cannot open scores " + opts.scores);
        std::ostringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        ScoreMatrix m;
        if (first != std::string::npos && text[first] == '{') {
            json j = json::parse(text, nullptr, false);
            if (j.is_discarded()) throw ConfigError("scores file is not valid JSON");
            m = ScoreMatrix::from_json(j);
        } else {
            std::istringstream csv(text);
            m = ScoreMatrix::from_csv(csv);
        }
        const auto r = select_checkpoint(m);
        if (opts.pretty) {
            auto& o = io.out;
            o << std::left << std::setw(16) << "suite";
            for (const auto& e : m.epochs) o << std::right << std::setw(16) << e;
            o << '\n';
            for (std::size_t s = 0; s < m.suites.size(); ++s) {
                o << std::left << std::setw(16) << m.suites[s];
                for (std::size_t e = 0; e < m.epochs.size(); ++e) {
                    std::ostringstream cell;
                    cell << std::fixed << std::setprecision(2) << m.scores[s][e] << " (" << r.display[s][e] << ")";
                    o << std::right << std::setw(16) << cell.str();
                }
                o << '\n';
            }
            o << std::left << std::setw(16) << "Total Score";
            for (double t : r.display_totals) {
                std::ostringstream cell;
                cell << std::fixed << std::setprecision(2) << t;
                o << std::right << std::setw(16) << cell.str();
            }
            o << "\nselected epoch " << r.selected_epoch << '\n';
        } else {
            print_json(io.out, r.to_json(m), false);
        }
        return kOk;
    } catch (const std::exception& e) {
        io.err << "select: " << e.what() << '\n';
        return kFailure;
    }
}

int cmd_parse(const ParseOptions& opts, Io io) {
    std::string text;
    try {
        const InputSource source(opts.in);
        std::ostringstream buf;
        buf << source.open()->rdbuf();
        text = buf.str();
    } catch (const std::exception& e) {
        io.err << "parse: " << e.what() << '\n';
        return kFailure;
    }

    json result = json::object();
    json diagnostics = json::array();
    auto record = [&](const proto::ProtocolError& e) {
        diagnostics.push_back({{"kind", to_string(e.kind())}, {"offset", e.offset()}, {"message", e.what()}});
    };
    if (opts.mode == "tools") {
        json calls = json::array(), responses = json::array(), tools = json::array();
        try {
            for (const auto& c : proto::parse_tool_calls(text)) calls.push_back(proto::to_json(c));
            for (auto& r : proto::parse_tool_responses(text)) responses.push_back(std::move(r));
            for (const auto& d : proto::parse_tools_block(text)) tools.push_back(proto::to_json(d));
        } catch (const proto::ProtocolError& e) {
            record(e);
        }
        result = {{"tool_calls", calls}, {"tool_responses", responses}, {"tools", tools}};
    } else if (opts.mode == "citations") {
        try {
            const auto c = proto::extract_citations(text);
            json spans = json::array();
            for (const auto& s : c.spans) {
                spans.push_back({{"doc_id", s.doc_id}, {"start", s.start}, {"end", s.end}, {"text", s.text}});
            }
            result = {{"clean_text", c.clean_text}, {"spans", spans}, {"cited_ids", c.cited_ids}};
        } catch (const proto::ProtocolError& e) {
            record(e);
            result = {{"clean_text", nullptr}, {"spans", json::array()}, {"cited_ids", json::array()}};
        }
    } else if (opts.mode == "agentic") {
        try {
            const auto tree = proto::parse_agentic(text, proto::AgenticSchema::standard(), {opts.partial});
            result = tree.to_json();
            diagnostics = result["diagnostics"];
            result.erase("diagnostics");
        } catch (const proto::ProtocolError& e) {
            record(e);
        }
    } else {
        io.err << "parse: unknown mode '" << opts.mode << "' (tools|citations|agentic)\n";
        return kFailure;
    }
    result["diagnostics"] = diagnostics;
    print_json(io.out, result, opts.pretty);
    return diagnostics.empty() ? kOk : kDiagnostics;
}

int cmd_synth(const SynthOptions& opts, Io io) {
    try {
        SynthConfig sc;
        sc.samples = opts.samples;
        sc.mean_length = opts.mean_length;
        sc.sigma = opts.sigma;
        sc.min_length = kExchangeOverhead + 2;
        sc.max_length = opts.max_length;
        sc.seed = opts.seed;
        const auto lengths = synthetic_lengths(sc);
        Output out(opts.out, io.out);
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            const auto conv = synthetic_conversation("synth-" + std::to_string(i), lengths[i], opts.seed ^ (i * 0x9E3779B97F4A7C15ULL));
            *out << to_jsonl_line(conv) << '\n';
        }
        out.close();
        return kOk;
    } catch (const std::exception& e) {
        io.err << "synth: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace forge::cli
