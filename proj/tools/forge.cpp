#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "forge/parallel.hpp"

namespace {

void add_common(CLI::App* app, forge::cli::CommonOptions& common) {
    app->add_option("--config", common.config_path, "Pipeline config (JSON)");
    app->add_option("--tokenizer", common.tokenizer, "Tokenizer (reference)");
    app->add_flag("--pretty", common.pretty, "Human-readable output");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace forge::cli;
    forge::parallel::configure_threads_from_env();

    CLI::App app{"forge: fine-tuning data preparation (filter, render, pack, stats, select, parse)"};
    app.require_subcommand(1);

    FilterOptions filter;
    auto* f = app.add_subcommand("filter", "Drop low-quality conversations and write a drop report");
    add_common(f, filter.common);
    f->add_option("--in", filter.in, "Input JSONL ('-' for stdin)");
    f->add_option("--out", filter.out, "Kept conversations JSONL ('-' for stdout)");
    f->add_option("--report", filter.report, "Drop report JSON path");

    RenderOptions render;
    auto* r = app.add_subcommand("render", "Render conversations to tokens and training labels");
    add_common(r, render.common);
    r->add_option("--in", render.in, "Input JSONL");
    r->add_option("--out", render.out, "Output JSONL");
    r->add_flag("--preview", render.preview, "Print aligned token/label columns");

    PackOptionsCli pack;
    bool fold_pads = false;
    auto* p = app.add_subcommand("pack", "Render and pack conversations into an HPAK file");
    add_common(p, pack.common);
    p->add_option("--in", pack.in, "Input JSONL");
    p->add_option("--out", pack.out, "Output HPAK file")->required();
    p->add_option("--manifest", pack.manifest, "Manifest JSON path (default <out>.json)");
    p->add_option("--seq-len", pack.seq_len, "Tokens per buffer (default 8192)");
    p->add_option("--strategy", pack.strategy, "contiguous | first_fit | first_fit_decreasing");
    p->add_flag("--truncate-oversize", pack.truncate_oversize, "Cut samples longer than --seq-len");
    p->add_flag("--fold-pads", fold_pads, "Fold padding into the last segment instead of its own segment");

    StatsOptions stats;
    auto* s = app.add_subcommand("stats", "Token split and per-category token table");
    add_common(s, stats.common);
    s->add_option("--in", stats.in, "Input JSONL");

    SelectOptions select;
    auto* sel = app.add_subcommand("select", "Pick the checkpoint with the best min-max normalized score");
    sel->add_option("--scores", select.scores, "Score matrix (CSV or JSON)")->required();
    sel->add_flag("--pretty", select.pretty, "Human-readable table");

    ParseOptions parse;
    auto* pa = app.add_subcommand("parse", "Parse tool calls, citations or agentic tags from text");
    pa->add_option("--mode", parse.mode, "tools | citations | agentic")
        ->check(CLI::IsMember({"tools", "citations", "agentic"}));
    pa->add_option("--in", parse.in, "Input text ('-' for stdin)");
    pa->add_flag("--partial", parse.partial, "Treat input as an unfinished generation (agentic)");
    pa->add_flag("--pretty", parse.pretty, "Indented JSON");

    SynthOptions synth;
    auto* sy = app.add_subcommand("synth", "Generate a synthetic corpus with log-normal rendered lengths");
    sy->add_option("--out", synth.out, "Output JSONL");
    sy->add_option("--samples", synth.samples, "Number of conversations");
    sy->add_option("--mean", synth.mean_length, "Mean rendered length");
    sy->add_option("--sigma", synth.sigma, "Log-space standard deviation");
    sy->add_option("--seq-len", synth.max_length, "Clip lengths to this");
    sy->add_option("--seed", synth.seed, "Random seed");

    CLI11_PARSE(app, argc, argv);

    Io io{std::cout, std::cerr};
    if (*f) return cmd_filter(filter, io);
    if (*r) return cmd_render(render, io);
    if (*p) {
        if (fold_pads) pack.pad_as_segment = false;
        return cmd_pack(pack, io);
    }
    if (*s) return cmd_stats(stats, io);
    if (*sel) return cmd_select(select, io);
    if (*pa) return cmd_parse(parse, io);
    if (*sy) return cmd_synth(synth, io);
    return kFailure;
}
