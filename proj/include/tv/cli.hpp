#pragma once

// Operator surface: `answer`, `eval`, `trace`, `serve`. Exit codes for
// `answer`: 0 verified/intrinsic answer, 2 apology, 3 invalid run,
// 1 configuration or usage error. An honest refusal is scriptable.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tv/config.hpp"
#include "tv/eval.hpp"
#include "tv/pipeline.hpp"
#include "tv/service.hpp"
#include "CLI11.hpp"

namespace tv::cli {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<int> tau;
    std::optional<std::string> fixtures;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
};

inline AppConfig resolve_config(const CommonFlags& flags) {
    AppConfig cfg = AppConfig::load(flags.config_path);
    if (flags.tau) cfg.pipeline.tau = *flags.tau;
    if (flags.fixtures) cfg.fixtures_path = *flags.fixtures;
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.seed) cfg.pipeline.judge_order_seed = *flags.seed;
    return cfg;
}

inline int cmd_answer(const std::string& question, const AppConfig& cfg,
                      const std::string& trace_out, std::ostream& out = std::cout) {
    const BackendPorts ports = cfg.make_ports();
    QueryCase query_case{"cli", question, {}, {}, {}};
    const RunResult result = run_query(query_case, cfg.pipeline, ports);

    if (!trace_out.empty()) {
        std::filesystem::path p(trace_out);
        if (p.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(p.parent_path(), ec);
        }
        std::ofstream sink(p, std::ios::binary);
        write_trace(result, sink, query_case.id);
    }

    if (!result.is_valid()) {
        out << "run invalid: " << to_string(result.invalid->error.kind) << " ("
            << result.invalid->error.detail << ")\n";
        return 3;
    }
    const PipelineOutcome& o = *result.outcome;
    out << o.answer_text << "\n";
    out << "kind: " << to_string(o.kind) << "\n";
    if (o.final_score) out << "score: " << o.final_score->value() << "\n";
    return o.kind == OutcomeKind::apology ? 2 : 0;
}

inline int cmd_eval(const std::string& case_file, const AppConfig& cfg, BookkeepingMode mode,
                    std::ostream& out = std::cout) {
    const auto cases = load_cases(case_file);
    if (cases.empty()) {
        std::cerr << "case file is empty: " << case_file << "\n";
        return 1;
    }
    const BackendPorts ports = cfg.make_ports();
    const std::string name = std::filesystem::path(case_file).stem().string();
    const EvalReport report = evaluate(cases, cfg.pipeline, ports, mode, name, cfg.workers);

    std::error_code ec;
    std::filesystem::create_directories(cfg.report_dir, ec);
    const auto base = std::filesystem::path(cfg.report_dir) / name;
    {
        std::ofstream md(base.string() + ".md", std::ios::binary);
        md << render_report_markdown(report);
        std::ofstream csv(base.string() + ".csv", std::ios::binary);
        csv << render_report_csv(report);
    }
    out << name << ": N=" << report.n_valid << " wins=" << report.wins << " ties=" << report.ties
        << " baseline_wins=" << report.baseline_wins << " invalid=" << report.invalid_runs
        << " win_rate=" << format_pct(report.win_rate_valid) << "\n";
    return 0;
}

inline int cmd_trace(const std::string& id, const AppConfig& cfg, std::ostream& out = std::cout) {
    const auto path = std::filesystem::path(cfg.trace_dir) / (id + ".jsonl");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "no stored trace with id '" << id << "' under " << cfg.trace_dir << "\n";
        return 1;
    }
    out << in.rdbuf();
    return 0;
}

inline int cmd_serve(const AppConfig& cfg) {
    const auto colon = cfg.bind.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--bind must be HOST:PORT\n";
        return 1;
    }
    const std::string host = cfg.bind.substr(0, colon);
    const int port = std::stoi(cfg.bind.substr(colon + 1));
    AnswerService service(cfg, cfg.make_ports());
    std::cerr << "listening on " << host << ":" << port << "\n";
    return service.listen(host, port) ? 0 : 1;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"tiered retrieval and verification answer engine"};
    app.require_subcommand(1);
    CommonFlags flags;

    std::string question, trace_out = "traces/last_answer.jsonl";
    auto* answer = app.add_subcommand("answer", "answer one question through the pipeline");
    answer->add_option("--question,-q", question, "question text")->required();
    answer->add_option("--trace-out", trace_out, "trace file path");

    std::string case_file, mode_name = "strict";
    auto* eval_cmd = app.add_subcommand("eval", "run a benchmark case file");
    eval_cmd->add_option("--cases", case_file, "line-delimited JSON case file")->required();
    eval_cmd->add_option("--mode", mode_name, "strict | paper_compat")
        ->check(CLI::IsMember({"strict", "paper_compat"}));

    std::string trace_id;
    auto* trace_cmd = app.add_subcommand("trace", "print a stored trace");
    trace_cmd->add_option("--id", trace_id, "trace id")->required();

    std::string bind_flag;
    auto* serve_cmd = app.add_subcommand("serve", "run the answer HTTP service");
    serve_cmd->add_option("--bind", bind_flag, "HOST:PORT");

    for (auto* sub : {answer, eval_cmd, trace_cmd, serve_cmd}) {
        sub->add_option("--config", flags.config_path, "config file (or TV_CONFIG)");
        sub->add_option("--tau", flags.tau, "confidence threshold override");
        sub->add_option("--fixtures", flags.fixtures, "fixture file or directory");
        sub->add_option("--workers", flags.workers, "eval worker count");
        sub->add_option("--seed", flags.seed, "judge order seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        AppConfig cfg = resolve_config(flags);
        if (*answer) return cmd_answer(question, cfg, trace_out);
        if (*eval_cmd)
            return cmd_eval(case_file, cfg,
                            mode_name == "paper_compat" ? BookkeepingMode::paper_compat
                                                        : BookkeepingMode::strict);
        if (*trace_cmd) return cmd_trace(trace_id, cfg);
        if (*serve_cmd) {
            if (!bind_flag.empty()) cfg.bind = bind_flag;
            return cmd_serve(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace tv::cli
