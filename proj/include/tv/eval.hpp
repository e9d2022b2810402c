#pragma once

// Benchmark runner: pipeline vs zero-shot baseline, pairwise judging with
// seeded answer-order randomization, and win-rate/groundedness accounting.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tv/backends.hpp"
#include "tv/core.hpp"
#include "tv/pipeline.hpp"

namespace tv {

enum class PairVerdict { pipeline_win, baseline_win, tie };

inline const char* to_string(PairVerdict v) {
    switch (v) {
        case PairVerdict::pipeline_win: return "pipeline_win";
        case PairVerdict::baseline_win: return "baseline_win";
        case PairVerdict::tie: return "tie";
    }
    return "unknown";
}

enum class BookkeepingMode { strict, paper_compat };

enum class FailureMode {
    parametric_competition,
    false_premise_overclaim,
    vagueness,
    retrieval_distraction,
    numeric_mismatch,
    structured_extraction,
};

inline const char* to_string(FailureMode m) {
    switch (m) {
        case FailureMode::parametric_competition: return "parametric_competition";
        case FailureMode::false_premise_overclaim: return "false_premise_overclaim";
        case FailureMode::vagueness: return "vagueness";
        case FailureMode::retrieval_distraction: return "retrieval_distraction";
        case FailureMode::numeric_mismatch: return "numeric_mismatch";
        case FailureMode::structured_extraction: return "structured_extraction";
    }
    return "unknown";
}

struct EvalCaseResult {
    std::string case_id;
    QueryCase query;
    RunResult pipeline;
    std::optional<std::string> baseline_answer;  // nullopt = baseline call failed
    std::optional<PairVerdict> judge_verdict;    // absent for invalid rows
    std::optional<std::pair<double, double>> groundedness_hallucination;  // nullopt = 0/0 row
    bool pipeline_presented_first = false;       // recorded judge order
};

struct EvalReport {
    std::string benchmark_name;
    BookkeepingMode mode = BookkeepingMode::strict;
    std::uint64_t judge_order_seed = 0;
    int n_total = 0;
    int n_valid = 0;
    int wins = 0;
    int ties = 0;  // paper_compat: includes invalid runs
    int baseline_wins = 0;
    int invalid_runs = 0;
    double win_rate_valid = 0.0;   // 100 * wins / n_valid (primary)
    double win_rate_total = 0.0;   // 100 * wins / n_total (paper-compat convention)
    int n_applicable = 0;          // rows with a groundedness score
    double mean_groundedness = 0.0;
    double mean_hallucination = 0.0;
    std::vector<EvalCaseResult> rows;
};

// ---- case file ----------------------------------------------------------

// Line-delimited JSON, one QueryCase per line. Duplicate ids and malformed
// records fail loudly with the offending line number.
inline std::vector<QueryCase> load_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open case file: " + path);
    std::vector<QueryCase> cases;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ValidationError("case file " + path + ": parse error at line " +
                                  std::to_string(line_no));
        QueryCase c;
        c.id = j.value("id", "");
        c.question = j.value("question", "");
        if (c.id.empty())
            throw ValidationError("case file line " + std::to_string(line_no) + ": missing id");
        if (c.question.find_first_not_of(" \t\r\n") == std::string::npos)
            throw ValidationError("case file line " + std::to_string(line_no) +
                                  ": empty question (id " + c.id + ")");
        for (const auto& existing : cases)
            if (existing.id == c.id)
                throw ValidationError("case file line " + std::to_string(line_no) +
                                      ": duplicate id '" + c.id + "'");
        if (j.contains("reference_answer")) c.reference_answer = j.at("reference_answer").get<std::string>();
        if (j.contains("category")) c.category = j.at("category").get<std::string>();
        if (j.contains("false_premise")) c.false_premise = j.at("false_premise").get<bool>();
        cases.push_back(std::move(c));
    }
    return cases;
}

// ---- baseline -----------------------------------------------------------

// Single unaugmented generation, identical settings (and identical fixture
// rule) to the pipeline's initial answer.
inline std::optional<std::string> run_baseline(const QueryCase& query_case,
                                               GeneratorPort& generator) {
    GeneratorRequest req;
    req.stage = "generate_init";
    req.user_prompt = query_case.question;
    try {
        return generator.generate(req).text;
    } catch (const BackendException&) {
        return std::nullopt;
    }
}

// ---- judge order --------------------------------------------------------

// Stable 64-bit FNV-1a; std::hash is not pinned across implementations.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Per-case coin flip derived from the run seed and the case id, so verdicts
// are reproducible and independent of case ordering.
inline bool pipeline_goes_first(std::uint64_t judge_order_seed, const std::string& case_id) {
    std::uint64_t x = judge_order_seed ^ fnv1a(case_id);
    x ^= x >> 33;  // splitmix64 finalizer
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return (x & 1) == 0;
}

// ---- metric arithmetic (pure; golden-tested against recorded tallies) ----

inline double win_rate_percent(int wins, int n) {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(wins) / static_cast<double>(n);
}

inline double round1(double x) { return std::llround(x * 10.0) / 10.0; }

inline std::string format_pct(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << round1(x) << "%";
    return os.str();
}

// ---- the harness ----------------------------------------------------------

inline EvalCaseResult evaluate_case(const QueryCase& query_case, const PipelineConfig& config,
                                    const BackendPorts& ports, std::uint64_t judge_order_seed) {
    EvalCaseResult row;
    row.case_id = query_case.id;
    row.query = query_case;
    row.pipeline = run_query(query_case, config, ports);
    row.baseline_answer = run_baseline(query_case, *ports.generator);
    row.pipeline_presented_first = pipeline_goes_first(judge_order_seed, query_case.id);

    if (row.pipeline.is_valid())
        row.groundedness_hallucination =
            groundedness_and_hallucination(row.pipeline.outcome->verdicts);

    if (row.pipeline.is_valid() && row.baseline_answer) {
        const std::string& p = row.pipeline.outcome->answer_text;
        const std::string& b = *row.baseline_answer;
        const std::string& a_side = row.pipeline_presented_first ? p : b;
        const std::string& b_side = row.pipeline_presented_first ? b : p;
        try {
            const JudgeVerdict v = ports.judge->judge_compare(query_case.question, a_side, b_side,
                                                              query_case.reference_answer);
            if (v == JudgeVerdict::tie) {
                row.judge_verdict = PairVerdict::tie;
            } else {
                const bool a_won = v == JudgeVerdict::a_wins;
                row.judge_verdict = (a_won == row.pipeline_presented_first)
                                        ? PairVerdict::pipeline_win
                                        : PairVerdict::baseline_win;
            }
        } catch (const BackendException&) {
            row.judge_verdict = std::nullopt;  // judged like an invalid row
        }
    }
    return row;
}

inline EvalReport aggregate_results(std::vector<EvalCaseResult> rows,
                                    const std::string& benchmark_name, BookkeepingMode mode,
                                    std::uint64_t judge_order_seed) {
    EvalReport report;
    report.benchmark_name = benchmark_name;
    report.mode = mode;
    report.judge_order_seed = judge_order_seed;
    report.n_total = static_cast<int>(rows.size());
    double g_sum = 0.0;
    for (const auto& row : rows) {
        const bool valid = row.pipeline.is_valid() && row.judge_verdict.has_value();
        if (!valid) {
            ++report.invalid_runs;
            continue;
        }
        ++report.n_valid;
        switch (*row.judge_verdict) {
            case PairVerdict::pipeline_win: ++report.wins; break;
            case PairVerdict::tie: ++report.ties; break;
            case PairVerdict::baseline_win: ++report.baseline_wins; break;
        }
        if (row.groundedness_hallucination) {
            ++report.n_applicable;
            g_sum += row.groundedness_hallucination->first;
        }
    }
    if (mode == BookkeepingMode::paper_compat) report.ties += report.invalid_runs;
    report.win_rate_valid = win_rate_percent(report.wins, report.n_valid);
    report.win_rate_total = win_rate_percent(report.wins, report.n_total);
    if (report.n_applicable > 0) {
        report.mean_groundedness = g_sum / report.n_applicable;
        report.mean_hallucination = 100.0 - report.mean_groundedness;
    }
    report.rows = std::move(rows);
    return report;
}

// Runs every case through pipeline + baseline + judge with bounded
// parallelism, then aggregates. Aggregates are pure functions of the row
// list, so worker scheduling cannot change any metric.
inline EvalReport evaluate(const std::vector<QueryCase>& cases, const PipelineConfig& config,
                           const BackendPorts& ports, BookkeepingMode mode,
                           const std::string& benchmark_name = "benchmark", int workers = 1) {
    if (cases.empty()) throw ValidationError("evaluate: empty case list");
    const std::uint64_t seed = config.judge_order_seed.value_or(0);
    std::vector<EvalCaseResult> rows(cases.size());
    if (workers <= 1) {
        for (size_t i = 0; i < cases.size(); ++i)
            rows[i] = evaluate_case(cases[i], config, ports, seed);
    } else {
        std::atomic<size_t> next{0};
        auto work = [&] {
            for (size_t i = next.fetch_add(1); i < cases.size(); i = next.fetch_add(1))
                rows[i] = evaluate_case(cases[i], config, ports, seed);
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return aggregate_results(std::move(rows), benchmark_name, mode, seed);
}

// ---- failure-mode labeling (advisory; never affects metrics) -------------

inline bool contains_digit(const std::string& s) {
    return s.find_first_of("0123456789") != std::string::npos;
}

// Heuristic labels for competitive losses. Multiple labels may apply;
// an empty result is allowed. Only baseline_win rows are labeled.
inline std::vector<FailureMode> label_failure_mode(const EvalCaseResult& row,
                                                   double vagueness_length_ratio = 4.0) {
    std::vector<FailureMode> labels;
    if (!row.judge_verdict || *row.judge_verdict != PairVerdict::baseline_win) return labels;
    if (!row.pipeline.is_valid()) return labels;
    const PipelineOutcome& out = *row.pipeline.outcome;
    const bool gave_factual_answer = out.kind != OutcomeKind::apology && !out.claims.empty();

    if (row.query.false_premise.value_or(false) && gave_factual_answer)
        labels.push_back(FailureMode::false_premise_overclaim);
    if (out.kind == OutcomeKind::intrinsic_answer)
        labels.push_back(FailureMode::parametric_competition);
    if (row.baseline_answer && !row.baseline_answer->empty() &&
        static_cast<double>(out.answer_text.size()) >
            vagueness_length_ratio * static_cast<double>(row.baseline_answer->size()))
        labels.push_back(FailureMode::vagueness);

    const bool any_unsupported =
        std::any_of(out.verdicts.begin(), out.verdicts.end(), [](const ClaimVerdict& v) {
            return v.status != VerdictStatus::supported;
        });
    if (out.kind == OutcomeKind::verified_rag_answer && any_unsupported)
        labels.push_back(FailureMode::retrieval_distraction);
    if (any_unsupported &&
        std::any_of(out.claims.begin(), out.claims.end(),
                    [](const AtomicClaim& c) { return contains_digit(c.text); }))
        labels.push_back(FailureMode::numeric_mismatch);
    if (any_unsupported && out.answer_text.find("|") != std::string::npos)
        labels.push_back(FailureMode::structured_extraction);
    return labels;
}

// ---- rendering ------------------------------------------------------------

inline std::string render_report_markdown(const EvalReport& r) {
    std::ostringstream os;
    os << "# Evaluation report: " << r.benchmark_name << "\n\n";
    os << "Bookkeeping mode: "
       << (r.mode == BookkeepingMode::strict ? "strict (invalid runs excluded)"
                                             : "paper_compat (invalid runs counted as ties)")
       << "\n";
    os << "Judge order seed: " << r.judge_order_seed << "\n\n";
    os << "| Benchmark | N | Proposed Wins | Tie | Baseline Wins | Win Rate | Hallucination | Groundedness |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    os << "| " << r.benchmark_name << " | " << r.n_valid << " | " << r.wins << " | " << r.ties
       << " | " << r.baseline_wins << " | " << format_pct(r.win_rate_valid) << " | "
       << (r.n_applicable ? format_pct(r.mean_hallucination) : std::string("n/a")) << " | "
       << (r.n_applicable ? format_pct(r.mean_groundedness) : std::string("n/a")) << " |\n\n";
    os << "Totals: " << r.n_total << " cases, " << r.invalid_runs << " invalid runs; "
       << "win rate over all cases: " << format_pct(r.win_rate_total) << "; "
       << "scored rows: " << r.n_applicable << "\n";
    return os.str();
}

inline std::string render_report_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "benchmark,n_total,n_valid,wins,ties,baseline_wins,invalid_runs,"
          "win_rate_valid,win_rate_total,n_applicable,mean_groundedness,mean_hallucination\n";
    os << r.benchmark_name << "," << r.n_total << "," << r.n_valid << "," << r.wins << ","
       << r.ties << "," << r.baseline_wins << "," << r.invalid_runs << ","
       << std::fixed << std::setprecision(1) << round1(r.win_rate_valid) << ","
       << round1(r.win_rate_total) << "," << r.n_applicable << ",";
    if (r.n_applicable) {
        os << round1(r.mean_groundedness) << "," << round1(r.mean_hallucination) << "\n";
    } else {
        os << "n/a,n/a\n";
    }
    return os.str();
}

}  // namespace tv
