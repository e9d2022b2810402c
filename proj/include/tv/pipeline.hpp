#pragma once

// End-to-end execution of the four-phase answer pipeline as an explicit
// state machine, with a complete per-run trace and structural termination
// (at most one trusted search, one general search, two verification passes).

#include <chrono>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tv/backends.hpp"
#include "tv/claim_engine.hpp"
#include "tv/context_filter.hpp"
#include "tv/core.hpp"
#include "tv/retrieval_router.hpp"

namespace tv {

inline constexpr int kTraceSchemaVersion = 1;

struct PipelineConfig {
    int tau = 70;  // confidence threshold, inclusive comparison on both scores
    int max_results_per_tier = 5;
    int per_doc_char_budget = 8000;
    TrustedSourceRegistry registry = TrustedSourceRegistry::default_registry();
    std::map<std::string, std::string> prompt_template_ids = default_template_ids();
    std::optional<std::uint64_t> judge_order_seed;
    bool deterministic_timing = true;  // pin elapsed_ms to 0 (fixture/replay mode)

    static std::map<std::string, std::string> default_template_ids() {
        return {{"extract_claims", prompts::kExtractClaimsTemplate},
                {"check_constraints", prompts::kCheckConstraintsTemplate},
                {"score_intrinsic", prompts::kScoreIntrinsicTemplate},
                {"score_retrieved", prompts::kScoreRetrievedTemplate},
                {"detect_domain", prompts::kDetectDomainTemplate},
                {"grade_documents", prompts::kGradeDocumentTemplate},
                {"regenerate", prompts::kRegenerateTemplate},
                {"judge", prompts::kJudgeTemplate}};
    }

    void validate() const {
        if (tau < 0 || tau > 100) throw ValidationError("tau must be in [0,100]");
        if (max_results_per_tier < 1) throw ValidationError("max_results_per_tier must be >= 1");
        if (per_doc_char_budget < 1) throw ValidationError("per_doc_char_budget must be >= 1");
        registry.validate();
    }
};

// Infrastructure failure (quota, transport): the run produced no pipeline
// answer. Kept distinct from apology so metrics stay honest.
struct InvalidRun {
    BackendError error;
    std::vector<TraceEvent> trace;
};

struct RunResult {
    std::optional<PipelineOutcome> outcome;
    std::optional<InvalidRun> invalid;
    bool is_valid() const { return outcome.has_value(); }
};

inline std::string generate_apology(const std::string& question) {
    return "I could not find sufficiently supported evidence to answer \"" + question +
           "\". Rather than risk an unverified answer, I am declining to answer this question.";
}

inline std::string regenerate(GeneratorPort& generator, const std::string& question,
                              const std::vector<Document>& evidence,
                              int per_doc_char_budget = 8000) {
    if (evidence.empty()) throw ValidationError("regenerate: empty evidence");
    GeneratorRequest req;
    req.stage = "regenerate";
    req.user_prompt = prompts::regenerate_prompt(question, evidence, per_doc_char_budget);
    return generator.generate(req).text;
}

namespace detail {

class TraceRecorder {
public:
    explicit TraceRecorder(bool deterministic) : deterministic_(deterministic) {
        last_ = std::chrono::steady_clock::now();
    }

    void add(TraceStage stage, json payload) {
        const auto now = std::chrono::steady_clock::now();
        std::int64_t ms = 0;
        if (!deterministic_)
            ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - last_).count();
        last_ = now;
        events_.push_back({++seq_, stage, std::move(payload), ms});
    }

    std::vector<TraceEvent> take() { return std::move(events_); }

private:
    bool deterministic_;
    int seq_ = 0;
    std::vector<TraceEvent> events_;
    std::chrono::steady_clock::time_point last_;
};

}  // namespace detail

inline RunResult run_query(const QueryCase& query_case, const PipelineConfig& config,
                           const BackendPorts& ports) {
    config.validate();
    if (query_case.question.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ValidationError("run_query: empty question");

    detail::TraceRecorder trace(config.deterministic_timing);
    const auto& tmpl = config.prompt_template_ids;

    auto finish = [&](OutcomeKind kind, std::string answer, std::vector<AtomicClaim> claims,
                      std::vector<ClaimVerdict> verdicts, std::optional<ConfidenceScore> score,
                      TierState state) {
        PipelineOutcome out;
        out.kind = kind;
        out.answer_text = std::move(answer);
        out.claims = std::move(claims);
        out.verdicts = std::move(verdicts);
        out.final_score = score;
        out.tier_state = state;
        out.trace = trace.take();
        return RunResult{std::move(out), std::nullopt};
    };

    try {
        // Phase I: intrinsic verification and early exit.
        GeneratorRequest init_req;
        init_req.stage = "generate_init";
        init_req.user_prompt = query_case.question;
        const GeneratorResponse init = ports.generator->generate(init_req);
        trace.add(TraceStage::generate_init,
                  {{"model_id", init.model_id}, {"answer", init.text}});

        ClaimSet claims;
        RefusalFlag refusal;
        bool extraction_ok = true;
        try {
            std::tie(claims, refusal) = extract_claims(*ports.generator, init.text,
                                                       query_case.question);
        } catch (const ClaimExtractionFailed&) {
            extraction_ok = false;  // skip early exit, fall through to retrieval
            claims = {init.text, {}};
        }
        trace.add(TraceStage::extract_claims,
                  {{"template", tmpl.at("extract_claims")},
                   {"n_claims", claims.claims.size()},
                   {"is_refusal", refusal.is_refusal},
                   {"failed", !extraction_ok}});

        const auto violations = extraction_ok
                                    ? check_constraints(*ports.generator, claims, query_case.question)
                                    : std::vector<ConstraintViolation>{
                                          {0, "claim extraction failed", ViolationKind::other}};
        {
            json vj = json::array();
            for (const auto& v : violations)
                vj.push_back({{"claim_index", v.claim_index},
                              {"kind", to_string(v.kind)},
                              {"description", v.description}});
            trace.add(TraceStage::check_constraints,
                      {{"template", tmpl.at("check_constraints")}, {"violations", vj}});
        }

        // Scoring happens only inside the no-violations branch; a refusal or
        // empty claim set routes to retrieval (fail toward verification).
        if (violations.empty() && !refusal.is_refusal && !claims.claims.empty()) {
            try {
                auto [verdicts, score] = score_intrinsic(*ports.generator, claims);
                json confidences = json::array();
                for (const auto& v : verdicts) confidences.push_back(v.self_confidence->value());
                trace.add(TraceStage::score_intrinsic,
                          {{"template", tmpl.at("score_intrinsic")},
                           {"score", score.value()},
                           {"confidences", confidences}});
                if (score.value() >= config.tau) {
                    trace.add(TraceStage::early_exit, {{"score", score.value()}});
                    return finish(OutcomeKind::intrinsic_answer, init.text, claims.claims,
                                  std::move(verdicts), score, TierState{false, false});
                }
            } catch (const IntrinsicScoringFailed& e) {
                trace.add(TraceStage::score_intrinsic,
                          {{"template", tmpl.at("score_intrinsic")},
                           {"failed", true},
                           {"detail", std::string(e.what())}});
            }
        }

        // Phase II: adaptive search routing.
        const DomainLabel domain = detect_domain(*ports.generator, query_case.question,
                                                 config.registry);
        trace.add(TraceStage::detect_domain,
                  {{"template", tmpl.at("detect_domain")}, {"label", domain.name}});

        TierState state;
        for (int guard = 0; guard < 3; ++guard) {
            std::vector<Document> raw;
            switch (advance_tier(state)) {
                case TierAction::do_trusted: {
                    state.trusted_done = true;
                    const bool configured =
                        config.registry.entries.find(domain.name) != config.registry.entries.end();
                    if (!configured) {
                        // Registry miss: tier marked done without a search call.
                        trace.add(TraceStage::search_trusted,
                                  {{"skipped", true}, {"domain", domain.name}});
                        continue;
                    }
                    raw = trusted_search(*ports.search, query_case.question, domain,
                                         config.registry, config.max_results_per_tier);
                    trace.add(TraceStage::search_trusted,
                              {{"domain", domain.name}, {"n_docs", raw.size()}});
                    break;
                }
                case TierAction::do_general: {
                    state.general_done = true;
                    raw = general_search(*ports.search, query_case.question,
                                         config.max_results_per_tier);
                    trace.add(TraceStage::search_general, {{"n_docs", raw.size()}});
                    break;
                }
                case TierAction::exhausted: {
                    const std::string apology = generate_apology(query_case.question);
                    trace.add(TraceStage::apology, {{"reason", "tiers exhausted"}});
                    return finish(OutcomeKind::apology, apology, {}, {}, std::nullopt, state);
                }
            }

            // Phase III: refined context filtering.
            const GradingResult graded = grade_documents(*ports.generator, raw,
                                                         query_case.question,
                                                         config.per_doc_char_budget);
            trace.add(TraceStage::grade_documents,
                      {{"template", tmpl.at("grade_documents")},
                       {"n_in", raw.size()},
                       {"n_kept", graded.kept.size()}});
            if (graded.kept.empty()) continue;  // loop to next search tier

            // Phase IV: extrinsic regeneration and verification.
            const std::string regen = regenerate(*ports.generator, query_case.question,
                                                 graded.kept, config.per_doc_char_budget);
            trace.add(TraceStage::regenerate,
                      {{"template", tmpl.at("regenerate")}, {"answer", regen}});

            ClaimSet regen_claims;
            bool verification_possible = true;
            try {
                auto [cs, flag] = extract_claims(*ports.generator, regen, query_case.question);
                regen_claims = std::move(cs);
                // A refusal despite evidence cannot be a verified answer.
                verification_possible = !flag.is_refusal && !regen_claims.claims.empty();
                trace.add(TraceStage::extract_claims,
                          {{"template", tmpl.at("extract_claims")},
                           {"n_claims", regen_claims.claims.size()},
                           {"is_refusal", flag.is_refusal},
                           {"failed", false}});
            } catch (const ClaimExtractionFailed&) {
                verification_possible = false;
                trace.add(TraceStage::extract_claims,
                          {{"template", tmpl.at("extract_claims")},
                           {"n_claims", 0},
                           {"is_refusal", false},
                           {"failed", true}});
            }

            if (verification_possible) {
                try {
                    auto [verdicts, score] = score_retrieved(*ports.generator, regen_claims,
                                                             graded.kept,
                                                             config.per_doc_char_budget);
                    const auto supported =
                        std::count_if(verdicts.begin(), verdicts.end(), [](const ClaimVerdict& v) {
                            return v.status == VerdictStatus::supported;
                        });
                    trace.add(TraceStage::score_retrieved,
                              {{"template", tmpl.at("score_retrieved")},
                               {"score", score.value()},
                               {"n_supported", supported},
                               {"n_claims", verdicts.size()}});
                    if (score.value() >= config.tau)
                        return finish(OutcomeKind::verified_rag_answer, regen,
                                      regen_claims.claims, std::move(verdicts), score, state);
                } catch (const RetrievedScoringFailed& e) {
                    trace.add(TraceStage::score_retrieved,
                              {{"template", tmpl.at("score_retrieved")},
                               {"failed", true},
                               {"detail", std::string(e.what())}});
                }
            }

            if (state.trusted_done && state.general_done) {
                const std::string apology = generate_apology(query_case.question);
                trace.add(TraceStage::apology, {{"reason", "verification failed on final tier"}});
                return finish(OutcomeKind::apology, apology, {}, {}, std::nullopt, state);
            }
        }
        throw ValidationError("pipeline loop exceeded its structural bound");  // unreachable
    } catch (const BackendException& e) {
        return RunResult{std::nullopt, InvalidRun{e.error, trace.take()}};
    }
}

// ---- trace serialization and validation --------------------------------

inline json trace_event_to_json(const TraceEvent& e) {
    return {{"record", "event"},
            {"seq", e.seq},
            {"stage", to_string(e.stage)},
            {"elapsed_ms", e.elapsed_ms},
            {"payload", e.payload}};
}

// Line-delimited JSON: one event per line plus a terminal summary record.
inline void write_trace(const RunResult& result, std::ostream& sink,
                        const std::string& case_id = "") {
    const auto& events = result.is_valid() ? result.outcome->trace : result.invalid->trace;
    for (const auto& e : events) sink << trace_event_to_json(e).dump() << "\n";
    json summary = {{"record", "summary"}, {"trace_schema_version", kTraceSchemaVersion}};
    if (!case_id.empty()) summary["case_id"] = case_id;
    if (result.is_valid()) {
        const auto& o = *result.outcome;
        summary["kind"] = to_string(o.kind);
        if (o.final_score) summary["final_score"] = o.final_score->value();
        summary["tier_state"] = {{"trusted_done", o.tier_state.trusted_done},
                                 {"general_done", o.tier_state.general_done}};
        summary["n_claims"] = o.claims.size();
    } else {
        summary["kind"] = "invalid";
        summary["error_kind"] = to_string(result.invalid->error.kind);
        summary["error_detail"] = result.invalid->error.detail;
    }
    sink << summary.dump() << "\n";
}

// Structural check: seq strictly increasing and the stage sequence is one
// the control flow can produce. Used by tests and the acceptance suite.
inline std::optional<std::string> validate_trace(const std::vector<TraceEvent>& events) {
    if (events.empty()) return "empty trace";
    int prev_seq = 0;
    for (const auto& e : events) {
        if (e.seq <= prev_seq) return "seq not strictly increasing";
        prev_seq = e.seq;
    }
    using S = TraceStage;
    auto allowed_after = [](S s) -> std::vector<S> {
        switch (s) {
            case S::generate_init: return {S::extract_claims};
            case S::extract_claims:
                return {S::check_constraints, S::score_retrieved, S::search_general, S::apology};
            case S::check_constraints: return {S::score_intrinsic, S::detect_domain};
            case S::score_intrinsic: return {S::early_exit, S::detect_domain};
            case S::detect_domain: return {S::search_trusted};
            case S::search_trusted: return {S::grade_documents, S::search_general};
            case S::search_general: return {S::grade_documents, S::apology};
            case S::grade_documents: return {S::regenerate, S::search_general, S::apology};
            case S::regenerate: return {S::extract_claims};
            case S::score_retrieved: return {S::search_general, S::apology};
            case S::apology: return {};
            case S::early_exit: return {};
        }
        return {};
    };
    if (events.front().stage != S::generate_init) return "trace must start with generate_init";
    for (size_t i = 0; i + 1 < events.size(); ++i) {
        const auto next = allowed_after(events[i].stage);
        if (std::find(next.begin(), next.end(), events[i + 1].stage) == next.end())
            return std::string("illegal transition ") + to_string(events[i].stage) + " -> " +
                   to_string(events[i + 1].stage);
    }
    const S last = events.back().stage;
    if (last != S::early_exit && last != S::apology && last != S::score_retrieved)
        return std::string("trace ends on non-terminal stage ") + to_string(last);
    return std::nullopt;
}

}  // namespace tv
