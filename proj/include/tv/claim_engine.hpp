#pragma once

// Phase I / Phase IV cognition: claim extraction, constraint checking,
// intrinsic (closed-book) scoring and retrieved-evidence scoring. All
// state flows through parameters; every call goes through the generator
// port with a schema-constrained prompt.

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "tv/backends.hpp"
#include "tv/core.hpp"
#include "tv/prompts.hpp"

namespace tv {

struct ClaimSet {
    std::string source_answer;
    std::vector<AtomicClaim> claims;  // indices 0..n-1, no gaps
};

struct RefusalFlag {
    bool is_refusal = false;
    std::optional<std::string> reason;
};

// Stage errors: schema failure converted to a policy-relevant type so the
// orchestrator can route (skip early exit / fail toward verification).
// Transport and quota failures propagate as BackendException untouched.
struct ClaimExtractionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntrinsicScoringFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RetrievedScoringFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline bool is_schema_failure(const BackendException& e) {
    return e.error.kind == BackendErrorKind::schema_invalid_after_retries;
}
}  // namespace detail

inline std::pair<ClaimSet, RefusalFlag> extract_claims(GeneratorPort& generator,
                                                       const std::string& answer,
                                                       const std::string& question) {
    if (answer.empty()) throw ValidationError("extract_claims: empty answer");
    GeneratorRequest req;
    req.stage = "extract_claims";
    req.user_prompt = prompts::extract_claims_prompt(answer, question);
    req.output_schema = prompts::claim_extraction_schema();
    json structured;
    try {
        structured = *generator.generate(req).structured;
    } catch (const BackendException& e) {
        if (detail::is_schema_failure(e)) throw ClaimExtractionFailed(e.what());
        throw;
    }
    ClaimSet set{answer, {}};
    int index = 0;
    for (const auto& c : structured.at("claims"))
        set.claims.push_back({c.get<std::string>(), index++});
    RefusalFlag flag;
    flag.is_refusal = structured.at("is_refusal").get<bool>();
    if (structured.contains("reason") && structured.at("reason").is_string())
        flag.reason = structured.at("reason").get<std::string>();
    return {std::move(set), std::move(flag)};
}

// Empty claim set -> empty violation list. Schema failure degrades to one
// synthetic kind=other violation, which blocks the early exit.
inline std::vector<ConstraintViolation> check_constraints(GeneratorPort& generator,
                                                          const ClaimSet& claims,
                                                          const std::string& question) {
    if (claims.claims.empty()) return {};
    GeneratorRequest req;
    req.stage = "check_constraints";
    req.user_prompt = prompts::check_constraints_prompt(claims.claims, question);
    req.output_schema = prompts::constraint_check_schema();
    json structured;
    try {
        structured = *generator.generate(req).structured;
    } catch (const BackendException& e) {
        if (!detail::is_schema_failure(e)) throw;
        return {{0, "constraint check failed: generator output never validated", ViolationKind::other}};
    }
    std::vector<ConstraintViolation> out;
    for (const auto& v : structured.at("violations")) {
        const int idx = v.at("claim_index").get<int>();
        if (idx < 0 || idx >= static_cast<int>(claims.claims.size()))
            return {{0, "constraint check returned an out-of-range claim index",
                     ViolationKind::other}};
        out.push_back({idx, v.at("description").get<std::string>(),
                       *violation_kind_from(v.at("kind").get<std::string>())});
    }
    return out;
}

// Closed-book per-claim self-confidence; S_intrinsic is the half-up-rounded
// mean. A claim is marked supported when the model believes it more likely
// true than not (self-confidence >= 50); the score itself uses the raw mean.
inline std::pair<std::vector<ClaimVerdict>, ConfidenceScore>
score_intrinsic(GeneratorPort& generator, const ClaimSet& claims) {
    if (claims.claims.empty()) throw EmptyClaimSet("score_intrinsic: no claims to score");
    std::vector<ClaimVerdict> verdicts;
    long sum = 0;
    for (const auto& claim : claims.claims) {
        GeneratorRequest req;
        req.stage = "score_intrinsic";
        req.user_prompt = prompts::score_intrinsic_prompt(claim);
        req.output_schema = prompts::claim_confidence_schema();
        json structured;
        try {
            structured = *generator.generate(req).structured;
        } catch (const BackendException& e) {
            if (detail::is_schema_failure(e)) throw IntrinsicScoringFailed(e.what());
            throw;
        }
        const int confidence = structured.at("confidence").get<int>();
        sum += confidence;
        ClaimVerdict v;
        v.claim = claim;
        v.status = confidence >= 50 ? VerdictStatus::supported : VerdictStatus::unsupported;
        v.self_confidence = ConfidenceScore::make(confidence);
        verdicts.push_back(std::move(v));
    }
    const auto mean = static_cast<int>(
        std::llround(static_cast<double>(sum) / static_cast<double>(claims.claims.size())));
    return {std::move(verdicts), ConfidenceScore::make(mean)};
}

// Cross-references each claim against the evidence; S_retrieved is the
// supported-claim ratio (identical formula to groundedness). Cited doc ids
// not present in the evidence are dropped; a supported claim left with no
// valid citation is downgraded to unsupported.
inline std::pair<std::vector<ClaimVerdict>, ConfidenceScore>
score_retrieved(GeneratorPort& generator, const ClaimSet& claims,
                const std::vector<Document>& evidence, int per_doc_char_budget = 8000) {
    if (claims.claims.empty()) throw EmptyClaimSet("score_retrieved: no claims to score");
    if (evidence.empty()) throw ValidationError("score_retrieved: empty evidence");
    std::vector<ClaimVerdict> verdicts;
    for (const auto& claim : claims.claims) {
        GeneratorRequest req;
        req.stage = "score_retrieved";
        req.user_prompt = prompts::score_retrieved_prompt(claim, evidence, per_doc_char_budget);
        req.output_schema = prompts::claim_verdict_schema();
        json structured;
        try {
            structured = *generator.generate(req).structured;
        } catch (const BackendException& e) {
            if (detail::is_schema_failure(e)) throw RetrievedScoringFailed(e.what());
            throw;
        }
        ClaimVerdict v;
        v.claim = claim;
        const auto status = structured.at("status").get<std::string>();
        v.status = status == "supported"      ? VerdictStatus::supported
                   : status == "contradicted" ? VerdictStatus::contradicted
                                              : VerdictStatus::unsupported;
        for (const auto& id : structured.at("evidence_doc_ids")) {
            const auto id_s = id.get<std::string>();
            const bool known = std::any_of(evidence.begin(), evidence.end(),
                                           [&](const Document& d) { return d.doc_id == id_s; });
            if (known) v.evidence_doc_ids.push_back(id_s);
        }
        if (v.status == VerdictStatus::supported && v.evidence_doc_ids.empty())
            v.status = VerdictStatus::unsupported;
        verdicts.push_back(std::move(v));
    }
    const ConfidenceScore score = aggregate_verdicts(verdicts);
    return {std::move(verdicts), score};
}

}  // namespace tv
