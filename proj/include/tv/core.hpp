#pragma once

// Shared domain types and the pure arithmetic on scores and tier state.
// Everything here is an immutable value; no I/O.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tv/errors.hpp"
#include "json.hpp"

namespace tv {

using json = nlohmann::ordered_json;

struct QueryCase {
    std::string id;
    std::string question;
    std::optional<std::string> reference_answer;
    std::optional<std::string> category;
    std::optional<bool> false_premise;
};

// Integer percent in [0, 100]. Out-of-range values are rejected, never clamped.
class ConfidenceScore {
public:
    static ConfidenceScore make(int value) {
        if (value < 0 || value > 100)
            throw ValidationError("confidence score out of [0,100]: " + std::to_string(value));
        return ConfidenceScore(value);
    }
    int value() const { return value_; }
    friend bool operator==(ConfidenceScore a, ConfidenceScore b) { return a.value_ == b.value_; }
    friend auto operator<=>(ConfidenceScore a, ConfidenceScore b) { return a.value_ <=> b.value_; }

private:
    explicit ConfidenceScore(int v) : value_(v) {}
    int value_;
};

struct AtomicClaim {
    std::string text;
    int index = 0;  // ordinal within its answer, 0..n-1
};

enum class VerdictStatus { supported, unsupported, contradicted };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::supported: return "supported";
        case VerdictStatus::unsupported: return "unsupported";
        case VerdictStatus::contradicted: return "contradicted";
    }
    return "unknown";
}

struct ClaimVerdict {
    AtomicClaim claim;
    VerdictStatus status = VerdictStatus::unsupported;
    std::optional<ConfidenceScore> self_confidence;  // present iff intrinsic scoring
    std::vector<std::string> evidence_doc_ids;       // non-empty for retrieved "supported"
};

enum class ViolationKind { temporal, numerical, entity, premise, other };

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::temporal: return "temporal";
        case ViolationKind::numerical: return "numerical";
        case ViolationKind::entity: return "entity";
        case ViolationKind::premise: return "premise";
        case ViolationKind::other: return "other";
    }
    return "unknown";
}

inline std::optional<ViolationKind> violation_kind_from(const std::string& s) {
    if (s == "temporal") return ViolationKind::temporal;
    if (s == "numerical") return ViolationKind::numerical;
    if (s == "entity") return ViolationKind::entity;
    if (s == "premise") return ViolationKind::premise;
    if (s == "other") return ViolationKind::other;
    return std::nullopt;
}

struct ConstraintViolation {
    int claim_index = 0;
    std::string description;
    ViolationKind kind = ViolationKind::other;
};

enum class SourceTier { trusted, general };

inline const char* to_string(SourceTier t) {
    return t == SourceTier::trusted ? "trusted" : "general";
}

struct Document {
    std::string doc_id;
    std::optional<std::string> url;
    std::optional<std::string> title;
    std::string content;
    SourceTier tier = SourceTier::general;
    std::optional<double> retrieval_score;
};

struct DomainLabel {
    std::string name;
};

inline constexpr const char* kGeneralLabel = "general";

// Routing flags for the search escalation loop. Reachable states, in
// execution order: (F,F) -> (T,F) -> (T,T). (F,T) never occurs.
struct TierState {
    bool trusted_done = false;
    bool general_done = false;
    friend bool operator==(const TierState&, const TierState&) = default;
};

enum class TierAction { do_trusted, do_general, exhausted };

inline TierAction advance_tier(TierState state) {
    if (!state.trusted_done && state.general_done) throw InvalidTierState();
    if (!state.trusted_done) return TierAction::do_trusted;
    if (!state.general_done) return TierAction::do_general;
    return TierAction::exhausted;
}

enum class TraceStage {
    generate_init,
    extract_claims,
    check_constraints,
    score_intrinsic,
    detect_domain,
    search_trusted,
    search_general,
    grade_documents,
    regenerate,
    score_retrieved,
    apology,
    early_exit,
};

inline const char* to_string(TraceStage s) {
    switch (s) {
        case TraceStage::generate_init: return "generate_init";
        case TraceStage::extract_claims: return "extract_claims";
        case TraceStage::check_constraints: return "check_constraints";
        case TraceStage::score_intrinsic: return "score_intrinsic";
        case TraceStage::detect_domain: return "detect_domain";
        case TraceStage::search_trusted: return "search_trusted";
        case TraceStage::search_general: return "search_general";
        case TraceStage::grade_documents: return "grade_documents";
        case TraceStage::regenerate: return "regenerate";
        case TraceStage::score_retrieved: return "score_retrieved";
        case TraceStage::apology: return "apology";
        case TraceStage::early_exit: return "early_exit";
    }
    return "unknown";
}

struct TraceEvent {
    int seq = 0;
    TraceStage stage = TraceStage::generate_init;
    json payload;
    std::int64_t elapsed_ms = 0;
};

enum class OutcomeKind { intrinsic_answer, verified_rag_answer, apology };

inline const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::intrinsic_answer: return "intrinsic_answer";
        case OutcomeKind::verified_rag_answer: return "verified_rag_answer";
        case OutcomeKind::apology: return "apology";
    }
    return "unknown";
}

struct PipelineOutcome {
    OutcomeKind kind = OutcomeKind::apology;
    std::string answer_text;
    std::vector<AtomicClaim> claims;
    std::vector<ClaimVerdict> verdicts;
    std::optional<ConfidenceScore> final_score;
    TierState tier_state;
    std::vector<TraceEvent> trace;
};

// ---- score arithmetic -------------------------------------------------

// Half-up rounding of a non-negative ratio expressed as a percent.
inline int round_percent(double numerator, double denominator) {
    return static_cast<int>(std::llround(100.0 * numerator / denominator));
}

// Ratio of supported claims as an integer percent. Both `unsupported`
// and `contradicted` count against the score.
inline ConfidenceScore aggregate_verdicts(const std::vector<ClaimVerdict>& verdicts) {
    if (verdicts.empty()) throw EmptyClaimSet("aggregate_verdicts: empty verdict list");
    const auto supported = std::count_if(verdicts.begin(), verdicts.end(), [](const ClaimVerdict& v) {
        return v.status == VerdictStatus::supported;
    });
    return ConfidenceScore::make(round_percent(static_cast<double>(supported),
                                               static_cast<double>(verdicts.size())));
}

// (groundedness, hallucination) percentages; nullopt for the 0/0 case
// (refusal rows carry no claims and score not-applicable, never 0/100).
inline std::optional<std::pair<double, double>>
groundedness_and_hallucination(const std::vector<ClaimVerdict>& verdicts) {
    if (verdicts.empty()) return std::nullopt;
    const auto supported = std::count_if(verdicts.begin(), verdicts.end(), [](const ClaimVerdict& v) {
        return v.status == VerdictStatus::supported;
    });
    const double g = 100.0 * static_cast<double>(supported) / static_cast<double>(verdicts.size());
    return std::make_pair(g, 100.0 - g);
}

}  // namespace tv
