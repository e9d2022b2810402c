#pragma once

// Prompt templates and the structured-output schemas paired with them.
// Template ids are recorded in trace payloads so a trace pins the exact
// prompt version that produced it.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tv/backends.hpp"
#include "tv/core.hpp"

namespace tv::prompts {

inline constexpr const char* kExtractClaimsTemplate = "extract_claims.v1";
inline constexpr const char* kCheckConstraintsTemplate = "check_constraints.v1";
inline constexpr const char* kScoreIntrinsicTemplate = "score_intrinsic.v1";
inline constexpr const char* kScoreRetrievedTemplate = "score_retrieved.v1";
inline constexpr const char* kDetectDomainTemplate = "detect_domain.v1";
inline constexpr const char* kGradeDocumentTemplate = "grade_document.v1";
inline constexpr const char* kRegenerateTemplate = "regenerate.v1";
inline constexpr const char* kJudgeTemplate = "judge_pairwise.v1";

// ---- schemas ----------------------------------------------------------

inline OutputSchema claim_extraction_schema() {
    return {"claim_extraction",
            "Reply with JSON: {\"is_refusal\": bool, \"reason\": string|null, "
            "\"claims\": [string, ...]}. Each claim must be one self-contained "
            "declarative sentence. A refusal has an empty claims list.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object()) return "expected a JSON object";
                if (!j.contains("is_refusal") || !j.at("is_refusal").is_boolean())
                    return "missing boolean field is_refusal";
                if (!j.contains("claims") || !j.at("claims").is_array())
                    return "missing array field claims";
                for (const auto& c : j.at("claims"))
                    if (!c.is_string() || c.get<std::string>().empty())
                        return "claims must be non-empty strings";
                if (!j.at("is_refusal").get<bool>() && j.at("claims").empty())
                    return "non-refusal answers must yield at least one claim";
                return std::nullopt;
            }};
}

inline OutputSchema constraint_check_schema() {
    return {"constraint_check",
            "Reply with JSON: {\"violations\": [{\"claim_index\": int, "
            "\"kind\": \"temporal\"|\"numerical\"|\"entity\"|\"premise\"|\"other\", "
            "\"description\": string}, ...]}. Empty list means no violations.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("violations") || !j.at("violations").is_array())
                    return "expected {\"violations\": [...]}";
                for (const auto& v : j.at("violations")) {
                    if (!v.is_object() || !v.contains("claim_index") ||
                        !v.at("claim_index").is_number_integer())
                        return "violation needs integer claim_index";
                    if (!v.contains("kind") || !v.at("kind").is_string() ||
                        !violation_kind_from(v.at("kind").get<std::string>()))
                        return "violation kind must be one of temporal/numerical/entity/premise/other";
                    if (!v.contains("description") || !v.at("description").is_string())
                        return "violation needs string description";
                }
                return std::nullopt;
            }};
}

inline OutputSchema claim_confidence_schema() {
    return {"claim_confidence",
            "Reply with JSON: {\"confidence\": int} where confidence is your "
            "0-100 certainty that the claim is factually correct.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("confidence") ||
                    !j.at("confidence").is_number_integer())
                    return "expected {\"confidence\": int}";
                const int c = j.at("confidence").get<int>();
                if (c < 0 || c > 100) return "confidence must be in [0,100]";
                return std::nullopt;
            }};
}

inline OutputSchema claim_verdict_schema() {
    return {"claim_verdict",
            "Reply with JSON: {\"status\": \"supported\"|\"unsupported\"|\"contradicted\", "
            "\"evidence_doc_ids\": [string, ...]}. evidence_doc_ids must list the ids of "
            "the documents that support the claim; required non-empty when status is supported.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("status") || !j.at("status").is_string())
                    return "expected {\"status\": ..., \"evidence_doc_ids\": [...]}";
                const auto s = j.at("status").get<std::string>();
                if (s != "supported" && s != "unsupported" && s != "contradicted")
                    return "status must be supported/unsupported/contradicted";
                if (!j.contains("evidence_doc_ids") || !j.at("evidence_doc_ids").is_array())
                    return "missing array field evidence_doc_ids";
                if (s == "supported" && j.at("evidence_doc_ids").empty())
                    return "supported claims must cite at least one evidence_doc_id";
                return std::nullopt;
            }};
}

inline OutputSchema domain_label_schema(const std::vector<std::string>& labels) {
    std::ostringstream opts;
    for (size_t i = 0; i < labels.size(); ++i) opts << (i ? ", " : "") << '"' << labels[i] << '"';
    return {"domain_label",
            "Reply with JSON: {\"label\": string} where label is exactly one of: " + opts.str() + ".",
            [labels](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("label") || !j.at("label").is_string())
                    return "expected {\"label\": string}";
                const auto l = j.at("label").get<std::string>();
                if (std::find(labels.begin(), labels.end(), l) == labels.end())
                    return "label '" + l + "' is not in the configured set";
                return std::nullopt;
            }};
}

inline OutputSchema doc_grade_schema() {
    return {"doc_grade",
            "Reply with JSON: {\"relevant\": bool, \"rationale\": string}. "
            "rationale is required when relevant is false.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("relevant") || !j.at("relevant").is_boolean())
                    return "expected {\"relevant\": bool, \"rationale\": string}";
                const bool relevant = j.at("relevant").get<bool>();
                const bool has_rationale =
                    j.contains("rationale") && j.at("rationale").is_string() &&
                    !j.at("rationale").get<std::string>().empty();
                if (!relevant && !has_rationale)
                    return "irrelevant grades must carry a non-empty rationale";
                return std::nullopt;
            }};
}

inline OutputSchema judge_verdict_schema() {
    return {"judge_verdict",
            "Reply with JSON: {\"verdict\": \"a_wins\"|\"b_wins\"|\"tie\"}.",
            [](const json& j) -> std::optional<std::string> {
                if (!j.is_object() || !j.contains("verdict") || !j.at("verdict").is_string())
                    return "expected {\"verdict\": ...}";
                const auto v = j.at("verdict").get<std::string>();
                if (v != "a_wins" && v != "b_wins" && v != "tie")
                    return "verdict must be a_wins/b_wins/tie";
                return std::nullopt;
            }};
}

// ---- prompt builders ---------------------------------------------------

inline std::string extract_claims_prompt(const std::string& answer, const std::string& question) {
    return "Decompose the answer below into discrete, independently verifiable atomic "
           "claims. Resolve pronouns and implicit references against the question so "
           "every claim stands alone. If the answer is a refusal or says it does not "
           "know, mark it as a refusal with no claims.\n\nQuestion: " + question +
           "\n\nAnswer: " + answer;
}

inline std::string check_constraints_prompt(const std::vector<AtomicClaim>& claims,
                                            const std::string& question) {
    std::ostringstream os;
    os << "Check each claim against the constraints stated in the question: date "
          "ranges, units, requested entity type, counts, and premises. Report every "
          "violation.\n\nQuestion: " << question << "\n\nClaims:\n";
    for (const auto& c : claims) os << "  [" << c.index << "] " << c.text << "\n";
    return os.str();
}

inline std::string score_intrinsic_prompt(const AtomicClaim& claim) {
    return "Using only your internal knowledge and no external sources, rate your "
           "confidence that the following claim is factually correct.\n\nClaim: " +
           claim.text;
}

inline std::string evidence_block(const std::vector<Document>& evidence, int per_doc_char_budget) {
    // Most-relevant-first, each doc under an id header, content truncated to
    // the per-document budget. Deterministic for a fixed input.
    std::vector<const Document*> ordered;
    for (const auto& d : evidence) ordered.push_back(&d);
    std::stable_sort(ordered.begin(), ordered.end(), [](const Document* a, const Document* b) {
        return a->retrieval_score.value_or(0.0) > b->retrieval_score.value_or(0.0);
    });
    std::ostringstream os;
    for (const auto* d : ordered) {
        os << "=== Document " << d->doc_id;
        if (d->title) os << " (" << *d->title << ")";
        os << " ===\n"
           << d->content.substr(0, static_cast<size_t>(per_doc_char_budget)) << "\n";
    }
    return os.str();
}

inline std::string score_retrieved_prompt(const AtomicClaim& claim,
                                          const std::vector<Document>& evidence,
                                          int per_doc_char_budget) {
    return "Cross-reference the claim against the evidence documents below. Answer "
           "whether the evidence supports it, fails to mention it, or contradicts "
           "it, citing the supporting document ids.\n\nClaim: " + claim.text +
           "\n\nEvidence:\n" + evidence_block(evidence, per_doc_char_budget);
}

inline std::string detect_domain_prompt(const std::string& question,
                                        const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "Classify the question into exactly one of these domains: ";
    for (size_t i = 0; i < labels.size(); ++i) os << (i ? ", " : "") << labels[i];
    os << ". Choose \"" << kGeneralLabel << "\" when unsure.\n\nQuestion: " << question;
    return os.str();
}

inline std::string grade_document_prompt(const Document& doc, const std::string& question,
                                         int per_doc_char_budget) {
    return "Grade whether the document below is relevant to answering the question. "
           "Judge topical relevance only, not truth.\n\nQuestion: " + question +
           "\n\nDocument " + doc.doc_id + ":\n" +
           doc.content.substr(0, static_cast<size_t>(per_doc_char_budget));
}

inline std::string regenerate_prompt(const std::string& question,
                                     const std::vector<Document>& evidence,
                                     int per_doc_char_budget) {
    return "Answer the question strictly from the evidence documents below. Do not "
           "use outside knowledge. If the evidence is insufficient to answer, say "
           "so plainly instead of guessing.\n\nQuestion: " + question +
           "\n\nEvidence:\n" + evidence_block(evidence, per_doc_char_budget);
}

inline std::string judge_prompt(const std::string& question, const std::string& answer_a,
                                const std::string& answer_b,
                                const std::optional<std::string>& reference) {
    std::string p =
        "Compare the two answers to the question. Prefer factual accuracy first, "
        "then usefulness and concision. A correct refusal beats a confident "
        "fabrication.\n\nQuestion: " + question;
    if (reference) p += "\n\nReference answer: " + *reference;
    p += "\n\nAnswer A: " + answer_a + "\n\nAnswer B: " + answer_b;
    return p;
}

}  // namespace tv::prompts
