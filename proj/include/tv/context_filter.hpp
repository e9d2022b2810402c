#pragma once

// Phase III: Refined Context Filtering. Each retrieved document gets an
// independent binary relevance grade; irrelevant or ungradable documents
// never reach the generation stage.

#include <string>
#include <utility>
#include <vector>

#include "tv/backends.hpp"
#include "tv/core.hpp"
#include "tv/prompts.hpp"

namespace tv {

struct GradedDocument {
    Document document;
    bool relevant = false;
    std::string rationale;  // non-empty when relevant=false
};

struct GradingResult {
    std::vector<Document> kept;          // input order preserved
    std::vector<GradedDocument> graded;  // one grade per input document
};

inline GradingResult grade_documents(GeneratorPort& generator, const std::vector<Document>& docs,
                                     const std::string& question, int per_doc_char_budget = 8000) {
    GradingResult result;
    for (const auto& doc : docs) {
        GeneratorRequest req;
        req.stage = "grade_documents";
        req.user_prompt = prompts::grade_document_prompt(doc, question, per_doc_char_budget);
        req.output_schema = prompts::doc_grade_schema();
        GradedDocument g{doc, false, ""};
        try {
            const json structured = *generator.generate(req).structured;
            g.relevant = structured.at("relevant").get<bool>();
            g.rationale = structured.value("rationale", "");
            if (!g.relevant && g.rationale.empty()) g.rationale = "graded irrelevant";
        } catch (const BackendException& e) {
            if (e.error.kind != BackendErrorKind::schema_invalid_after_retries) throw;
            g.relevant = false;  // fail-closed: ungradable content is discarded
            g.rationale = "grading failed";
        }
        if (g.relevant) result.kept.push_back(doc);
        result.graded.push_back(std::move(g));
    }
    return result;
}

}  // namespace tv
