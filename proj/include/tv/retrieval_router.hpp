#pragma once

// Phase II: domain detection and the trusted -> general search escalation.

#include <map>
#include <string>
#include <vector>

#include "tv/backends.hpp"
#include "tv/core.hpp"
#include "tv/prompts.hpp"

namespace tv {

struct TrustedSourceRegistry {
    std::map<std::string, std::vector<std::string>> entries;  // label -> host patterns
    std::string default_label = kGeneralLabel;

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries) out.push_back(k);
        if (entries.find(kGeneralLabel) == entries.end()) out.push_back(kGeneralLabel);
        return out;
    }

    void validate() const {
        for (const auto& [label, hosts] : entries)
            if (hosts.empty())
                throw ValidationError("registry label '" + label + "' has no host patterns");
        if (default_label != kGeneralLabel && entries.find(default_label) == entries.end())
            throw ValidationError("registry default_label '" + default_label + "' not in map");
    }

    static TrustedSourceRegistry default_registry() {
        TrustedSourceRegistry r;
        r.entries = {
            {"medical", {"nih.gov", "who.int", "cdc.gov", "nlm.nih.gov"}},
            {"legal", {"law.cornell.edu", "supremecourt.gov", "eur-lex.europa.eu"}},
            {"finance", {"sec.gov", "federalreserve.gov", "imf.org"}},
            {"science", {"nature.com", "science.org", "arxiv.org"}},
        };
        return r;
    }
};

// Closed-set classification; any failure or out-of-set label resolves to
// the default label. Detection must never abort the pipeline.
inline DomainLabel detect_domain(GeneratorPort& generator, const std::string& question,
                                 const TrustedSourceRegistry& registry) {
    if (question.empty()) throw ValidationError("detect_domain: empty question");
    const auto labels = registry.labels();
    GeneratorRequest req;
    req.stage = "detect_domain";
    req.user_prompt = prompts::detect_domain_prompt(question, labels);
    req.output_schema = prompts::domain_label_schema(labels);
    try {
        const json structured = *generator.generate(req).structured;
        return {structured.at("label").get<std::string>()};
    } catch (const BackendException& e) {
        if (e.error.kind == BackendErrorKind::schema_invalid_after_retries)
            return {registry.default_label};
        throw;
    }
}

// Allowlisted search against the registry's hosts for the domain; all hits
// tagged trusted. Caller is responsible for the registry-miss skip rule
// (a domain with no configured sources never reaches this function).
inline std::vector<Document> trusted_search(SearchPort& search_port, const std::string& question,
                                            const DomainLabel& domain,
                                            const TrustedSourceRegistry& registry,
                                            int max_results = 5) {
    const auto it = registry.entries.find(domain.name);
    if (it == registry.entries.end())
        throw ValidationError("trusted_search: domain '" + domain.name + "' not in registry");
    SearchRequest req{question, it->second, max_results};
    auto docs = search_port.search(req);
    for (auto& d : docs) d.tier = SourceTier::trusted;
    return docs;
}

inline std::vector<Document> general_search(SearchPort& search_port, const std::string& question,
                                            int max_results = 5) {
    SearchRequest req{question, {}, max_results};
    auto docs = search_port.search(req);
    for (auto& d : docs) d.tier = SourceTier::general;
    return docs;
}

}  // namespace tv
