#pragma once

// The three ports all model and retrieval I/O flows through: generator,
// search, judge. Adapters live in fixture_backends.hpp / http_backends.hpp.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tv/core.hpp"
#include "tv/errors.hpp"

namespace tv {

// Describes the structured output a generation call must produce. The
// validator returns an error message for invalid payloads, nullopt for
// valid ones; the retry loop feeds the message back into the prompt.
struct OutputSchema {
    std::string name;
    std::string instructions;  // appended to the prompt so the model knows the shape
    std::function<std::optional<std::string>(const json&)> validate;
};

struct GeneratorRequest {
    std::string stage;  // pipeline stage tag, used by fixture matching and traces
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    std::optional<OutputSchema> output_schema;
    int max_retries = 2;
};

struct GeneratorResponse {
    std::string text;
    std::optional<json> structured;  // present and schema-valid when a schema was supplied
    std::string model_id;
    int attempt = 1;
};

struct SearchRequest {
    std::string query;
    std::vector<std::string> site_allowlist;  // empty = unrestricted
    int max_results = 5;
};

enum class JudgeVerdict { a_wins, b_wins, tie };

inline const char* to_string(JudgeVerdict v) {
    switch (v) {
        case JudgeVerdict::a_wins: return "a_wins";
        case JudgeVerdict::b_wins: return "b_wins";
        case JudgeVerdict::tie: return "tie";
    }
    return "unknown";
}

class GeneratorPort {
public:
    virtual ~GeneratorPort() = default;

    // One completion round trip; no schema handling.
    virtual GeneratorResponse complete(const GeneratorRequest& req) = 0;

    // Schema-validated generation. Invalid structured output is re-prompted
    // with the validation error appended, up to max_retries extra attempts.
    GeneratorResponse generate(const GeneratorRequest& req) {
        if (req.user_prompt.empty()) throw ValidationError("generate: empty user prompt");
        GeneratorRequest attempt_req = req;
        std::string last_error;
        for (int attempt = 1; attempt <= req.max_retries + 1; ++attempt) {
            GeneratorResponse resp = complete(attempt_req);
            resp.attempt = attempt;
            if (resp.text.empty())
                throw BackendException({BackendErrorKind::empty_response,
                                        "generator returned empty text at stage " + req.stage, false});
            if (!req.output_schema) return resp;

            json parsed = json::parse(resp.text, nullptr, /*allow_exceptions=*/false);
            std::optional<std::string> err;
            if (parsed.is_discarded()) {
                err = "response is not valid JSON";
            } else {
                err = req.output_schema->validate(parsed);
            }
            if (!err) {
                resp.structured = std::move(parsed);
                return resp;
            }
            last_error = *err;
            attempt_req.user_prompt = req.user_prompt +
                "\n\nYour previous reply was rejected: " + last_error +
                "\nReply again with JSON matching the required schema exactly.";
        }
        throw BackendException({BackendErrorKind::schema_invalid_after_retries,
                                "stage " + req.stage + ": " + last_error, false});
    }
};

class SearchPort {
public:
    virtual ~SearchPort() = default;

    // Returns at most max_results documents, deduplicated by url, each with
    // non-empty content. An empty list is a valid result, not an error.
    virtual std::vector<Document> search(const SearchRequest& req) = 0;
};

class JudgePort {
public:
    virtual ~JudgePort() = default;

    // Pairwise comparison on factual accuracy first, then usefulness/concision.
    virtual JudgeVerdict judge_compare(const std::string& question,
                                       const std::string& answer_a,
                                       const std::string& answer_b,
                                       const std::optional<std::string>& reference) = 0;
};

struct BackendPorts {
    std::shared_ptr<GeneratorPort> generator;
    std::shared_ptr<SearchPort> search;
    std::shared_ptr<JudgePort> judge;
};

// Caps result count and drops url duplicates while keeping first occurrence.
// Shared post-condition enforcement for every search adapter.
inline std::vector<Document> enforce_search_contract(std::vector<Document> docs, int max_results) {
    std::vector<Document> out;
    std::vector<std::string> seen_urls;
    for (auto& d : docs) {
        if (d.content.empty()) continue;
        if (d.url) {
            if (std::find(seen_urls.begin(), seen_urls.end(), *d.url) != seen_urls.end()) continue;
            seen_urls.push_back(*d.url);
        }
        out.push_back(std::move(d));
        if (static_cast<int>(out.size()) == max_results) break;
    }
    return out;
}

}  // namespace tv
