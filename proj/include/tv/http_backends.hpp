#pragma once

// Live adapters. The generator speaks an OpenAI-style chat-completion wire
// contract; search is a plain JSON POST; the judge rides on a chat endpoint
// of its own. Endpoints and model names are configuration.

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tv/backends.hpp"
#include "tv/prompts.hpp"
#include "httplib.h"

namespace tv {

inline std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

namespace detail {

inline BackendError http_error(const httplib::Result& res, const std::string& what) {
    if (!res)
        return {BackendErrorKind::transport, what + ": " + httplib::to_string(res.error()), true};
    if (res->status == 429 || res->status == 432)
        return {BackendErrorKind::quota_exhausted,
                what + ": HTTP " + std::to_string(res->status), false};
    return {BackendErrorKind::transport, what + ": HTTP " + std::to_string(res->status), true};
}

}  // namespace detail

class HttpGenerator : public GeneratorPort {
public:
    HttpGenerator(std::string base_url, std::string model,
                  std::optional<std::string> api_key = env_value("TV_GENERATOR_API_KEY"))
        : base_url_(std::move(base_url)), model_(std::move(model)), api_key_(std::move(api_key)) {}

    GeneratorResponse complete(const GeneratorRequest& req) override {
        json body = {{"model", model_},
                     {"messages", json::array()},
                     {"temperature", req.temperature}};
        if (!req.system_prompt.empty())
            body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
        std::string user = req.user_prompt;
        if (req.output_schema) {
            user += "\n\n" + req.output_schema->instructions;
            body["response_format"] = {{"type", "json_object"}};
        }
        body["messages"].push_back({{"role", "user"}, {"content", user}});

        httplib::Client client(base_url_);
        httplib::Headers headers;
        if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw BackendException(detail::http_error(res, "generator"));
        const json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j.at("choices").empty())
            throw BackendException({BackendErrorKind::empty_response,
                                    "generator: malformed completion body", false});
        return {j.at("choices").at(0).at("message").at("content").get<std::string>(),
                std::nullopt, j.value("model", model_), 1};
    }

private:
    std::string base_url_;
    std::string model_;
    std::optional<std::string> api_key_;
};

// POST {query, include_domains, max_results} -> {results: [{url, title,
// content, score}]}. Document ids are derived from the result position.
class HttpSearch : public SearchPort {
public:
    explicit HttpSearch(std::string base_url,
                        std::optional<std::string> api_key = env_value("TV_SEARCH_API_KEY"))
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

    std::vector<Document> search(const SearchRequest& req) override {
        if (req.query.empty()) throw ValidationError("search: empty query");
        json body = {{"query", req.query}, {"max_results", req.max_results}};
        if (!req.site_allowlist.empty()) body["include_domains"] = req.site_allowlist;
        if (api_key_) body["api_key"] = *api_key_;

        httplib::Client client(base_url_);
        auto res = client.Post("/search", body.dump(), "application/json");
        if (!res || res->status != 200) throw BackendException(detail::http_error(res, "search"));
        const json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded())
            throw BackendException({BackendErrorKind::transport, "search: malformed body", false});
        std::vector<Document> docs;
        int n = 0;
        for (const auto& r : j.value("results", json::array())) {
            Document d;
            d.doc_id = "web-" + std::to_string(++n);
            if (r.contains("url")) d.url = r.at("url").get<std::string>();
            if (r.contains("title")) d.title = r.at("title").get<std::string>();
            d.content = r.value("content", "");
            if (r.contains("score")) d.retrieval_score = r.at("score").get<double>();
            docs.push_back(std::move(d));
        }
        return enforce_search_contract(std::move(docs), req.max_results);
    }

private:
    std::string base_url_;
    std::optional<std::string> api_key_;
};

// The judge is its own chat endpoint/model; the comparison prompt asks for
// factual accuracy first, then usefulness and concision.
class HttpJudge : public JudgePort {
public:
    HttpJudge(std::string base_url, std::string model)
        : generator_(std::make_unique<HttpGenerator>(std::move(base_url), std::move(model))) {}

    JudgeVerdict judge_compare(const std::string& question, const std::string& answer_a,
                               const std::string& answer_b,
                               const std::optional<std::string>& reference) override {
        if (answer_a.empty() || answer_b.empty())
            throw ValidationError("judge_compare: empty answer");
        GeneratorRequest req;
        req.stage = "judge";
        req.user_prompt = prompts::judge_prompt(question, answer_a, answer_b, reference);
        req.output_schema = prompts::judge_verdict_schema();
        const json structured = *generator_->generate(req).structured;
        const auto v = structured.at("verdict").get<std::string>();
        return v == "a_wins" ? JudgeVerdict::a_wins
               : v == "b_wins" ? JudgeVerdict::b_wins
                               : JudgeVerdict::tie;
    }

private:
    std::unique_ptr<HttpGenerator> generator_;
};

}  // namespace tv
