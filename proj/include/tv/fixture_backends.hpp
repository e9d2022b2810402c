#pragma once

// Scripted offline adapters. A fixture file is one JSON document with
// `generator_rules`, `search_worlds` and `judge_rules` sections; a single
// file drives a full multi-call pipeline run. See docs/fixtures.md.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "tv/backends.hpp"

namespace tv {

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool contains_ci(const std::string& haystack, const std::string& needle) {
    return lowercase(haystack).find(lowercase(needle)) != std::string::npos;
}

struct FixtureScript {
    json generator_rules = json::array();
    json search_worlds = json::object();
    json judge_rules = json::array();

    static FixtureScript from_json(const json& j) {
        FixtureScript s;
        if (j.contains("generator_rules")) s.generator_rules = j.at("generator_rules");
        if (j.contains("search_worlds")) s.search_worlds = j.at("search_worlds");
        if (j.contains("judge_rules")) s.judge_rules = j.at("judge_rules");
        return s;
    }

    static FixtureScript from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open fixture file: " + path.string());
        return from_json(json::parse(in));
    }

    // Merges every *.json under `dir` (sorted by filename for determinism).
    static FixtureScript from_dir(const std::filesystem::path& dir) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        FixtureScript merged;
        for (const auto& f : files) {
            FixtureScript s = from_file(f);
            for (auto& r : s.generator_rules) merged.generator_rules.push_back(r);
            for (auto& [k, v] : s.search_worlds.items()) merged.search_worlds[k] = v;
            for (auto& r : s.judge_rules) merged.judge_rules.push_back(r);
        }
        return merged;
    }

    static FixtureScript from_path(const std::filesystem::path& p) {
        return std::filesystem::is_directory(p) ? from_dir(p) : from_file(p);
    }
};

// Rules are matched in order on (stage, prompt substring); a rule with an
// integer `uses` is consumed and skipped once exhausted, which is how
// "malformed twice, then valid" retry scripts are written.
class FixtureGenerator : public GeneratorPort {
public:
    explicit FixtureGenerator(json rules, std::string model_id = "fixture-generator")
        : model_id_(std::move(model_id)) {
        for (auto& r : rules) rules_.push_back({r, r.value("uses", -1)});
    }

    GeneratorResponse complete(const GeneratorRequest& req) override {
        std::lock_guard lock(mu_);
        for (auto& [rule, uses_left] : rules_) {
            if (uses_left == 0) continue;
            if (rule.contains("stage") && rule.at("stage").get<std::string>() != req.stage) continue;
            if (rule.contains("prompt_contains") &&
                !contains_ci(req.user_prompt, rule.at("prompt_contains").get<std::string>()))
                continue;
            if (uses_left > 0) --uses_left;
            if (rule.contains("fail")) {
                const auto kind = rule.at("fail").get<std::string>();
                throw BackendException({kind == "quota_exhausted" ? BackendErrorKind::quota_exhausted
                                                                  : BackendErrorKind::transport,
                                        "fixture-scripted generator failure", false});
            }
            const json& resp = rule.at("response");
            return {resp.is_string() ? resp.get<std::string>() : resp.dump(), std::nullopt,
                    model_id_, 1};
        }
        throw BackendException({BackendErrorKind::empty_response,
                                "no fixture generator rule matched stage '" + req.stage +
                                    "' prompt: " + req.user_prompt.substr(0, 120),
                                false});
    }

private:
    struct Entry {
        json rule;
        int uses_left;  // -1 = unlimited
    };
    std::string model_id_;
    std::vector<Entry> rules_;
    std::mutex mu_;
};

// Two worlds: requests carrying a site allowlist hit the "trusted" world,
// unrestricted requests hit "general". World docs may carry a `matches`
// substring the query must contain, and a world may script a failure at
// call #N (`fail_at_call`, `fail_kind`).
class FixtureSearch : public SearchPort {
public:
    explicit FixtureSearch(json worlds) : worlds_(std::move(worlds)) {}

    std::vector<Document> search(const SearchRequest& req) override {
        if (req.query.empty()) throw ValidationError("search: empty query");
        const std::string world_name = req.site_allowlist.empty() ? "general" : "trusted";
        std::lock_guard lock(mu_);
        if (!worlds_.contains(world_name)) return {};
        const json& world = worlds_.at(world_name);

        const int call = ++call_counts_[world_name];
        if (world.contains("fail_at_call") && call == world.at("fail_at_call").get<int>()) {
            const auto kind = world.value("fail_kind", "quota_exhausted");
            throw BackendException({kind == "transport" ? BackendErrorKind::transport
                                                        : BackendErrorKind::quota_exhausted,
                                    "fixture-scripted search failure at call " + std::to_string(call),
                                    false});
        }

        std::vector<Document> docs;
        for (const auto& d : world.value("documents", json::array())) {
            if (d.contains("matches") && !contains_ci(req.query, d.at("matches").get<std::string>()))
                continue;
            std::optional<std::string> url;
            if (d.contains("url")) url = d.at("url").get<std::string>();
            if (!req.site_allowlist.empty() && !host_allowed(url, req.site_allowlist)) continue;
            Document doc;
            doc.doc_id = d.at("doc_id").get<std::string>();
            doc.url = url;
            if (d.contains("title")) doc.title = d.at("title").get<std::string>();
            doc.content = d.at("content").get<std::string>();
            if (d.contains("score")) doc.retrieval_score = d.at("score").get<double>();
            docs.push_back(std::move(doc));
        }
        return enforce_search_contract(std::move(docs), req.max_results);
    }

    // Suffix match on the url host: pattern "nih.gov" admits "www.nih.gov".
    static bool host_allowed(const std::optional<std::string>& url,
                             const std::vector<std::string>& allowlist) {
        if (!url) return false;
        const std::string host = host_of(*url);
        for (const auto& raw : allowlist) {
            std::string pat = raw;
            if (pat.rfind("*.", 0) == 0) pat = pat.substr(2);
            if (host == pat) return true;
            if (host.size() > pat.size() &&
                host.compare(host.size() - pat.size(), pat.size(), pat) == 0 &&
                host[host.size() - pat.size() - 1] == '.')
                return true;
        }
        return false;
    }

    static std::string host_of(const std::string& url) {
        auto pos = url.find("://");
        std::string rest = pos == std::string::npos ? url : url.substr(pos + 3);
        auto end = rest.find_first_of("/?#");
        return lowercase(end == std::string::npos ? rest : rest.substr(0, end));
    }

private:
    json worlds_;
    std::map<std::string, int> call_counts_;
    std::mutex mu_;
};

// Rule fields: question_contains / answer_a_contains / answer_b_contains
// (all optional substring matchers) plus a required verdict. Identical
// answers tie unless a rule says otherwise first.
class FixtureJudge : public JudgePort {
public:
    explicit FixtureJudge(json rules) : rules_(std::move(rules)) {}

    JudgeVerdict judge_compare(const std::string& question, const std::string& answer_a,
                               const std::string& answer_b,
                               const std::optional<std::string>&) override {
        if (answer_a.empty() || answer_b.empty())
            throw ValidationError("judge_compare: empty answer");
        for (const auto& rule : rules_) {
            if (rule.contains("question_contains") &&
                !contains_ci(question, rule.at("question_contains").get<std::string>()))
                continue;
            if (rule.contains("answer_a_contains") &&
                !contains_ci(answer_a, rule.at("answer_a_contains").get<std::string>()))
                continue;
            if (rule.contains("answer_b_contains") &&
                !contains_ci(answer_b, rule.at("answer_b_contains").get<std::string>()))
                continue;
            if (rule.contains("fail"))
                throw BackendException({BackendErrorKind::transport,
                                        "fixture-scripted judge failure", false});
            // Order-invariant matcher: whichever presented answer contains the
            // marker wins, regardless of a/b position. Both or neither -> tie.
            if (rule.contains("winner_contains")) {
                const auto marker = rule.at("winner_contains").get<std::string>();
                const bool in_a = contains_ci(answer_a, marker);
                const bool in_b = contains_ci(answer_b, marker);
                if (in_a == in_b) return JudgeVerdict::tie;
                return in_a ? JudgeVerdict::a_wins : JudgeVerdict::b_wins;
            }
            return verdict_from(rule.at("verdict").get<std::string>());
        }
        return JudgeVerdict::tie;
    }

    static JudgeVerdict verdict_from(const std::string& s) {
        if (s == "a_wins") return JudgeVerdict::a_wins;
        if (s == "b_wins") return JudgeVerdict::b_wins;
        if (s == "tie") return JudgeVerdict::tie;
        throw ValidationError("unknown judge verdict in fixture: " + s);
    }

private:
    json rules_;
};

inline BackendPorts make_fixture_ports(const FixtureScript& script) {
    return {std::make_shared<FixtureGenerator>(script.generator_rules),
            std::make_shared<FixtureSearch>(script.search_worlds),
            std::make_shared<FixtureJudge>(script.judge_rules)};
}

}  // namespace tv
