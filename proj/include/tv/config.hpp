#pragma once

// Application configuration: JSON config file, TV_* environment variables,
// and CLI flags, with precedence CLI flag > env var > config file > default.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "tv/fixture_backends.hpp"
#include "tv/http_backends.hpp"
#include "tv/pipeline.hpp"

namespace tv {

struct PortConfig {
    std::string mode = "fixture";  // "fixture" or "http"
    std::string base_url;
    std::string model;
};

struct AppConfig {
    PipelineConfig pipeline;
    PortConfig generator{"fixture", "", "fixture-generator"};
    PortConfig search;
    PortConfig judge{"fixture", "", "fixture-judge"};
    std::string fixtures_path;  // fixture file or directory
    int workers = 1;
    std::string trace_dir = "traces";
    std::string report_dir = "reports";
    int trace_store_cap = 256;
    std::string bind = "127.0.0.1:8177";

    void apply_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file: " + path.string());
        const json j = json::parse(in);
        if (j.contains("tau")) pipeline.tau = j.at("tau").get<int>();
        if (j.contains("max_results_per_tier"))
            pipeline.max_results_per_tier = j.at("max_results_per_tier").get<int>();
        if (j.contains("per_doc_char_budget"))
            pipeline.per_doc_char_budget = j.at("per_doc_char_budget").get<int>();
        if (j.contains("judge_order_seed"))
            pipeline.judge_order_seed = j.at("judge_order_seed").get<std::uint64_t>();
        if (j.contains("deterministic_timing"))
            pipeline.deterministic_timing = j.at("deterministic_timing").get<bool>();
        if (j.contains("registry")) {
            const json& r = j.at("registry");
            if (r.contains("entries")) {
                pipeline.registry.entries.clear();
                for (const auto& [label, hosts] : r.at("entries").items())
                    pipeline.registry.entries[label] = hosts.get<std::vector<std::string>>();
            }
            if (r.contains("default_label"))
                pipeline.registry.default_label = r.at("default_label").get<std::string>();
        }
        auto port = [&](const char* key, PortConfig& p) {
            if (!j.contains(key)) return;
            const json& pj = j.at(key);
            if (pj.contains("mode")) p.mode = pj.at("mode").get<std::string>();
            if (pj.contains("base_url")) p.base_url = pj.at("base_url").get<std::string>();
            if (pj.contains("model")) p.model = pj.at("model").get<std::string>();
        };
        port("generator", generator);
        port("search", search);
        port("judge", judge);
        if (j.contains("fixtures")) fixtures_path = j.at("fixtures").get<std::string>();
        if (j.contains("workers")) workers = j.at("workers").get<int>();
        if (j.contains("trace_dir")) trace_dir = j.at("trace_dir").get<std::string>();
        if (j.contains("report_dir")) report_dir = j.at("report_dir").get<std::string>();
        if (j.contains("trace_store_cap")) trace_store_cap = j.at("trace_store_cap").get<int>();
        if (j.contains("bind")) bind = j.at("bind").get<std::string>();
    }

    void apply_env() {
        if (auto v = env_value("TV_TAU")) pipeline.tau = std::stoi(*v);
        if (auto v = env_value("TV_WORKERS")) workers = std::stoi(*v);
        if (auto v = env_value("TV_FIXTURES")) fixtures_path = *v;
    }

    void validate() const {
        pipeline.validate();
        if (workers < 1) throw ValidationError("workers must be >= 1");
        for (const auto* p : {&generator, &search, &judge}) {
            if (p->mode != "fixture" && p->mode != "http")
                throw ValidationError("port mode must be 'fixture' or 'http', got '" + p->mode + "'");
            if (p->mode == "http" && p->base_url.empty())
                throw ValidationError("http port requires a base_url");
            if (p->mode == "fixture" && fixtures_path.empty())
                throw ValidationError("fixture port requires a fixtures path");
        }
    }

    BackendPorts make_ports() const {
        validate();
        FixtureScript script;
        if (generator.mode == "fixture" || search.mode == "fixture" || judge.mode == "fixture")
            script = FixtureScript::from_path(fixtures_path);
        BackendPorts ports;
        ports.generator = generator.mode == "fixture"
                              ? std::shared_ptr<GeneratorPort>(
                                    std::make_shared<FixtureGenerator>(script.generator_rules))
                              : std::make_shared<HttpGenerator>(generator.base_url, generator.model);
        ports.search = search.mode == "fixture"
                           ? std::shared_ptr<SearchPort>(
                                 std::make_shared<FixtureSearch>(script.search_worlds))
                           : std::make_shared<HttpSearch>(search.base_url);
        ports.judge = judge.mode == "fixture"
                          ? std::shared_ptr<JudgePort>(std::make_shared<FixtureJudge>(script.judge_rules))
                          : std::make_shared<HttpJudge>(judge.base_url, judge.model);
        return ports;
    }

    // Precedence: CLI flags are applied by the CLI layer after this returns.
    static AppConfig load(const std::optional<std::string>& config_flag) {
        AppConfig cfg;
        std::optional<std::string> path = config_flag;
        if (!path) path = env_value("TV_CONFIG");
        if (path) cfg.apply_file(*path);
        cfg.apply_env();
        return cfg;
    }
};

}  // namespace tv
