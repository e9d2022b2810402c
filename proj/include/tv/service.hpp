#pragma once

// The verified-answer HTTP service: POST /v1/answer, GET /v1/trace/{id},
// GET /healthz. Each request executes an independent pipeline run; traces
// live in a capped in-memory LRU store with optional directory spill.

#include <atomic>
#include <list>
#include <mutex>
#include <sstream>
#include <string>
#include <unordered_map>

#include "tv/config.hpp"
#include "tv/eval.hpp"
#include "tv/pipeline.hpp"
#include "httplib.h"

namespace tv {

class TraceStore {
public:
    explicit TraceStore(size_t cap, std::string spill_dir = "")
        : cap_(cap), spill_dir_(std::move(spill_dir)) {}

    void put(const std::string& id, std::string bytes) {
        std::lock_guard lock(mu_);
        lru_.emplace_front(id, std::move(bytes));
        index_[id] = lru_.begin();
        if (lru_.size() > cap_) {
            const auto& victim = lru_.back();
            if (!spill_dir_.empty()) spill(victim.first, victim.second);
            index_.erase(victim.first);
            lru_.pop_back();
        }
    }

    std::optional<std::string> get(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = index_.find(id);
        if (it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);  // refresh
            return it->second->second;
        }
        if (!spill_dir_.empty()) {
            std::ifstream in(std::filesystem::path(spill_dir_) / (id + ".jsonl"));
            if (in) {
                std::ostringstream os;
                os << in.rdbuf();
                return os.str();
            }
        }
        return std::nullopt;
    }

private:
    void spill(const std::string& id, const std::string& bytes) {
        std::error_code ec;
        std::filesystem::create_directories(spill_dir_, ec);
        std::ofstream out(std::filesystem::path(spill_dir_) / (id + ".jsonl"), std::ios::binary);
        out << bytes;
    }

    size_t cap_;
    std::string spill_dir_;
    std::list<std::pair<std::string, std::string>> lru_;
    std::unordered_map<std::string, std::list<std::pair<std::string, std::string>>::iterator> index_;
    std::mutex mu_;
};

inline json outcome_to_json(const PipelineOutcome& o, const std::string& trace_id) {
    json claims = json::array();
    for (const auto& c : o.claims) claims.push_back({{"index", c.index}, {"text", c.text}});
    json verdicts = json::array();
    for (const auto& v : o.verdicts) {
        json vj = {{"claim_index", v.claim.index}, {"status", to_string(v.status)}};
        if (v.self_confidence) vj["self_confidence"] = v.self_confidence->value();
        vj["evidence_doc_ids"] = v.evidence_doc_ids;
        verdicts.push_back(std::move(vj));
    }
    json out = {{"answer", o.answer_text},
                {"kind", to_string(o.kind)},
                {"claims", std::move(claims)},
                {"verdicts", std::move(verdicts)},
                {"trace_id", trace_id}};
    if (o.final_score) out["score"] = o.final_score->value();
    return out;
}

class AnswerService {
public:
    AnswerService(AppConfig config, BackendPorts ports)
        : config_(std::move(config)),
          ports_(std::move(ports)),
          store_(static_cast<size_t>(config_.trace_store_cap), config_.trace_dir) {
        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"status\":\"ok\"}", "application/json");
        });
        server_.Post("/v1/answer", [this](const httplib::Request& req, httplib::Response& res) {
            handle_answer(req, res);
        });
        server_.Get("/v1/trace/:id", [this](const httplib::Request& req, httplib::Response& res) {
            const auto bytes = store_.get(req.path_params.at("id"));
            if (!bytes) {
                res.status = 404;
                res.set_content("{\"error\":\"unknown trace id\"}", "application/json");
                return;
            }
            res.set_content(*bytes, "application/x-ndjson");
        });
    }

    // Blocks until stop() is called from another thread.
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }
    bool bind_and_listen_ready(const std::string& host, int port) {
        return server_.bind_to_port(host, port);
    }
    void stop() { server_.stop(); }
    httplib::Server& raw_server() { return server_; }

private:
    void handle_answer(const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("question") ||
            !body.at("question").is_string() ||
            body.at("question").get<std::string>().find_first_not_of(" \t\r\n") ==
                std::string::npos) {
            res.status = 400;
            res.set_content("{\"error\":\"body must be {\\\"question\\\": non-empty string}\"}",
                            "application/json");
            return;
        }
        const std::string trace_id = "t" + std::to_string(next_id_.fetch_add(1));
        QueryCase query_case{trace_id, body.at("question").get<std::string>(), {}, {}, {}};
        const RunResult result = run_query(query_case, config_.pipeline, ports_);
        std::ostringstream trace_bytes;
        write_trace(result, trace_bytes, trace_id);
        store_.put(trace_id, trace_bytes.str());
        if (!result.is_valid()) {
            res.status = 502;
            json err = {{"kind", "RunInvalid"},
                        {"error_kind", to_string(result.invalid->error.kind)},
                        {"detail", result.invalid->error.detail},
                        {"trace_id", trace_id}};
            res.set_content(err.dump(), "application/json");
            return;
        }
        res.set_content(outcome_to_json(*result.outcome, trace_id).dump(), "application/json");
    }

    AppConfig config_;
    BackendPorts ports_;
    TraceStore store_;
    httplib::Server server_;
    std::atomic<std::uint64_t> next_id_{1};
};

}  // namespace tv
