#include "doctest.h"

#include <filesystem>
#include <thread>
#include <vector>

#include "tv/service.hpp"

using namespace tv;

namespace {

AppConfig service_config(const std::string& fixtures) {
    AppConfig cfg;
    cfg.fixtures_path = fixtures;
    cfg.trace_dir = (std::filesystem::temp_directory_path() / "tv_service_traces").string();
    return cfg;
}

struct RunningService {
    AnswerService service;
    std::thread thread;
    int port;

    explicit RunningService(AppConfig cfg)
        : service(cfg, cfg.make_ports()),
          port(service.raw_server().bind_to_any_port("127.0.0.1")) {
        thread = std::thread([this] { service.raw_server().listen_after_bind(); });
        service.raw_server().wait_until_ready();
    }

    ~RunningService() {
        service.stop();
        if (thread.joinable()) thread.join();
    }

    httplib::Client client() { return httplib::Client("http://127.0.0.1:" + std::to_string(port)); }
};

}  // namespace

TEST_CASE("healthz reports ok") {
    RunningService rs(service_config("assets/fixtures/conformance/01_early_exit.json"));
    auto res = rs.client().Get("/healthz");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("status") == "ok");
}

TEST_CASE("POST /v1/answer runs the pipeline and exposes the trace") {
    RunningService rs(service_config("assets/fixtures/conformance/01_early_exit.json"));
    auto client = rs.client();
    auto res = client.Post("/v1/answer", json{{"question", "What is the capital of France?"}}.dump(),
                           "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const json body = json::parse(res->body);
    CHECK(body.at("answer") == "Paris is the capital of France.");
    CHECK(body.at("kind") == "intrinsic_answer");
    CHECK(body.at("score") == 90);
    REQUIRE(body.at("claims").size() == 1);
    CHECK(body.at("claims")[0].at("text") == "Paris is the capital of France.");
    REQUIRE(body.at("verdicts").size() == 1);
    CHECK(body.at("verdicts")[0].at("status") == "supported");

    const std::string trace_id = body.at("trace_id").get<std::string>();
    auto trace = client.Get("/v1/trace/" + trace_id);
    REQUIRE(trace);
    CHECK(trace->status == 200);
    // NDJSON: every line parses, and the summary line carries the outcome.
    std::istringstream lines(trace->body);
    std::string line, last;
    int n = 0;
    while (std::getline(lines, line))
        if (!line.empty()) {
            CHECK_FALSE(json::parse(line, nullptr, false).is_discarded());
            last = line;
            ++n;
        }
    CHECK(n > 1);
    CHECK(json::parse(last).at("kind") == "intrinsic_answer");
}

TEST_CASE("malformed bodies get a 400") {
    RunningService rs(service_config("assets/fixtures/conformance/01_early_exit.json"));
    auto client = rs.client();
    for (const std::string body : {std::string("not json"), json{{"q", "x"}}.dump(),
                                   json{{"question", "   "}}.dump(),
                                   json{{"question", 7}}.dump()}) {
        auto res = client.Post("/v1/answer", body, "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(json::parse(res->body).contains("error"));
    }
}

TEST_CASE("invalid runs map to 502 with the error kind and a trace") {
    RunningService rs(service_config("assets/fixtures/conformance/07_run_invalid_quota.json"));
    auto client = rs.client();
    auto res = client.Post("/v1/answer",
                           json{{"question", "Which trial showed the strongest effect?"}}.dump(),
                           "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 502);
    const json body = json::parse(res->body);
    CHECK(body.at("kind") == "RunInvalid");
    CHECK(body.at("error_kind") == "quota_exhausted");
    // The partial trace is still retrievable.
    auto trace = client.Get("/v1/trace/" + body.at("trace_id").get<std::string>());
    REQUIRE(trace);
    CHECK(trace->status == 200);
}

TEST_CASE("unknown trace ids get a 404") {
    RunningService rs(service_config("assets/fixtures/conformance/01_early_exit.json"));
    auto res = rs.client().Get("/v1/trace/t999999");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("concurrent answer requests all succeed with distinct trace ids") {
    RunningService rs(service_config("assets/fixtures/conformance/01_early_exit.json"));
    constexpr int kClients = 8;
    std::vector<std::string> ids(kClients);
    std::vector<std::thread> threads;
    for (int i = 0; i < kClients; ++i)
        threads.emplace_back([&rs, &ids, i] {
            auto client = rs.client();
            auto res = client.Post("/v1/answer", json{{"question", "q"}}.dump(), "application/json");
            if (res && res->status == 200) ids[i] = json::parse(res->body).at("trace_id");
        });
    for (auto& t : threads) t.join();
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());  // all distinct
    CHECK(std::none_of(ids.begin(), ids.end(), [](const std::string& s) { return s.empty(); }));
}

TEST_CASE("TraceStore evicts to disk and reads back spilled traces") {
    const auto dir = std::filesystem::temp_directory_path() / "tv_spill_test";
    std::filesystem::remove_all(dir);
    TraceStore store(2, dir.string());
    store.put("a", "bytes-a");
    store.put("b", "bytes-b");
    store.put("c", "bytes-c");  // evicts "a" to disk
    CHECK(store.get("b") == "bytes-b");
    CHECK(store.get("c") == "bytes-c");
    CHECK(std::filesystem::exists(dir / "a.jsonl"));
    CHECK(store.get("a") == "bytes-a");  // served from the spill file
    CHECK_FALSE(store.get("zzz").has_value());
    std::filesystem::remove_all(dir);
}

TEST_CASE("TraceStore get refreshes recency") {
    TraceStore store(2);  // no spill dir: evicted entries are gone
    store.put("a", "A");
    store.put("b", "B");
    CHECK(store.get("a") == "A");  // refresh: "b" is now least recent
    store.put("c", "C");
    CHECK(store.get("a") == "A");
    CHECK_FALSE(store.get("b").has_value());
}
