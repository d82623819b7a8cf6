#pragma once

// Local chat-completions endpoint for parse/retry tests. Speaks the same wire
// protocol as the production client. Ballot requests are answered with the
// juror's conditioned initial vote (read back from the system prompt), so a
// fully mocked jury behaves like a rigid one. Replies can be made malformed
// with a seeded probability, per-request schedule, or transport-level 500s.

#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "jurysim/rng.hpp"

namespace jurysim::test {

struct MockRequestLog {
    bool ballot = false;   // vote request (first ask or re-ask)
    bool reask = false;    // corrective re-ask
    bool malformed = false;
};

class MockChatServer {
public:
    explicit MockChatServer(std::uint64_t seed = 1, double malformed_probability = 0.0)
        : rng_(seed), malformed_probability_(malformed_probability) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            handle(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this]() { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    // First N requests answer HTTP 500 (transport retry tests).
    void fail_first(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        fail_first_ = n;
    }

    // Force the next N ballot replies to be malformed regardless of probability.
    void force_malformed_ballots(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        forced_malformed_ = n;
    }

    std::vector<MockRequestLog> log() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return log_;
    }

    int request_count() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return static_cast<int>(log_.size());
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (fail_first_ > 0) {
            --fail_first_;
            res.status = 500;
            res.set_content("overloaded", "text/plain");
            return;
        }

        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        std::string system_text, last_user;
        if (!body.is_discarded() && body.contains("messages")) {
            for (const auto& m : body["messages"]) {
                const std::string role = m.value("role", "");
                if (role == "system") system_text = m.value("content", "");
                if (role == "user") last_user = m.value("content", "");
            }
        }

        MockRequestLog entry;
        entry.ballot = last_user.find("State your current vote") != std::string::npos ||
                       last_user.find("could not be parsed") != std::string::npos;
        entry.reask = last_user.find("could not be parsed") != std::string::npos;

        std::string content;
        if (entry.ballot) {
            bool malformed = false;
            if (forced_malformed_ > 0) {
                --forced_malformed_;
                malformed = true;
            } else if (malformed_probability_ > 0.0) {
                malformed = rng_.next_unit() < malformed_probability_;
            }
            entry.malformed = malformed;
            if (malformed) {
                content = "guilty, because I said so";
            } else {
                std::string vote = "GUILTY";
                if (system_text.find("Initial vote: NOT_GUILTY") != std::string::npos)
                    vote = "NOT_GUILTY";
                content = std::string("{\"vote\": \"") + vote +
                          "\", \"reasoning\": \"The case file reads the same as it did an hour ago.\"}";
            }
        } else {
            content = "I maintain my position; the case file has not changed.";
        }
        log_.push_back(entry);

        nlohmann::json reply = {
            {"id", "mock-1"},
            {"object", "chat.completion"},
            {"choices",
             nlohmann::json::array(
                 {{{"index", 0},
                   {"message", {{"role", "assistant"}, {"content", content}}},
                   {"finish_reason", "stop"}}})}};
        res.status = 200;
        res.set_content(reply.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    SeedStream rng_;
    double malformed_probability_;
    int fail_first_ = 0;
    int forced_malformed_ = 0;
    std::vector<MockRequestLog> log_;
};

} // namespace jurysim::test
