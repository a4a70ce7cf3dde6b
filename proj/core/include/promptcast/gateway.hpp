#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "promptcast/prompt.hpp"
#include "promptcast/selection.hpp"

namespace promptcast {

enum class BackendKind { mock, remote };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;  // base URL, e.g. http://localhost:8000
    std::string model = "phi-3-medium-128k-instruct";
    double temperature = 0.0;  // deterministic by default
    int max_tokens = 64;
    int timeout_ms = 30000;
    int max_concurrency = 4;
    int retries = 2;
    std::string api_key_env = "PROMPTCAST_API_KEY";
    std::string transcript_path;  // JSON Lines request/reply log; empty disables

    bool operator==(const BackendConfig&) const = default;
};

enum class MockMode { echo_last, linear_extrapolate, noisy_oracle };

/// Deterministic offline completion policy. Identical (prompt, policy, seed)
/// always produces an identical reply.
struct MockPolicy {
    MockMode mode = MockMode::echo_last;
    std::uint64_t seed = 0;
    double noise_scale = 0.0;  // relative, noisy_oracle only
    std::map<std::string, double> answer_book;  // test origin -> true target kbps

    bool operator==(const MockPolicy&) const = default;
};

struct GatewayCounters {
    std::uint64_t requests = 0;  // complete() invocations, including failed ones
    std::uint64_t failures = 0;
    int peak_in_flight = 0;
};

/// Uniform completion interface. The gateway is the only module doing I/O;
/// it bounds concurrent requests and keeps the run's only mutable counters.
class CompletionBackend {
public:
    explicit CompletionBackend(const BackendConfig& config);
    virtual ~CompletionBackend() = default;

    CompletionBackend(const CompletionBackend&) = delete;
    CompletionBackend& operator=(const CompletionBackend&) = delete;

    /// Throws Timeout / HttpError / RetriesExhausted on infrastructure
    /// failure so callers can account for those separately.
    std::string complete(const PromptBundle& prompt);

    virtual std::string model_id() const = 0;

    GatewayCounters counters() const;

protected:
    virtual std::string do_complete(const PromptBundle& prompt) = 0;

private:
    void log_transcript(const PromptBundle& prompt, const std::string& reply, double latency_ms,
                        const std::string& error);

    std::string transcript_path_;
    std::counting_semaphore<> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> failures_{0};
    std::mutex transcript_mutex_;
};

class MockBackend final : public CompletionBackend {
public:
    MockBackend(const BackendConfig& config, MockPolicy policy);

    std::string model_id() const override;

protected:
    std::string do_complete(const PromptBundle& prompt) override;

private:
    MockPolicy policy_;
};

/// OpenAI-compatible chat-completions client with retry and backoff.
class RemoteBackend final : public CompletionBackend {
public:
    explicit RemoteBackend(const BackendConfig& config);

    std::string model_id() const override;

protected:
    std::string do_complete(const PromptBundle& prompt) override;

private:
    BackendConfig config_;
};

std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config,
                                                const MockPolicy& policy);

struct PrecomputeOptions {
    double er_floor_kbps = 1.0;
    double guard_multiplier = 10.0;
    int workers = 4;
};

struct PrecomputeResult {
    ErTable table;
    std::vector<int> failed;  // pool indices whose backend call failed; rerun to fill
};

/// Renders a zero-shot prompt per demo window, queries the backend, and turns
/// each reply into an error rate against the demo's true target. Entries
/// already present in `existing` are kept and not re-queried. A reply that
/// cannot be used (parse failure or out-of-range) records er = +infinity.
/// Backend failures skip the entry and report it instead of aborting.
PrecomputeResult precompute_er(const std::vector<DemoCandidate>& pool,
                               CompletionBackend& backend, const PromptSpec& prompt_spec,
                               const PrecomputeOptions& options, const ErTable& existing = {});

}  // namespace promptcast
