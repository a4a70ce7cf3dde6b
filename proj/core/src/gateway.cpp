#include "promptcast/gateway.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "promptcast/errors.hpp"

namespace promptcast {
namespace {

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

double mean_delta(const std::vector<double>& values) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) sum += values[k + 1] - values[k];
    return sum / static_cast<double>(values.size() - 1);
}

const char* mock_mode_name(MockMode mode) {
    switch (mode) {
        case MockMode::echo_last: return "echo_last";
        case MockMode::linear_extrapolate: return "linear_extrapolate";
        case MockMode::noisy_oracle: return "noisy_oracle";
    }
    return "unknown";
}

}  // namespace

CompletionBackend::CompletionBackend(const BackendConfig& config)
    : transcript_path_(config.transcript_path),
      slots_(std::max(1, config.max_concurrency)) {}

std::string CompletionBackend::complete(const PromptBundle& prompt) {
    slots_.acquire();
    requests_.fetch_add(1, std::memory_order_relaxed);
    const int now = in_flight_.fetch_add(1, std::memory_order_relaxed) + 1;
    int peak = peak_in_flight_.load(std::memory_order_relaxed);
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::string reply;
    try {
        reply = do_complete(prompt);
    } catch (const std::exception& e) {
        failures_.fetch_add(1, std::memory_order_relaxed);
        in_flight_.fetch_sub(1, std::memory_order_relaxed);
        slots_.release();
        const auto t1 = std::chrono::steady_clock::now();
        log_transcript(prompt, "", std::chrono::duration<double, std::milli>(t1 - t0).count(),
                       e.what());
        throw;
    }
    in_flight_.fetch_sub(1, std::memory_order_relaxed);
    slots_.release();
    const auto t1 = std::chrono::steady_clock::now();
    log_transcript(prompt, reply, std::chrono::duration<double, std::milli>(t1 - t0).count(), "");
    return reply;
}

GatewayCounters CompletionBackend::counters() const {
    GatewayCounters c;
    c.requests = requests_.load();
    c.failures = failures_.load();
    c.peak_in_flight = peak_in_flight_.load();
    return c;
}

void CompletionBackend::log_transcript(const PromptBundle& prompt, const std::string& reply,
                                       double latency_ms, const std::string& error) {
    if (transcript_path_.empty()) return;
    nlohmann::json line;
    line["origin"] = prompt.test_origin;
    line["model"] = model_id();
    line["prompt"] = prompt.text;
    line["reply"] = reply;
    line["latency_ms"] = latency_ms;
    if (!error.empty()) line["error"] = error;
    std::lock_guard lock(transcript_mutex_);
    std::ofstream out(transcript_path_, std::ios::binary | std::ios::app);
    if (out) out << line.dump() << '\n';
}

MockBackend::MockBackend(const BackendConfig& config, MockPolicy policy)
    : CompletionBackend(config), policy_(std::move(policy)) {}

std::string MockBackend::model_id() const {
    return std::string("mock:") + mock_mode_name(policy_.mode);
}

std::string MockBackend::do_complete(const PromptBundle& prompt) {
    const auto& series = prompt.input_series_kbps;
    if (series.size() < 2) {
        throw BackendError("mock backend needs the input window in the prompt bundle");
    }

    double value_kbps = 0.0;
    switch (policy_.mode) {
        case MockMode::echo_last:
            value_kbps = series.back();
            break;
        case MockMode::linear_extrapolate:
            value_kbps = series.back() + mean_delta(series);
            break;
        case MockMode::noisy_oracle: {
            const auto it = policy_.answer_book.find(prompt.test_origin);
            value_kbps = it != policy_.answer_book.end()
                             ? it->second
                             : series.back() + mean_delta(series);
            if (policy_.noise_scale != 0.0) {
                std::mt19937_64 rng(policy_.seed ^ fnv1a64(prompt.text));
                std::normal_distribution<double> noise(0.0, policy_.noise_scale);
                value_kbps *= 1.0 + noise(rng);
            }
            break;
        }
    }
    value_kbps = std::max(0.0, value_kbps);
    return "PREDICTION: " + format_throughput(value_kbps, prompt.scale) + ' ' +
           prompt.scale.label;
}

RemoteBackend::RemoteBackend(const BackendConfig& config)
    : CompletionBackend(config), config_(config) {
    if (config_.endpoint.empty()) {
        throw ConfigError("remote backend requires an endpoint URL");
    }
}

std::string RemoteBackend::model_id() const { return config_.model; }

std::string RemoteBackend::do_complete(const PromptBundle& prompt) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    const std::string payload = body.dump();

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
    }

    const int attempts = std::max(0, config_.retries) + 1;
    bool last_was_timeout = false;
    int last_status = 0;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto backoff = std::chrono::milliseconds(100) * (1 << std::min(attempt - 1, 4));
            std::this_thread::sleep_for(backoff);
        }
        auto res = client.Post("/v1/chat/completions", payload, "application/json");
        if (!res) {
            const auto err = res.error();
            last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                               err == httplib::Error::Read || err == httplib::Error::Write;
            last_status = 0;
            continue;
        }
        if (res->status == 200) {
            try {
                const auto json = nlohmann::json::parse(res->body);
                return json.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw BackendError(std::string("malformed completion response: ") + e.what());
            }
        }
        const bool retryable =
            res->status == 408 || res->status == 429 || res->status >= 500;
        if (!retryable) {
            throw HttpError(res->status);
        }
        last_was_timeout = false;
        last_status = res->status;
    }
    if (last_was_timeout) {
        throw Timeout("request timed out after " + std::to_string(attempts) + " attempts");
    }
    if (last_status != 0) {
        throw HttpError(last_status);
    }
    throw RetriesExhausted("transport failure after " + std::to_string(attempts) + " attempts");
}

std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config,
                                                const MockPolicy& policy) {
    if (config.kind == BackendKind::mock) {
        return std::make_unique<MockBackend>(config, policy);
    }
    return std::make_unique<RemoteBackend>(config);
}

PrecomputeResult precompute_er(const std::vector<DemoCandidate>& pool,
                               CompletionBackend& backend, const PromptSpec& prompt_spec,
                               const PrecomputeOptions& options, const ErTable& existing) {
    PrecomputeResult result;
    result.table = existing;

    std::vector<const DemoCandidate*> todo;
    for (const auto& cand : pool) {
        if (!cand.sample.target_kbps) {
            throw Error("demo pool sample has no target value");
        }
        if (!existing.contains(cand.pool_index)) todo.push_back(&cand);
    }

    struct Slot {
        int pool_index = 0;
        bool failed = false;
        ErEntry entry;
    };
    std::vector<Slot> slots(todo.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            const DemoCandidate& cand = *todo[i];
            slots[i].pool_index = cand.pool_index;
            try {
                const auto bundle = render_prompt(cand.sample, {}, prompt_spec);
                const std::string raw = backend.complete(bundle);
                const auto parsed = parse_reply(raw, bundle, options.guard_multiplier);

                ErEntry entry;
                entry.actual_kbps = *cand.sample.target_kbps;
                entry.model_id = backend.model_id();
                if (parsed.status == ReplyStatus::ok) {
                    entry.predicted_kbps = parsed.value_kbps;
                    entry.er = error_rate(*parsed.value_kbps, entry.actual_kbps,
                                          options.er_floor_kbps);
                } else {
                    // An unusable zero-shot reply is maximal informativeness.
                    entry.er = std::numeric_limits<double>::infinity();
                }
                slots[i].entry = std::move(entry);
            } catch (const BackendError&) {
                slots[i].failed = true;
            }
        }
    };

    const int nworkers =
        std::max(1, std::min<int>(options.workers, static_cast<int>(todo.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nworkers));
    for (int w = 0; w < nworkers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (const auto& slot : slots) {
        if (slot.failed) {
            result.failed.push_back(slot.pool_index);
        } else {
            result.table[slot.pool_index] = slot.entry;
        }
    }
    return result;
}

}  // namespace promptcast
