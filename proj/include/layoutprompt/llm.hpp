#pragma once
//
// Model backends and the record/replay machinery.
//
// Every request goes out in the user role at temperature 0. The request
// fingerprint is SHA-256 over
//     UTF-8 prompt bytes, '\0', model_id, '\0', wrapper tag ("none"|"solar")
// and keys the replay store, so stores are portable between runs and tools.
//
// Run log (JSON Lines, doubles as a replay store), one object per line:
//     {"fingerprint": "...", "model_id": "...", "wrapper": "none",
//      "prompt": "...", "response": "..."}
// Wall-clock timings go to a separate timing log so run logs stay
// byte-reproducible.
//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/error.hpp"
#include "layoutprompt/hash.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

enum class PromptWrapper { None, Solar };

inline std::string_view to_string(PromptWrapper w) { return w == PromptWrapper::Solar ? "solar" : "none"; }

inline std::optional<PromptWrapper> parse_wrapper(std::string_view s) {
  const auto k = text::lower(s);
  if (k == "none" || k.empty()) return PromptWrapper::None;
  if (k == "solar") return PromptWrapper::Solar;
  return std::nullopt;
}

struct LlmRequest {
  static constexpr std::string_view kRole = "user";
  static constexpr double kTemperature = 0.0;

  std::string prompt;
  std::string model_id;
  bool json_mode = true;
  PromptWrapper wrapper = PromptWrapper::None;
};

/// "### User:" + prompt + "\n\n\n### Assistant:"
inline std::string wrap_solar(std::string_view prompt) {
  std::string out = "### User:";
  out.append(prompt);
  out.append("\n\n\n### Assistant:");
  return out;
}

/// The text actually sent as the user message.
inline std::string wire_prompt(const LlmRequest& req) {
  return req.wrapper == PromptWrapper::Solar ? wrap_solar(req.prompt) : req.prompt;
}

inline std::string fingerprint(std::string_view prompt, std::string_view model_id,
                               PromptWrapper wrapper) {
  std::string buf(prompt);
  buf.push_back('\0');
  buf.append(model_id);
  buf.push_back('\0');
  buf.append(to_string(wrapper));
  return sha256_hex(buf);
}

inline std::string fingerprint(const LlmRequest& req) {
  return fingerprint(req.prompt, req.model_id, req.wrapper);
}

class Backend {
 public:
  virtual ~Backend() = default;
  /// Raw model text. Throws TransportError for retryable failures.
  virtual std::string complete(const LlmRequest& req) = 0;
};

struct RunLogEntry {
  std::string fingerprint;
  std::string model_id;
  PromptWrapper wrapper = PromptWrapper::None;
  std::string prompt;
  std::string response;
};

namespace detail {

inline std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RunLogEntry& e) {
  nlohmann::ordered_json j;
  j["fingerprint"] = e.fingerprint;
  j["model_id"] = e.model_id;
  j["wrapper"] = std::string(to_string(e.wrapper));
  j["prompt"] = e.prompt;
  j["response"] = e.response;
  return j;
}

/// fingerprint -> recorded response. Read-only once loaded.
class ReplayStore {
 public:
  ReplayStore() = default;

  /// Loads a run log. A malformed line raises ParseError naming it.
  static ReplayStore load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open replay store " + path.string());
    ReplayStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw ParseError("corrupted run-log line", where);
      if (!j.contains("fingerprint") || !j["fingerprint"].is_string() || !j.contains("response") ||
          !j["response"].is_string()) {
        throw ParseError("run-log line needs string 'fingerprint' and 'response'", where);
      }
      store.insert(j["fingerprint"].get<std::string>(), j["response"].get<std::string>());
    }
    return store;
  }

  void insert(std::string fp, std::string response) {
    responses_.insert_or_assign(std::move(fp), std::move(response));
  }

  std::optional<std::string> lookup(const std::string& fp) const {
    const auto it = responses_.find(fp);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& fp) const { return responses_.count(fp) > 0; }
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(ReplayStore store) : store_(std::move(store)) {}

  std::string complete(const LlmRequest& req) override {
    const auto fp = fingerprint(req);
    if (auto hit = store_.lookup(fp)) return *hit;
    throw ReplayMiss(fp);
  }

 private:
  ReplayStore store_;
};

/// Append-only JSON Lines writer; safe to share between threads.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path, bool truncate = false)
      : out_(path, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app)), path_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
  }

  void write(const nlohmann::ordered_json& j) {
    std::lock_guard lock(mu_);
    out_ << detail::dump_line(j) << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::mutex mu_;
};

/// Writes paired requests/responses as a run log (usable as a ReplayStore).
inline void record_run(const std::vector<LlmRequest>& requests,
                       const std::vector<std::string>& responses,
                       const std::filesystem::path& path) {
  if (requests.size() != responses.size()) throw Error("record_run: unpaired requests/responses");
  JsonlWriter out(path, true);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    out.write(to_json(RunLogEntry{fingerprint(r), r.model_id, r.wrapper, r.prompt, responses[i]}));
  }
}

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Retries TransportError with exponential backoff; the last error escapes.
inline std::string complete_with_retry(Backend& backend, const LlmRequest& req,
                                       const RetryPolicy& policy, const SleepFn& sleep = real_sleep) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return backend.complete(req);
    } catch (const TransportError&) {
      if (attempt >= policy.max_attempts) throw;
      sleep(delay);
      delay = std::min(policy.max_backoff,
                       std::chrono::milliseconds(static_cast<long long>(
                           static_cast<double>(delay.count()) * policy.multiplier)));
    }
  }
}

/// Token bucket limiting requests per minute; 0 disables limiting.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double per_minute, std::function<Clock::time_point()> now = Clock::now,
                       SleepFn sleep = real_sleep)
      : rate_per_ms_(per_minute / 60000.0),
        capacity_(std::max(1.0, per_minute / 60.0)),
        tokens_(capacity_),
        now_(std::move(now)),
        sleep_(std::move(sleep)),
        last_(now_()) {}

  void acquire() {
    if (rate_per_ms_ <= 0) return;
    std::unique_lock lock(mu_);
    while (true) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::milliseconds(
          static_cast<long long>(std::ceil((1.0 - tokens_) / rate_per_ms_)));
      lock.unlock();
      sleep_(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = now_();
    const double elapsed =
        std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
  }

  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::function<Clock::time_point()> now_;
  SleepFn sleep_;
  Clock::time_point last_;
  std::mutex mu_;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

/// Sends one request (rate limited, retried) and logs it. Both logs are
/// optional.
struct CompletionContext {
  Backend* backend = nullptr;
  RetryPolicy retry;
  RateLimiter* limiter = nullptr;
  JsonlWriter* run_log = nullptr;
  JsonlWriter* timing_log = nullptr;
  SleepFn sleep = real_sleep;
};

inline std::string complete(const LlmRequest& req, CompletionContext& ctx) {
  if (!ctx.backend) throw ConfigError("no backend configured");
  if (ctx.limiter) ctx.limiter->acquire();
  const auto started = utc_timestamp();
  auto response = complete_with_retry(*ctx.backend, req, ctx.retry, ctx.sleep);
  const auto fp = fingerprint(req);
  if (ctx.run_log) {
    ctx.run_log->write(to_json(RunLogEntry{fp, req.model_id, req.wrapper, req.prompt, response}));
  }
  if (ctx.timing_log) {
    nlohmann::ordered_json t;
    t["fingerprint"] = fp;
    t["started"] = started;
    t["finished"] = utc_timestamp();
    ctx.timing_log->write(t);
  }
  return response;
}

}  // namespace layoutprompt
