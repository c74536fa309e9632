#pragma once
//
// Prompt-length overhead of each verbalizer relative to PlainText.
//
// Counters:
//   ApproxTokenCounter   offline default; one token per maximal run of
//                        non-space, non-punctuation bytes plus one per ASCII
//                        punctuation character. Whitespace is free.
//   ProcessTokenCounter  talks to an external tokenizer process over
//                        stdin/stdout. Request: "<byte length>\n<bytes>\n";
//                        response: one line holding the decimal count.
//

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "layoutprompt/error.hpp"
#include "layoutprompt/verbalize.hpp"

namespace layoutprompt {

class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) = 0;
  virtual std::string name() const = 0;
};

class ApproxTokenCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view s) override {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
      const auto u = static_cast<unsigned char>(c);
      if (text::is_space(c)) {
        in_word = false;
      } else if (u < 0x80 && std::ispunct(u)) {
        ++n;
        in_word = false;
      } else if (!in_word) {
        ++n;
        in_word = true;
      }
    }
    return n;
  }
  std::string name() const override { return "approx"; }
};

/// External tokenizer behind the length-prefixed line protocol. Calls are
/// serialized, so one instance may be shared between threads.
class ProcessTokenCounter final : public TokenCounter {
 public:
  explicit ProcessTokenCounter(std::string command) : command_(std::move(command)) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw IoError("pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw IoError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (!in_ || !out_) throw IoError("fdopen() failed");
    std::signal(SIGPIPE, SIG_IGN);
  }

  ProcessTokenCounter(const ProcessTokenCounter&) = delete;
  ProcessTokenCounter& operator=(const ProcessTokenCounter&) = delete;

  ~ProcessTokenCounter() override {
    if (in_) std::fclose(in_);
    if (out_) std::fclose(out_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  std::size_t count(std::string_view s) override {
    std::lock_guard lock(mu_);
    const auto header = std::to_string(s.size()) + "\n";
    if (std::fwrite(header.data(), 1, header.size(), in_) != header.size() ||
        std::fwrite(s.data(), 1, s.size(), in_) != s.size() || std::fputc('\n', in_) == EOF ||
        std::fflush(in_) != 0) {
      throw IoError("token counter '" + command_ + "' closed its input");
    }
    std::string line;
    for (int c = std::fgetc(out_); c != EOF && c != '\n'; c = std::fgetc(out_)) {
      line.push_back(static_cast<char>(c));
    }
    const auto t = text::trim(line);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw IoError("token counter '" + command_ + "' answered '" + line + "'");
    }
    return static_cast<std::size_t>(std::stoull(std::string(t)));
  }

  std::string name() const override { return "process:" + command_; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  std::FILE* in_ = nullptr;
  std::FILE* out_ = nullptr;
  std::mutex mu_;
};

/// count(verbalize(doc, v)) / count(PlainText(doc)).
inline double overhead(const OcrDocument& doc, VerbalizerId v, TokenCounter& counter,
                       const VerbalizeOptions& opts = {}) {
  const auto base = counter.count(verbalize_plain_text(doc, opts).text);
  if (base == 0) throw ZeroBaseline(doc.doc_id);
  return static_cast<double>(counter.count(verbalize(doc, v, opts).text)) /
         static_cast<double>(base);
}

struct OverheadRow {
  VerbalizerId verbalizer;
  double mean_ratio = 0.0;
  std::size_t documents = 0;
  std::size_t rank = 0;  // 1 = least overhead
};

/// Mean per-document ratio for each verbalizer, sorted ascending (ties keep
/// verbalizer order). Documents with empty PlainText are skipped; PlainHTML
/// is only measured when every counted document carries HTML.
inline std::vector<OverheadRow> corpus_overhead(const std::vector<OcrDocument>& docs,
                                                TokenCounter& counter,
                                                const VerbalizeOptions& opts = {}) {
  std::vector<const OcrDocument*> usable;
  for (const auto& d : docs) {
    if (counter.count(verbalize_plain_text(d, opts).text) > 0) usable.push_back(&d);
  }
  if (usable.empty()) throw EmptyCorpus();
  const bool html = std::all_of(usable.begin(), usable.end(),
                                [](const OcrDocument* d) { return d->html.has_value(); });

  std::vector<OverheadRow> rows;
  for (auto v : kAllVerbalizers) {
    if (v == VerbalizerId::PlainHTML && !html) continue;
    double sum = 0;
    for (const auto* d : usable) sum += overhead(*d, v, counter, opts);
    rows.push_back({v, sum / static_cast<double>(usable.size()), usable.size(), 0});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const OverheadRow& a, const OverheadRow& b) {
    return a.mean_ratio < b.mean_ratio;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

}  // namespace layoutprompt
