#pragma once

#include <stdexcept>
#include <string>

namespace layoutprompt {

/// Base of every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or schema violation. `where()` is a JSON-path-like
/// pointer to the offending element (empty when not applicable).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::string where = {})
      : Error(where.empty() ? msg : where + ": " + msg), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class EmptyDocument : public Error {
 public:
  EmptyDocument() : Error("document contains no text boxes") {}
};

class MissingHtml : public Error {
 public:
  explicit MissingHtml(const std::string& doc_id)
      : Error("document '" + doc_id + "' has no attached HTML") {}
};

class ZeroBaseline : public Error {
 public:
  explicit ZeroBaseline(const std::string& doc_id)
      : Error("document '" + doc_id + "' verbalizes to empty PlainText") {}
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus has no document with non-empty PlainText") {}
};

class EmptyEvaluation : public Error {
 public:
  EmptyEvaluation() : Error("nothing to evaluate: no records") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Retryable failure talking to a model endpoint.
class TransportError : public Error {
 public:
  using Error::Error;
};

class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(const std::string& fingerprint)
      : Error("replay store has no response for fingerprint " + fingerprint),
        fingerprint_(fingerprint) {}
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  std::string fingerprint_;
};

}  // namespace layoutprompt
