#pragma once

#include <stdexcept>
#include <string>

namespace motif {

// Backend could not produce a response (after retries, for the HTTP client).
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Endpoint replied, but the reply carried no usable generated text.
class MalformedResponse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A persisted record or dataset row violates the documented schema.
class SchemaViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend failure during a multi-round rollout, tagged with the round at
// which it occurred.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(int round_index, const std::string& what)
      : std::runtime_error("round " + std::to_string(round_index) + ": " + what),
        round_index_(round_index) {}

  int round_index() const { return round_index_; }

 private:
  int round_index_;
};

}  // namespace motif
