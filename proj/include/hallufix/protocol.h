#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallufix/corpus.h"
#include "hallufix/ner.h"
#include "hallufix/ranker.h"

// Newline-delimited JSON request/response protocol for attaching external
// recognizers and scorers, over a spawned subprocess or a TCP socket.
namespace hallufix::protocol {

struct Endpoint {
  enum class Kind { kSubprocess, kTcp };

  Kind kind = Kind::kSubprocess;
  std::string command;  // run through /bin/sh -c
  std::string host;
  std::uint16_t port = 0;
  std::chrono::milliseconds timeout{30000};

  // "exec:<shell command>" or "tcp://host:port".
  static Endpoint parse(std::string_view spec,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds{30000});
  std::string describe() const;
};

// A duplex line stream. Implementations own their file descriptors.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  // Blocks until a full line arrives or the deadline passes.
  virtual std::string read_line(std::chrono::steady_clock::time_point deadline) = 0;
};

std::unique_ptr<LineChannel> connect(const Endpoint& endpoint);

// One connection; requests are serialized and each must be answered before
// the next is sent.
class Client {
 public:
  explicit Client(Endpoint endpoint);

  // Stamps a fresh "id" into the request and returns the response that
  // echoes it.
  Json call(Json request);
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  std::unique_ptr<LineChannel> channel_;
  std::uint64_t next_id_ = 1;
};

class ExternalRecognizer final : public Recognizer {
 public:
  explicit ExternalRecognizer(Endpoint endpoint) : client_(std::move(endpoint)) {}

  std::vector<EntityMention> recognize(std::string_view text) override;
  // Mentions dropped for violating offset or overlap invariants.
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  Client client_;
  std::vector<std::string> diagnostics_;
};

class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(Endpoint endpoint) : client_(std::move(endpoint)) {}

  std::vector<double> score(std::string_view source,
                            std::span<const CandidateSummary> candidates) override;

 private:
  Client client_;
};

// Single-shot helpers.
std::vector<EntityMention> recognize_external(const Endpoint& endpoint,
                                              std::string_view text);
std::vector<double> score_external(const Endpoint& endpoint,
                                   std::string_view source,
                                   std::span<const CandidateSummary> candidates);

// Response validation, exposed for tests.
std::vector<EntityMention> mentions_from_response(
    const Json& response, std::string_view text,
    std::vector<std::string>& diagnostics);
std::vector<double> scores_from_response(const Json& response,
                                         std::size_t expected);

}  // namespace hallufix::protocol
