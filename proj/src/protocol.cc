#include "hallufix/protocol.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "hallufix/error.h"
#include "hallufix/text.h"

namespace hallufix::protocol {

namespace {

constexpr const char* kModule = "protocol";

Error unreachable(const std::string& what) {
  return Error(ErrorCode::kEndpointUnreachable, kModule, what);
}

Error violation(const std::string& what) {
  return Error(ErrorCode::kProtocolViolation, kModule, what);
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void write_all(int fd, std::string_view data, const std::string& peer) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw unreachable(peer + ": write failed: " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

class FdLineReader {
 public:
  std::string read_line(int fd, std::chrono::steady_clock::time_point deadline,
                        const std::string& peer,
                        std::chrono::milliseconds budget) {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        throw Error(ErrorCode::kTimeout, kModule,
                    peer + ": no response within " +
                        std::to_string(budget.count()) + " ms");
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      pollfd pfd{fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()) + 1);
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw unreachable(peer + ": poll failed: " + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw unreachable(peer + ": read failed: " + std::strerror(errno));
      }
      if (n == 0) throw unreachable(peer + ": connection closed");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string buffer_;
};

class SubprocessChannel final : public LineChannel {
 public:
  explicit SubprocessChannel(const Endpoint& endpoint)
      : peer_(endpoint.describe()), budget_(endpoint.timeout) {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) {
      throw unreachable(peer_ + ": pipe failed");
    }
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw unreachable(peer_ + ": pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
        ::close(fd);
      }
      throw unreachable(peer_ + ": fork failed");
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", endpoint.command.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~SubprocessChannel() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ <= 0) return;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  void write_line(std::string_view line) override {
    std::string framed(line);
    framed.push_back('\n');
    write_all(write_fd_, framed, peer_);
  }

  std::string read_line(std::chrono::steady_clock::time_point deadline) override {
    return reader_.read_line(read_fd_, deadline, peer_, budget_);
  }

 private:
  std::string peer_;
  std::chrono::milliseconds budget_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  FdLineReader reader_;
};

class TcpChannel final : public LineChannel {
 public:
  explicit TcpChannel(const Endpoint& endpoint)
      : peer_(endpoint.describe()), budget_(endpoint.timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(endpoint.port);
    if (::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found) != 0) {
      throw unreachable(peer_ + ": cannot resolve host");
    }
    for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                              ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(found);
    if (fd_ < 0) throw unreachable(peer_ + ": connection refused");
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(std::string_view line) override {
    std::string framed(line);
    framed.push_back('\n');
    write_all(fd_, framed, peer_);
  }

  std::string read_line(std::chrono::steady_clock::time_point deadline) override {
    return reader_.read_line(fd_, deadline, peer_, budget_);
  }

 private:
  std::string peer_;
  std::chrono::milliseconds budget_;
  int fd_ = -1;
  FdLineReader reader_;
};

}  // namespace

Endpoint Endpoint::parse(std::string_view spec, std::chrono::milliseconds timeout) {
  Endpoint e;
  e.timeout = timeout;
  constexpr std::string_view kExec = "exec:";
  constexpr std::string_view kTcp = "tcp://";
  if (spec.substr(0, kExec.size()) == kExec) {
    e.kind = Kind::kSubprocess;
    e.command = std::string(spec.substr(kExec.size()));
    if (e.command.empty()) {
      throw Error(ErrorCode::kConfigInvalid, kModule, "empty exec command");
    }
    return e;
  }
  if (spec.substr(0, kTcp.size()) == kTcp) {
    const std::string_view rest = spec.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorCode::kConfigInvalid, kModule,
                  "expected tcp://host:port, got '" + std::string(spec) + "'");
    }
    e.kind = Kind::kTcp;
    e.host = std::string(rest.substr(0, colon));
    try {
      const int port = std::stoi(std::string(rest.substr(colon + 1)));
      if (port <= 0 || port > 65535) throw std::out_of_range("port");
      e.port = static_cast<std::uint16_t>(port);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigInvalid, kModule,
                  "bad port in '" + std::string(spec) + "'");
    }
    return e;
  }
  throw Error(ErrorCode::kConfigInvalid, kModule,
              "endpoint must start with exec: or tcp://, got '" +
                  std::string(spec) + "'");
}

std::string Endpoint::describe() const {
  if (kind == Kind::kSubprocess) return "exec:" + command;
  return "tcp://" + host + ":" + std::to_string(port);
}

std::unique_ptr<LineChannel> connect(const Endpoint& endpoint) {
  ignore_sigpipe();
  if (endpoint.kind == Endpoint::Kind::kSubprocess) {
    return std::make_unique<SubprocessChannel>(endpoint);
  }
  return std::make_unique<TcpChannel>(endpoint);
}

Client::Client(Endpoint endpoint)
    : endpoint_(std::move(endpoint)), channel_(connect(endpoint_)) {}

Json Client::call(Json request) {
  const std::string id = "req-" + std::to_string(next_id_++);
  Json framed;
  framed["id"] = id;
  for (auto& [key, value] : request.items()) {
    if (key != "id") framed[key] = std::move(value);
  }
  channel_->write_line(framed.dump());
  const auto deadline = std::chrono::steady_clock::now() + endpoint_.timeout;
  const std::string line = channel_->read_line(deadline);
  Json response;
  try {
    response = Json::parse(line);
  } catch (const std::exception& e) {
    throw violation(endpoint_.describe() + ": response is not JSON: " + e.what());
  }
  if (!response.is_object()) throw violation("response is not an object");
  auto rid = response.find("id");
  if (rid == response.end() || !rid->is_string()) {
    throw violation("response has no id");
  }
  if (rid->get<std::string>() != id) {
    throw violation("response id '" + rid->get<std::string>() +
                    "' does not match request id '" + id + "'");
  }
  if (auto err = response.find("error"); err != response.end()) {
    throw violation("endpoint reported error: " + err->dump());
  }
  return response;
}

std::vector<EntityMention> mentions_from_response(
    const Json& response, std::string_view text,
    std::vector<std::string>& diagnostics) {
  auto entities = response.find("entities");
  if (entities == response.end() || !entities->is_array()) {
    throw violation("response has no entities array");
  }
  const std::u32string u32 = text::to_u32(text);
  std::vector<EntityMention> mentions;
  for (const auto& e : *entities) {
    if (!e.is_object()) throw violation("entity is not an object");
    auto start = e.find("start");
    auto end = e.find("end");
    auto label = e.find("label");
    if (start == e.end() || end == e.end() || label == e.end() ||
        !start->is_number_integer() || !end->is_number_integer() ||
        !label->is_string()) {
      throw violation("entity needs integer start/end and string label");
    }
    auto parsed = parse_label(label->get<std::string>());
    if (!parsed) {
      throw violation("unknown entity label '" + label->get<std::string>() + "'");
    }
    const auto s = start->get<std::int64_t>();
    const auto t = end->get<std::int64_t>();
    if (s < 0 || t <= s || static_cast<std::size_t>(t) > u32.size()) {
      diagnostics.push_back("dropped entity [" + std::to_string(s) + "," +
                            std::to_string(t) + ") outside text of length " +
                            std::to_string(u32.size()));
      continue;
    }
    EntityMention m;
    m.start = static_cast<std::size_t>(s);
    m.end = static_cast<std::size_t>(t);
    m.surface = text::slice(u32, m.start, m.end);
    m.label = *parsed;
    m.normalized = normalize(m.surface, m.label);
    mentions.push_back(std::move(m));
  }
  std::stable_sort(mentions.begin(), mentions.end(),
                   [](const EntityMention& a, const EntityMention& b) {
                     return a.start != b.start ? a.start < b.start : a.end < b.end;
                   });
  std::vector<EntityMention> kept;
  for (auto& m : mentions) {
    if (!kept.empty() && kept.back().end > m.start) {
      diagnostics.push_back("dropped entity [" + std::to_string(m.start) + "," +
                            std::to_string(m.end) + ") overlapping [" +
                            std::to_string(kept.back().start) + "," +
                            std::to_string(kept.back().end) + ")");
      continue;
    }
    kept.push_back(std::move(m));
  }
  return kept;
}

std::vector<double> scores_from_response(const Json& response,
                                         std::size_t expected) {
  auto scores = response.find("scores");
  if (scores == response.end() || !scores->is_array()) {
    throw violation("response has no scores array");
  }
  std::vector<double> out;
  for (const auto& s : *scores) {
    if (!s.is_number()) throw violation("score is not a number");
    const double v = s.get<double>();
    if (!std::isfinite(v)) throw violation("score is not finite");
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::kCountMismatch, kModule,
                "expected " + std::to_string(expected) + " scores, got " +
                    std::to_string(out.size()));
  }
  return out;
}

std::vector<EntityMention> ExternalRecognizer::recognize(std::string_view text) {
  Json request;
  request["op"] = "ner";
  request["text"] = std::string(text);
  return mentions_from_response(client_.call(std::move(request)), text,
                                diagnostics_);
}

std::vector<double> ExternalScorer::score(
    std::string_view source, std::span<const CandidateSummary> candidates) {
  Json request;
  request["op"] = "score";
  request["document"] = std::string(source);
  Json texts = Json::array();
  for (const auto& c : candidates) texts.push_back(c.text);
  request["candidates"] = std::move(texts);
  return scores_from_response(client_.call(std::move(request)), candidates.size());
}

std::vector<EntityMention> recognize_external(const Endpoint& endpoint,
                                              std::string_view text) {
  ExternalRecognizer recognizer(endpoint);
  return recognizer.recognize(text);
}

std::vector<double> score_external(const Endpoint& endpoint,
                                   std::string_view source,
                                   std::span<const CandidateSummary> candidates) {
  ExternalScorer scorer(endpoint);
  return scorer.score(source, candidates);
}

}  // namespace hallufix::protocol
