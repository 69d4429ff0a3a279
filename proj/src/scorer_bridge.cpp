// Copyright (c) 2026 The ctxaug Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctxaug/scorer_bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "ctxaug/error.hpp"
#include "ctxaug/png_io.hpp"

namespace ctxaug {

namespace fs = std::filesystem;
using nlohmann::json;

std::string encode_request(const ScoreRequest& req) {
  return json{{"id", req.id}, {"image_path", req.image_path}, {"mask", req.mask}}.dump() + "\n";
}

std::string encode_handshake(const Handshake& hs) {
  return json{{"protocol", hs.protocol}, {"classes", hs.classes}}.dump() + "\n";
}

std::string encode_response(const ScoreResponse& resp) {
  return json{{"id", resp.id}, {"probs", resp.probs}}.dump() + "\n";
}

namespace {

json parse_line(std::string_view line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ProtocolError("protocol line is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed protocol line: ") + e.what());
  }
}

}  // namespace

ScoreResponse decode_response(std::string_view line) {
  const json j = parse_line(line);
  try {
    ScoreResponse r;
    r.id = j.at("id").get<std::int64_t>();
    if (j.contains("error")) {
      throw ProtocolError("scorer reported an error for request " + std::to_string(r.id) + ": " +
                          j["error"].dump());
    }
    r.probs = j.at("probs").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

Handshake decode_handshake(std::string_view line) {
  const json j = parse_line(line);
  try {
    Handshake hs{j.at("protocol").get<int>(), j.at("classes").get<std::vector<std::string>>()};
    if (hs.protocol != kProtocolVersion) {
      throw ProtocolError("unsupported scorer protocol " + std::to_string(hs.protocol));
    }
    if (hs.classes.empty()) throw ProtocolError("scorer announced no classes");
    return hs;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed handshake: ") + e.what());
  }
}

// ------------------------------------------------------------ process pipe

ProcessTransport::ProcessTransport(const std::string& command) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw IoError("pipe failed: " + std::string(std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw IoError("pipe failed: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) throw IoError("fork failed: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  signal(SIGPIPE, SIG_IGN);
}

ProcessTransport::~ProcessTransport() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

void ProcessTransport::write_line(std::string_view line) {
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(to_child_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("scorer process closed its input: " + std::string(std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ProcessTransport::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("poll failed: " + std::string(std::strerror(errno)));
    }
    if (rc == 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("read from scorer failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) throw ProtocolError("scorer process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ------------------------------------------------------------ remote scorer

RemoteScorer::RemoteScorer(std::unique_ptr<LineTransport> transport,
                           std::chrono::milliseconds timeout, fs::path temp_dir)
    : transport_(std::move(transport)), timeout_(timeout), temp_dir_(std::move(temp_dir)) {
  auto line = transport_->read_line(timeout_);
  if (!line) throw TimeoutError("scorer handshake timed out");
  classes_ = decode_handshake(*line).classes;
}

std::int64_t RemoteScorer::submit(const ContextualSample& sample) const {
  std::lock_guard lock(mutex_);
  const std::int64_t id = next_id_++;
  const fs::path path =
      temp_dir_ / ("ctxaug-" + std::to_string(getpid()) + "-" + std::to_string(id) + ".png");
  write_file(path, encode_png(sample.pixels));
  const auto& m = sample.masked_region;
  ScoreRequest req{id, path.string(),
                   {static_cast<int>(m.x0()), static_cast<int>(m.y0()), static_cast<int>(m.x1()),
                    static_cast<int>(m.y1())}};
  try {
    transport_->write_line(encode_request(req));
  } catch (...) {
    std::error_code ec;
    fs::remove(path, ec);
    throw;
  }
  outstanding_.emplace(id, path);
  return id;
}

ScoreVector RemoteScorer::collect(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  auto forget = [this](std::int64_t done) {
    auto it = outstanding_.find(done);
    if (it != outstanding_.end()) {
      std::error_code ec;
      fs::remove(it->second, ec);
      outstanding_.erase(it);
    }
  };
  if (!outstanding_.count(id) && !arrived_.count(id)) {
    throw ProtocolError("no outstanding request with id " + std::to_string(id));
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (!arrived_.count(id)) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    auto line = left.count() > 0 ? transport_->read_line(left) : std::nullopt;
    if (!line) {
      forget(id);
      throw TimeoutError("scorer did not answer request " + std::to_string(id) + " within " +
                         std::to_string(timeout_.count()) + " ms");
    }
    ScoreResponse resp;
    try {
      resp = decode_response(*line);
    } catch (...) {
      forget(id);
      throw;
    }
    if (!outstanding_.count(resp.id) || arrived_.count(resp.id)) {
      forget(id);
      throw ProtocolError("response id " + std::to_string(resp.id) +
                          " matches no outstanding request");
    }
    arrived_.emplace(resp.id, std::move(resp));
  }
  ScoreResponse resp = std::move(arrived_.at(id));
  arrived_.erase(id);
  forget(id);
  check_simplex(resp.probs, classes_.size() + 1);
  return ScoreVector{std::move(resp.probs)};
}

ScoreVector RemoteScorer::score(const ContextualSample& sample) const {
  return collect(submit(sample));
}

}  // namespace ctxaug
