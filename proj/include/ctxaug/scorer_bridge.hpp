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

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxaug/scorer.hpp"

namespace ctxaug {

// Wire format: UTF-8, one JSON object per '\n'-terminated line.
//   server -> client, once:  {"classes":[...],"protocol":1}
//   client -> server:        {"id":N,"image_path":"...","mask":[x0,y0,x1,y1]}
//   server -> client:        {"id":N,"probs":[p_0,...,p_K]}  or  {"id":N,"error":"..."}
// "classes" lists the K object classes; probs has K + 1 entries, background last.

inline constexpr int kProtocolVersion = 1;

struct ScoreRequest {
  std::int64_t id = 0;
  std::string image_path;
  std::array<int, 4> mask{};
};

struct ScoreResponse {
  std::int64_t id = 0;
  std::vector<double> probs;
};

struct Handshake {
  int protocol = kProtocolVersion;
  std::vector<std::string> classes;
};

/// Request line including the trailing '\n'.
std::string encode_request(const ScoreRequest& req);
std::string encode_handshake(const Handshake& hs);
std::string encode_response(const ScoreResponse& resp);

/// Throws ProtocolError on malformed lines or error responses.
ScoreResponse decode_response(std::string_view line);
Handshake decode_handshake(std::string_view line);

/// Bidirectional line channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void write_line(std::string_view line) = 0;
  /// Next line without its '\n'; nullopt on timeout. Throws ProtocolError at EOF.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `command` through /bin/sh with its stdin/stdout connected to the
/// channel. The child is terminated when the transport is destroyed.
class ProcessTransport : public LineTransport {
 public:
  explicit ProcessTransport(const std::string& command);
  ~ProcessTransport() override;
  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  void write_line(std::string_view line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// Scorer served by an external process. Requests may be pipelined;
/// responses are matched to requests by id, never by arrival order.
class RemoteScorer : public Scorer {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{30000};

  /// Performs the handshake; throws ProtocolError if it fails.
  RemoteScorer(std::unique_ptr<LineTransport> transport,
               std::chrono::milliseconds timeout = kDefaultTimeout,
               std::filesystem::path temp_dir = std::filesystem::temp_directory_path());

  const std::vector<std::string>& class_names() const override { return classes_; }
  ScoreVector score(const ContextualSample& sample) const override;

  /// Writes the sample to a temporary PNG and sends its request.
  std::int64_t submit(const ContextualSample& sample) const;
  /// Blocks until the response for id arrives (or the timeout elapses).
  ScoreVector collect(std::int64_t id) const;

 private:
  std::unique_ptr<LineTransport> transport_;
  std::chrono::milliseconds timeout_;
  std::filesystem::path temp_dir_;
  std::vector<std::string> classes_;

  mutable std::mutex mutex_;
  mutable std::int64_t next_id_ = 1;
  mutable std::map<std::int64_t, std::filesystem::path> outstanding_;
  mutable std::map<std::int64_t, ScoreResponse> arrived_;
};

}  // namespace ctxaug
