// Copyright 2026 The tilharvest Authors. All Rights Reserved.
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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "til/error.hpp"
#include "til/review_service.hpp"

namespace til {

/// Serves ReviewService over HTTP+JSON under /v1, optionally with a static
/// frontend bundle mounted at /.
///
///   GET  /v1/maps
///   GET  /v1/maps/{id}?full=true|false
///   GET  /v1/maps/{id}/preview?t=
///   GET  /v1/maps/{id}/patches?t=&n=
///   POST /v1/sessions                 {"map_id"}
///   GET  /v1/sessions/{id}
///   POST /v1/sessions/{id}/commit     {"t", "n_samples" (int or "ALL"), "seed"}
///
/// Errors come back as {"error": {"code", "message"}} with 400 (bad
/// argument or range), 404 (unknown map or session), 409 (conflict), 422
/// (thumbnails unavailable) or 500.
class ReviewHttpServer {
 public:
  ReviewHttpServer(ReviewService& service,
                   std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ReviewHttpServer();

  /// Binds and returns the port (an ephemeral one when port == 0).
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool serve();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorCode code);

}  // namespace til
