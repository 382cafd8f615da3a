// Copyright 2026 The Smiledesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <string>

#include "smile/error.hpp"
#include "smile/service.hpp"

namespace smile {

/// HTTP status for an error code: 400 for invalid input, 401, 404, 409 for
/// WrongState, 422 for UnknownCandidate and ImageTooSmall, 503 for
/// unreachable dependencies, 500 otherwise.
int http_status_for(ErrorCode code);

struct RestOptions {
  std::string api_token;  // empty disables bearer auth
  std::string ui_dir;     // served under /ui when set
  bool cors = true;
};

/// JSON API over a CaseService:
///   POST /cases                               create (body: {gate_config, revision_of})
///   GET  /cases                               list
///   GET  /cases/{id}                          case view
///   POST /cases/{id}/photo                    multipart "photo" [+ "landmarks"], raw image
///                                             body, or {"copy_from_case": id}
///   POST /cases/{id}/run                      start the pipeline (202)
///   GET  /cases/{id}/candidates               candidate list
///   GET  /cases/{id}/candidates/{cid}/image   PNG
///   POST /cases/{id}/selection                {"candidate_id"}
///   POST /cases/{id}/consent                  {"granted", "scope"}
///   GET  /healthz
/// Errors are {code, message, details}.
class RestServer {
 public:
  RestServer(CaseService& service, RestOptions options);
  ~RestServer();

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace smile
