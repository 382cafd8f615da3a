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

#include "smile/rest.hpp"

#include <thread>

#include <httplib.h>

namespace smile {

using nlohmann::json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDocument:
    case ErrorCode::kWrongPointCount:
    case ErrorCode::kOutOfRangeCoordinate:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kUndecodableImage:
    case ErrorCode::kDimensionMismatch:
      return 400;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kWrongState:
      return 409;
    case ErrorCode::kUnknownCandidate:
    case ErrorCode::kImageTooSmall:
      return 422;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kProviderUnavailable:
      return 503;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send_json(res, http_status_for(e.code()), e.to_json()); }

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw Error(ErrorCode::kMalformedDocument, "request body is empty");
  }
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedDocument, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("request body is not JSON: ") + ex.what());
  }
}

template <typename T>
T field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) throw Error(ErrorCode::kInvalidArgument, std::string("missing field ") + key);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("wrong type for field ") + key);
  }
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

struct RestServer::Impl {
  CaseService& service;
  RestOptions options;
  httplib::Server server;
  std::thread thread;

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, Error(ErrorCode::kInternal, e.what()));
      }
    };
  }

  Impl(CaseService& s, RestOptions o) : service(s), options(std::move(o)) {
    if (!options.ui_dir.empty() && !server.set_mount_point("/ui", options.ui_dir)) {
      throw Error(ErrorCode::kInvalidConfig, "ui directory does not exist", {{"ui_dir", options.ui_dir}});
    }
    server.set_payload_max_length(64u << 20);

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (options.cors) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        if (req.method == "OPTIONS") {
          res.status = 204;
          return httplib::Server::HandlerResponse::Handled;
        }
      }
      if (options.api_token.empty() || req.path == "/healthz" || req.path.rfind("/ui", 0) == 0) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (req.get_header_value("Authorization") != "Bearer " + options.api_token) {
        send_error(res, Error(ErrorCode::kUnauthorized, "missing or invalid bearer token"));
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server.Get("/healthz", guarded([](const auto&, auto& res) { send_json(res, 200, {{"status", "ok"}}); }));

    server.Post("/cases", guarded([this](const auto& req, auto& res) {
      send_json(res, 201, service.create_case(parse_body(req, true)).to_view());
    }));

    server.Get("/cases", guarded([this](const auto&, auto& res) {
      json list = json::array();
      for (const auto& c : service.list_cases()) list.push_back(c.to_view());
      send_json(res, 200, {{"cases", list}});
    }));

    server.Get(R"(/cases/([^/]+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service.get_case(req.matches[1]).to_view());
    }));

    server.Post(R"(/cases/([^/]+)/photo)", guarded([this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      Case c;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("photo")) throw Error(ErrorCode::kInvalidArgument, "multipart field photo is missing");
        std::optional<std::string> landmarks;
        if (req.has_file("landmarks")) landmarks = req.get_file_value("landmarks").content;
        c = service.upload_photo(id, as_bytes(req.get_file_value("photo").content), landmarks);
      } else if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        const json body = parse_body(req, false);
        c = service.copy_photo(id, field<std::string>(body, "copy_from_case"));
      } else {
        c = service.upload_photo(id, as_bytes(req.body));
      }
      send_json(res, 200, c.to_view());
    }));

    server.Post(R"(/cases/([^/]+)/run)", guarded([this](const auto& req, auto& res) {
      send_json(res, 202, service.run_pipeline(req.matches[1]).to_view());
    }));

    server.Get(R"(/cases/([^/]+)/candidates)", guarded([this](const auto& req, auto& res) {
      const json view = service.get_case(req.matches[1]).to_view();
      send_json(res, 200, {{"case_id", view["case_id"]}, {"state", view["state"]}, {"candidates", view["candidates"]}});
    }));

    server.Get(R"(/cases/([^/]+)/candidates/([^/]+)/image)", guarded([this](const auto& req, auto& res) {
      const auto png = service.candidate_image(req.matches[1], req.matches[2]);
      res.status = 200;
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Post(R"(/cases/([^/]+)/selection)", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req, false);
      send_json(res, 200, service.record_selection(req.matches[1], field<std::string>(body, "candidate_id")).to_view());
    }));

    server.Post(R"(/cases/([^/]+)/consent)", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req, false);
      const bool granted = field<bool>(body, "granted");
      ConsentScope scope = granted ? ConsentScope::kAnonymizedTraining : ConsentScope::kNone;
      if (body.contains("scope")) scope = parse_consent_scope(field<std::string>(body, "scope"));
      send_json(res, 200, service.record_consent(req.matches[1], granted, scope).to_view());
    }));
  }
};

RestServer::RestServer(CaseService& service, RestOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

RestServer::~RestServer() { stop(); }

int RestServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kInvalidConfig, "cannot bind REST server", {{"host", host}, {"port", port}});
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void RestServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kInvalidConfig, "cannot listen for REST requests", {{"host", host}, {"port", port}});
  }
}

void RestServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace smile
