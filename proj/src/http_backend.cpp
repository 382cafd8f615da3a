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

#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>

#include "smile/error.hpp"
#include "smile/generation.hpp"

namespace smile {

using nlohmann::json;

namespace {

std::span<const std::uint8_t> as_bytes(const std::string& body) {
  return {reinterpret_cast<const std::uint8_t*>(body.data()), body.size()};
}

std::string as_string(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

}  // namespace

struct HttpBackend::Impl {
  httplib::Client client;
  std::mutex mu;
  std::optional<BackendInfo> info;

  Impl(const std::string& url, std::chrono::milliseconds timeout) : client(url) {
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
  }

  httplib::Result checked(httplib::Result res, const char* what, ErrorCode on_status) {
    if (!res) {
      throw Error(ErrorCode::kBackendUnavailable, std::string("backend adapter unreachable during ") + what,
                  {{"error", httplib::to_string(res.error())}});
    }
    if (res->status == 503) {
      throw Error(ErrorCode::kBackendUnavailable, std::string("backend adapter busy during ") + what);
    }
    if (res->status == 400) {
      const json body = json::parse(res->body, nullptr, false);
      if (body.is_object() && body.contains("code") && body["code"].is_string()) {
        const std::string code = body["code"].get<std::string>();
        if (code == code_name(ErrorCode::kSpaceMismatch) || code == code_name(ErrorCode::kDimensionMismatch)) {
          throw Error(code_from_name(code), body.value("message", std::string(what)),
                      body.value("details", json::object()));
        }
      }
    }
    if (res->status != 200) {
      throw Error(on_status, std::string("backend adapter rejected ") + what,
                  {{"status", res->status}, {"body", res->body.substr(0, 512)}});
    }
    return res;
  }
};

HttpBackend::HttpBackend(std::string base_url, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(base_url, timeout)) {}

HttpBackend::~HttpBackend() = default;

BackendInfo HttpBackend::info() {
  std::lock_guard lock(impl_->mu);
  if (!impl_->info) {
    auto res = impl_->checked(impl_->client.Get("/info"), "info", ErrorCode::kBackendUnavailable);
    try {
      impl_->info = BackendInfo::from_json(json::parse(res->body));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kBackendUnavailable, std::string("bad /info payload: ") + ex.what());
    }
  }
  return *impl_->info;
}

LatentCode HttpBackend::encode(const Image& photo) {
  const std::string body = as_string(encode_png(photo));
  auto res = impl_->checked(impl_->client.Post("/encode", body, "image/png"), "encode",
                            ErrorCode::kEncodeFailure);
  try {
    const json j = json::parse(res->body);
    return {j.at("vector").get<std::vector<double>>(), j.at("space_tag").get<std::string>()};
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kEncodeFailure, std::string("bad /encode payload: ") + ex.what());
  }
}

Image HttpBackend::generate(const LatentCode& latent) {
  const json request = {{"space_tag", latent.space_tag}, {"vector", latent.vector}};
  auto res = impl_->checked(impl_->client.Post("/generate", request.dump(), "application/json"),
                            "generate", ErrorCode::kGenerateFailure);
  try {
    return decode_image(as_bytes(res->body));
  } catch (const Error& ex) {
    throw Error(ErrorCode::kGenerateFailure, std::string("bad /generate image: ") + ex.what());
  }
}

struct BackendAdapterServer::Impl {
  std::shared_ptr<GeneratorBackend> backend;
  httplib::Server server;
  std::thread thread;

  static void fail(httplib::Response& res, const Error& e) {
    int status = 500;
    if (e.code() == ErrorCode::kSpaceMismatch || e.code() == ErrorCode::kDimensionMismatch ||
        e.code() == ErrorCode::kMalformedDocument || e.code() == ErrorCode::kUndecodableImage) {
      status = 400;
    } else if (e.code() == ErrorCode::kBackendUnavailable) {
      status = 503;
    }
    res.status = status;
    res.set_content(e.to_json().dump(), "application/json");
  }

  explicit Impl(std::shared_ptr<GeneratorBackend> b) : backend(std::move(b)) {
    server.Get("/info", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(backend->info().to_json().dump(), "application/json");
    });
    server.Post("/encode", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const LatentCode code = backend->encode(decode_image(as_bytes(req.body)));
        res.set_content(json({{"space_tag", code.space_tag}, {"vector", code.vector}}).dump(),
                        "application/json");
      } catch (const Error& e) {
        fail(res, e);
      }
    });
    server.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        LatentCode code;
        try {
          const json j = json::parse(req.body);
          code = {j.at("vector").get<std::vector<double>>(), j.at("space_tag").get<std::string>()};
        } catch (const json::exception& ex) {
          throw Error(ErrorCode::kMalformedDocument, ex.what());
        }
        res.set_content(as_string(encode_png(backend->generate(code))), "image/png");
      } catch (const Error& e) {
        fail(res, e);
      }
    });
  }
};

BackendAdapterServer::BackendAdapterServer(std::shared_ptr<GeneratorBackend> backend)
    : impl_(std::make_unique<Impl>(std::move(backend))) {}

BackendAdapterServer::~BackendAdapterServer() { stop(); }

int BackendAdapterServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : impl_->server.bind_to_port(host, port) ? port : -1;
  if (bound < 0) throw Error(ErrorCode::kInvalidConfig, "cannot bind backend adapter", {{"port", port}});
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void BackendAdapterServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kInvalidConfig, "cannot listen for backend adapter", {{"port", port}});
  }
}

void BackendAdapterServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace smile
