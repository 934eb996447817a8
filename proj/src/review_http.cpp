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

#include "til/review_http.hpp"

#include <charconv>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "til/error.hpp"

namespace til {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kUnavailable: return 422;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kValueOutOfRange:
    case ErrorCode::kMalformedFile: return 400;
    default: return 500;
  }
}

namespace {

double parse_real(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) {
    fail(ErrorCode::kInvalidArgument, std::string("missing query parameter '") + key + "'");
  }
  const std::string v = req.get_param_value(key);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::kInvalidArgument, std::string("'") + key + "' is not a number");
  }
  return out;
}

long long parse_int(const httplib::Request& req, const char* key, long long dflt) {
  if (!req.has_param(key)) return dflt;
  const std::string v = req.get_param_value(key);
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::kInvalidArgument, std::string("'") + key + "' is not an integer");
  }
  return out;
}

json session_json(const ReviewSession& s) {
  json j = {{"session_id", s.session_id},
            {"map_id", s.map_id},
            {"current_threshold", s.current_threshold},
            {"status", std::string(to_string(s.status))},
            {"committed_manifest", nullptr}};
  if (s.committed_manifest) j["committed_manifest"] = s.committed_manifest->string();
  return j;
}

json sample_json(const PatchSample& s) {
  return {{"grid_x", s.grid_x},
          {"grid_y", s.grid_y},
          {"prob", s.prob},
          {"png_base64",
           httplib::detail::base64_encode(std::string(s.png.begin(), s.png.end()))}};
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply(res, http_status(e.code()),
            {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", {{"code", "invalid_argument"}, {"message", e.what()}}}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
    }
  };
}

}  // namespace

struct ReviewHttpServer::Impl {
  ReviewService& service;
  httplib::Server server;
};

ReviewHttpServer::ReviewHttpServer(ReviewService& service,
                                   std::optional<std::filesystem::path> static_dir)
    : impl_(new Impl{service, {}}) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  constexpr const char* kId = "([A-Za-z0-9._-]+)";

  srv.Get("/v1/maps", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    json maps = json::array();
    for (const auto& m : svc.list_maps()) {
      maps.push_back({{"map_id", m.map_id},
                      {"slide_id", m.slide_id},
                      {"cancer_type", m.cancer_type ? json(std::string(to_string(*m.cancer_type)))
                                                    : json(nullptr)},
                      {"n_cells", m.n_cells},
                      {"status", m.status}});
    }
    reply(res, 200, {{"maps", maps}});
  }));

  srv.Get(std::string("/v1/maps/") + kId,
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const bool full = req.has_param("full") && req.get_param_value("full") == "true";
            const auto p = svc.get_map(req.matches[1], full);
            json j = {{"map_id", p.map_id},
                      {"slide_id", p.map->slide_id},
                      {"model_id", p.map->model_id},
                      {"created_at", p.map->created_at},
                      {"patch_px", p.map->patch_px},
                      {"n_cols", p.map->n_cols},
                      {"n_rows", p.map->n_rows},
                      {"preview",
                       {{"n_cols", p.preview_cols},
                        {"n_rows", p.preview_rows},
                        {"factor", p.factor},
                        {"values", p.preview}}}};
            if (full) j["full"] = p.map->probs;
            reply(res, 200, j);
          }));

  srv.Get(std::string("/v1/maps/") + kId + "/preview",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto p = svc.preview_threshold(req.matches[1], parse_real(req, "t"));
            reply(res, 200,
                  {{"map_id", std::string(req.matches[1])},
                   {"t", p.threshold},
                   {"positive_count", p.positive_count},
                   {"n_cells", p.n_cells},
                   {"positive_fraction", p.positive_fraction},
                   {"binary_preview",
                    {{"n_cols", p.preview_cols},
                     {"n_rows", p.preview_rows},
                     {"cells", p.binary_preview}}}});
          }));

  srv.Get(std::string("/v1/maps/") + kId + "/patches",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const double t = parse_real(req, "t");
            const auto n = parse_int(req, "n", 4);
            if (n < 0 || n > 1000) fail(ErrorCode::kInvalidArgument, "n must lie in [0, 1000]");
            const auto s = svc.sample_patches(req.matches[1], t, static_cast<int>(n));
            json pos = json::array(), neg = json::array();
            for (const auto& p : s.positives) pos.push_back(sample_json(p));
            for (const auto& p : s.negatives) neg.push_back(sample_json(p));
            reply(res, 200,
                  {{"map_id", std::string(req.matches[1])},
                   {"t", t},
                   {"positives", pos},
                   {"negatives", neg}});
          }));

  srv.Post("/v1/sessions",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = json::parse(req.body);
             if (!body.contains("map_id") || !body["map_id"].is_string()) {
               fail(ErrorCode::kInvalidArgument, "body needs a string map_id");
             }
             reply(res, 201, session_json(svc.create_session(body["map_id"].get<std::string>())));
           }));

  srv.Get(std::string("/v1/sessions/") + kId,
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            reply(res, 200, session_json(svc.session(req.matches[1])));
          }));

  srv.Post(std::string("/v1/sessions/") + kId + "/commit",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = json::parse(req.body);
             if (!body.contains("t") || !body["t"].is_number()) {
               fail(ErrorCode::kInvalidArgument, "body needs a numeric t");
             }
             long long n = 0;
             if (body.contains("n_samples")) {
               const auto& v = body["n_samples"];
               if (v.is_string() && v.get<std::string>() == "ALL") {
                 n = 0;
               } else if (v.is_number_integer() && v.get<long long>() > 0) {
                 n = v.get<long long>();
               } else {
                 fail(ErrorCode::kInvalidArgument, "n_samples must be a positive integer or \"ALL\"");
               }
             }
             const auto seed = body.value("seed", std::uint64_t{0});
             HarvestMode mode = HarvestMode::kUniform;
             if (body.value("mode", std::string("uniform")) == "stratified") {
               mode = HarvestMode::kStratified;
             }
             const auto r = svc.commit(req.matches[1], body["t"].get<double>(), n, seed, mode);
             json j = session_json(r.session);
             j["n_records"] = r.n_records;
             reply(res, 200, j);
           }));

  if (static_dir) srv.set_mount_point("/", static_dir->string());
}

ReviewHttpServer::~ReviewHttpServer() { stop(); }

int ReviewHttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    fail(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

bool ReviewHttpServer::serve() { return impl_->server.listen_after_bind(); }

void ReviewHttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ReviewHttpServer::is_running() const { return impl_->server.is_running(); }

void ReviewHttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace til
