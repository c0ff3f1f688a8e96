// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "service/service.hpp"

#include "errors.hpp"
#include "inference/inference.hpp"
#include "io/png.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cstdio>

namespace autodrag {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& what) {
  reply(res, status, json{{"error", kind}, {"message", what}});
}

int status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kParameter:
    case ErrorKind::kShape:
    case ErrorKind::kParse:
    case ErrorKind::kFormat:
    case ErrorKind::kUsage:
      return 400;
    case ErrorKind::kNoCorrespondence:
    case ErrorKind::kUndefinedRatio:
      return 422;
    case ErrorKind::kState:
      return 409;
    default:
      return 500;
  }
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNoCorrespondence: return "no_correspondence";
    case ErrorKind::kState: return "state";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kTraining: return "training";
    case ErrorKind::kUndefinedRatio: return "undefined_ratio";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kUsage: return "usage";
  }
  return "internal";
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParameterError("request body must be a JSON object");
  return j;
}

}  // namespace

DragService::DragService(std::shared_ptr<const ModelBundle> models, std::string checkpoint_hash,
                         int session_ttl_seconds)
    : models_(std::move(models)), hash_(std::move(checkpoint_hash)), ttl_(session_ttl_seconds) {
  if (!models_ || !models_->generator || !models_->predictor) throw StateError("service needs a trained checkpoint");
  if (session_ttl_seconds < 1) throw ParameterError("session ttl must be >= 1 s");
}

DragService::~DragService() { stop(); }

std::size_t DragService::session_count() {
  std::lock_guard lock(mutex_);
  evict_locked();
  return sessions_.size();
}

void DragService::evict_locked() {
  const auto now = std::chrono::steady_clock::now();
  std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second.touched > ttl_; });
}

std::string DragService::new_id_locked() {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(derive_seed(0x5e55, next_id_++)));
  return buf;
}

void DragService::routes() {
  httplib::Server& s = *server_;
  const ToyGenerator& gen = *models_->generator;

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, status_for(e.kind()), kind_name(e.kind()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "parameter", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  });

  s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"status", "ok"}, {"checkpoint_hash", hash_}});
  });

  s.Post("/session", [this, &gen](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const std::uint64_t seed = body.value("seed", std::uint64_t{0});
    Rng rng(seed);
    Session sess;
    sess.seed = seed;
    sess.w = gen.sample_latent(rng);
    sess.png = encode_png(gen.render(sess.w));
    sess.touched = std::chrono::steady_clock::now();
    const std::string image = base64_encode(sess.png);
    std::string id;
    {
      std::lock_guard lock(mutex_);
      evict_locked();
      id = new_id_locked();
      sessions_[id] = std::move(sess);
    }
    reply(res, 200, json{{"session_id", id}, {"image", image}, {"resolution", gen.image_resolution()}});
  });

  s.Get(R"(/session/([0-9a-f]+))", [this, &gen](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    evict_locked();
    auto it = sessions_.find(req.matches[1]);
    if (it == sessions_.end()) return reply_error(res, 404, "not_found", "unknown session");
    it->second.touched = std::chrono::steady_clock::now();
    reply(res, 200,
          json{{"session_id", it->first},
               {"seed", it->second.seed},
               {"edits", it->second.edits},
               {"resolution", gen.image_resolution()},
               {"image", base64_encode(it->second.png)}});
  });

  s.Get(R"(/image/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    evict_locked();
    auto it = sessions_.find(req.matches[1]);
    if (it == sessions_.end()) return reply_error(res, 404, "not_found", "unknown session");
    it->second.touched = std::chrono::steady_clock::now();
    res.set_content(std::string(it->second.png.begin(), it->second.png.end()), "image/png");
  });

  s.Post(R"(/session/([0-9a-f]+)/edit)", [this, &gen](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    EditRequest er;
    if (!body.contains("pairs") || !body["pairs"].is_array()) throw ParameterError("pairs must be an array");
    for (const json& p : body["pairs"]) {
      er.pairs.push_back({{p.at("hx").get<double>(), p.at("hy").get<double>()},
                          {p.at("tx").get<double>(), p.at("ty").get<double>()}});
    }
    er.n_steps = body.value("n_steps", models_->config.inference.n_steps);
    er.rounds = body.value("rounds", models_->config.inference.rounds);
    er.keep_step_images = false;
    const std::string id = req.matches[1];
    {
      std::lock_guard lock(mutex_);
      evict_locked();
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return reply_error(res, 404, "not_found", "unknown session");
      it->second.touched = std::chrono::steady_clock::now();
      er.w0 = it->second.w;
    }
    const EditResult out = edit(EditModels{&gen, models_->predictor.get(), models_->regularizer.get()}, er);
    std::vector<std::uint8_t> png = encode_png(out.images.back());
    const std::string image = base64_encode(png);
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return reply_error(res, 404, "not_found", "session expired during the edit");
      it->second.w = out.w_final;
      it->second.png = std::move(png);
      ++it->second.edits;
      it->second.touched = std::chrono::steady_clock::now();
    }
    reply(res, 200,
          json{{"image", image},
               {"mdd_curve", out.mdd_curve},
               {"wall_time_ms", out.wall_time * 1000.0},
               {"step_count", out.trajectory.size() - 1},
               {"synthesis_calls", out.synthesis_calls}});
  });
}

int DragService::start(const std::string& host, int port) {
  if (server_) throw StateError("service already started");
  server_ = std::make_unique<httplib::Server>();
  // no SO_REUSEPORT: a second server on a busy port must fail to bind
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  routes();
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    server_.reset();
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void DragService::wait() {
  if (thread_.joinable()) thread_.join();
}

void DragService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace autodrag
