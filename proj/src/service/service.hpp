// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP front end: sessions hold a current latent; edits roll the predictor
// out from it. Models are shared and read-only after load.

#pragma once

#include "io/checkpoint.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace autodrag {

class DragService {
 public:
  DragService(std::shared_ptr<const ModelBundle> models, std::string checkpoint_hash, int session_ttl_seconds);
  ~DragService();
  DragService(const DragService&) = delete;
  DragService& operator=(const DragService&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Port 0 picks a free one. Throws IoError when the address cannot be bound.
  int start(const std::string& host, int port);
  // Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

  std::size_t session_count();

 private:
  struct Session {
    std::uint64_t seed = 0;
    LatentCode w;
    std::vector<std::uint8_t> png;
    int edits = 0;
    std::chrono::steady_clock::time_point touched;
  };

  void routes();
  void evict_locked();
  std::string new_id_locked();

  std::shared_ptr<const ModelBundle> models_;
  std::string hash_;
  std::chrono::seconds ttl_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex mutex_;
  std::unordered_map<std::string, Session> sessions_;
  std::uint64_t next_id_ = 0;
};

}  // namespace autodrag
