// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "io/png.hpp"
#include "service/service.hpp"
#include "small_models.hpp"

#include "httplib.h"
#include "json.hpp"

#include <gtest/gtest.h>

namespace autodrag {
namespace {

using nlohmann::json;

std::shared_ptr<const ModelBundle> small_bundle() {
  return std::make_shared<ModelBundle>(ModelBundle::create(testing::small_run_config(), true, true));
}

TEST(Service, SessionLifecycle) {
  DragService service(small_bundle(), "abc123", 3600);
  const int port = service.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(json::parse(health->body), (json{{"status", "ok"}, {"checkpoint_hash", "abc123"}}));

  auto created = cli.Post("/session", R"({"seed": 3})", "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 200);
  const json s = json::parse(created->body);
  const std::string id = s["session_id"];
  EXPECT_EQ(s["resolution"], 64);
  EXPECT_EQ(service.session_count(), 1u);

  auto img = cli.Get("/image/" + id);
  ASSERT_TRUE(img);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  const Image decoded = decode_png(std::vector<std::uint8_t>(img->body.begin(), img->body.end()));
  EXPECT_EQ(decoded.width, 64);

  // zero drag leaves the image pixel-identical
  const auto keep = small_bundle();
  const ModelBundle& b = *keep;
  Rng rng(3);
  const Point h = b.generator->keypoints(b.generator->sample_latent(rng), 1)[0];
  const json zero{{"pairs", {{{"hx", h.x}, {"hy", h.y}, {"tx", h.x}, {"ty", h.y}}}}};
  auto edited = cli.Post("/session/" + id + "/edit", zero.dump(), "application/json");
  ASSERT_TRUE(edited);
  ASSERT_EQ(edited->status, 200) << edited->body;
  const json e = json::parse(edited->body);
  EXPECT_EQ(e["mdd_curve"][0], 1.0);
  EXPECT_EQ(e["step_count"], 5);
  EXPECT_EQ(e["image"], s["image"]);

  const json drag{{"pairs", {{{"hx", h.x}, {"hy", h.y}, {"tx", h.x + 6}, {"ty", h.y}}}}, {"n_steps", 3}};
  auto moved = cli.Post("/session/" + id + "/edit", drag.dump(), "application/json");
  ASSERT_TRUE(moved);
  ASSERT_EQ(moved->status, 200) << moved->body;
  EXPECT_EQ(json::parse(moved->body)["mdd_curve"].size(), 4u);

  auto info = cli.Get("/session/" + id);
  ASSERT_TRUE(info);
  EXPECT_EQ(json::parse(info->body)["edits"], 2);
  service.stop();
}

TEST(Service, Errors) {
  DragService service(small_bundle(), "h", 3600);
  const int port = service.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);
  EXPECT_EQ(cli.Get("/session/0123")->status, 404);
  EXPECT_EQ(cli.Get("/image/0123")->status, 404);
  const std::string id = json::parse(cli.Post("/session", "{}", "application/json")->body)["session_id"];
  auto bad = cli.Post("/session/" + id + "/edit", "{nope", "application/json");
  EXPECT_EQ(bad->status, 400);
  auto background = cli.Post("/session/" + id + "/edit", R"({"pairs":[{"hx":0.5,"hy":0.5,"tx":3,"ty":3}]})",
                             "application/json");
  EXPECT_EQ(background->status, 422);
  EXPECT_EQ(json::parse(background->body)["error"], "no_correspondence");

  DragService clash(small_bundle(), "h", 3600);
  EXPECT_THROW(clash.start("127.0.0.1", port), IoError);
  service.stop();
}

TEST(Service, SessionsExpire) {
  DragService service(small_bundle(), "h", 1);
  const int port = service.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);
  cli.Post("/session", "{}", "application/json");
  EXPECT_EQ(service.session_count(), 1u);
  std::this_thread::sleep_for(std::chrono::milliseconds(2100));
  EXPECT_EQ(service.session_count(), 0u);
  service.stop();
}

TEST(Service, NeedsPredictor) {
  auto b = std::make_shared<ModelBundle>(ModelBundle::create(testing::small_run_config(), true, false));
  EXPECT_THROW(DragService(b, "h", 10), StateError);
}

}  // namespace
}  // namespace autodrag
