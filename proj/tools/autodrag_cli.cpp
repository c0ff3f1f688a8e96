// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "autodrag/autodrag.h"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Freed {
  void operator()(void* p) const { ad_free(p); }
};
using CString = std::unique_ptr<char, Freed>;

int fail(ad_status s) {
  std::cerr << "autodrag: " << ad_status_name(s) << ": " << ad_last_error() << "\n";
  return s == AD_ERR_USAGE ? 2 : 1;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void on_progress(void*, int stage, int epoch, double loss, const char* detail) {
  std::fprintf(stderr, "stage %d epoch %3d loss %.6g %s\n", stage, epoch, loss, detail);
}

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out = "runs/default";
};

int resolved_config(const Globals& g, CString& out) {
  const std::string text = g.config.empty() ? std::string() : read_file(g.config);
  char* json = nullptr;
  const ad_status s = ad_normalise_config(text.c_str(), g.seed, &json);
  if (s != AD_OK) return fail(s);
  out.reset(json);
  return 0;
}

class Model {
 public:
  explicit Model(const std::string& path) { status_ = ad_model_load(path.c_str(), &m_); }
  ~Model() { ad_model_free(m_); }
  ad_status status() const { return status_; }
  ad_model* get() const { return m_; }

 private:
  ad_model* m_ = nullptr;
  ad_status status_ = AD_OK;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autodrag: single-pass latent drag editing"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "run config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "global seed; 0 keeps the config's seeds");
  app.add_flag("--deterministic", g.deterministic, "single-threaded, seed-reproducible execution");
  app.add_option("--out", g.out, "output directory");

  auto* tr = app.add_subcommand("train-regularizer", "stage 1: pre-train the latent regularizer");
  auto* tp = app.add_subcommand("train-predictor", "stage 2: train predictor and regularizer jointly");
  std::string stage1;
  tp->add_option("--stage1", stage1, "stage-1 checkpoint")->required();

  auto* ev = app.add_subcommand("eval", "run an evaluation protocol");
  std::string checkpoint, protocol;
  ev->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  ev->add_option("--protocol", protocol, "landmark | paired | mdd | ablation-n")->required();

  auto* ed = app.add_subcommand("edit", "drag-edit the image of a seed");
  std::string points;
  int n_steps = 0, rounds = 0;
  ed->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  ed->add_option("--points", points, "points file, one 'hx hy tx ty' per line")->required();
  ed->add_option("--n-steps", n_steps, "rollout steps (default from checkpoint)");
  ed->add_option("--rounds", rounds, "outer rounds (default from checkpoint)");

  auto* sa = app.add_subcommand("sample", "render the image of a seed and list its keypoints");
  int keypoints = 12;
  sa->add_option("--checkpoint", checkpoint, "checkpoint")->required();
  sa->add_option("--keypoints", keypoints, "number of keypoints to list (1-12)");

  auto* sv = app.add_subcommand("serve", "HTTP editing service");
  std::string host = "127.0.0.1";
  int port = 0;
  sv->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  sv->add_option("--host", host, "bind address");
  sv->add_option("--port", port, "port (default from checkpoint config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tr->parsed() || tp->parsed()) {
      CString cfg;
      if (int rc = resolved_config(g, cfg)) return rc;
      std::filesystem::create_directories(g.out);
      const std::string stage = tr->parsed() ? "stage1" : "stage2";
      const std::string ckpt = (std::filesystem::path(g.out) / (stage + ".ckpt")).string();
      const std::string curve = (std::filesystem::path(g.out) / (stage + "_curve.csv")).string();
      std::ofstream(std::filesystem::path(g.out) / "config.json") << cfg.get() << "\n";
      const ad_status s =
          tr->parsed()
              ? ad_train_regularizer(cfg.get(), ckpt.c_str(), curve.c_str(), on_progress, nullptr)
              : ad_train_predictor(g.config.empty() && g.seed == 0 ? nullptr : cfg.get(), stage1.c_str(),
                                   ckpt.c_str(), curve.c_str(), on_progress, nullptr);
      if (s != AD_OK) return fail(s);
      std::cout << ckpt << "\n";
      return 0;
    }

    Model model(checkpoint);
    if (model.status() != AD_OK) return fail(model.status());

    if (ev->parsed()) {
      char* summary = nullptr;
      const ad_status s =
          ad_evaluate(model.get(), protocol.c_str(), g.out.c_str(), g.seed, on_progress, nullptr, &summary);
      if (s != AD_OK) return fail(s);
      CString keep(summary);
      std::cout << summary << "\n";
      return 0;
    }

    int layers = 0, dim = 0;
    ad_model_latent_shape(model.get(), &layers, &dim);
    std::vector<double> w0(static_cast<std::size_t>(layers) * dim);
    if (ed->parsed() || sa->parsed()) {
      const ad_status s = ad_model_sample_latent(model.get(), g.seed, w0.data(), w0.size());
      if (s != AD_OK) return fail(s);
    }

    if (sa->parsed()) {
      std::filesystem::create_directories(g.out);
      const std::string png = (std::filesystem::path(g.out) / "image.png").string();
      ad_status s = ad_model_render_png(model.get(), w0.data(), w0.size(), png.c_str());
      if (s != AD_OK) return fail(s);
      std::vector<double> k(2 * static_cast<std::size_t>(std::max(keypoints, 0)));
      s = ad_model_keypoints(model.get(), w0.data(), w0.size(), keypoints, k.data());
      if (s != AD_OK) return fail(s);
      // zero-length drags; edit the targets to make a points file
      std::ofstream f(std::filesystem::path(g.out) / "keypoints.txt");
      f << "# hx hy tx ty\n";
      for (int i = 0; i < keypoints; ++i) {
        f << k[2 * i] << ' ' << k[2 * i + 1] << ' ' << k[2 * i] << ' ' << k[2 * i + 1] << '\n';
      }
      std::cout << png << "\n";
      return 0;
    }

    if (ed->parsed()) {
      double* raw = nullptr;
      std::size_t n_pairs = 0;
      ad_status s = ad_read_points(points.c_str(), &raw, &n_pairs);
      if (s != AD_OK) return fail(s);
      std::unique_ptr<double, Freed> pairs(raw);
      ad_result* result = nullptr;
      s = ad_edit(model.get(), w0.data(), w0.size(), pairs.get(), n_pairs, n_steps, rounds, &result);
      if (s != AD_OK) return fail(s);
      std::unique_ptr<ad_result, decltype(&ad_result_free)> keep(result, ad_result_free);
      s = ad_result_save(result, g.out.c_str());
      if (s != AD_OK) return fail(s);
      std::vector<double> curve(ad_result_mdd(result, nullptr, 0));
      ad_result_mdd(result, curve.data(), curve.size());
      std::printf("steps %zu  final mdd %.4f  synthesis calls %llu  %.1f ms\n", ad_result_steps(result),
                  curve.back(), static_cast<unsigned long long>(ad_result_synthesis_calls(result)),
                  ad_result_wall_time(result) * 1000.0);
      return 0;
    }

    if (sv->parsed()) {
      std::fprintf(stderr, "serving checkpoint %.12s\n", ad_model_hash(model.get()));
      const ad_status s = ad_serve(model.get(), host.c_str(), port);
      if (s != AD_OK) return fail(s);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "autodrag: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
