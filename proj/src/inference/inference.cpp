// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "inference/inference.hpp"

#include "errors.hpp"
#include "io/png.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace autodrag {

std::vector<Point> track_handles(const ToyGenerator& gen, const LatentCode& w0, const std::vector<Point>& handles,
                                 const LatentCode& w) {
  const SceneParams p0 = gen.decode_params(w0);
  const SceneParams p = gen.decode_params(w);
  std::vector<Point> out;
  out.reserve(handles.size());
  for (const Point& h : handles) out.push_back(gen.image_position(p, gen.object_coords(p0, h)));
  return out;
}

namespace {

// Oracle correspondences of an image with itself carry round-off of this order.
constexpr double kZeroDragTolerance = 1e-6;

double mean_gap(const std::vector<Point>& a, const std::vector<PointPair>& pairs) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += distance(a[i], pairs[i].target);
  return s / static_cast<double>(a.size());
}

void validate(const EditModels& m, const EditRequest& r) {
  if (m.generator == nullptr || m.predictor == nullptr) throw StateError("edit: models are not loaded");
  if (r.pairs.empty()) throw ParameterError("edit: at least one point pair is required");
  if (r.n_steps < 1 || r.n_steps > m.predictor->config().max_positions) {
    throw ParameterError("edit: n_steps must lie in [1, " + std::to_string(m.predictor->config().max_positions) + "]");
  }
  if (r.rounds < 1) throw ParameterError("edit: rounds must be >= 1");
  const GeneratorConfig& gc = m.generator->config();
  if (r.w0.layers() != gc.layers || r.w0.dim() != gc.latent_dim) throw ShapeError("edit: w0 shape mismatch");
  const SceneParams p0 = m.generator->decode_params(r.w0);
  for (const PointPair& p : r.pairs) {
    if (!in_image(p.handle, gc.image_resolution) || !in_image(p.target, gc.image_resolution)) {
      throw ParameterError("edit: point outside the image");
    }
    if (m.generator->mask_at(p0, p.handle) <= 0.5) {
      std::ostringstream msg;
      msg << "edit: handle (" << p.handle.x << ", " << p.handle.y << ") is not on the object";
      throw NoCorrespondenceError(msg.str());
    }
  }
}

}  // namespace

EditResult edit(const EditModels& models, const EditRequest& request) {
  validate(models, request);
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t synth0 = synthesis_calls();
  const std::uint64_t grad0 = ag::gradient_evaluations();
  const ToyGenerator& gen = *models.generator;
  const int l = gen.config().layers;

  EditResult res;
  std::vector<Point> handles;
  for (const PointPair& p : request.pairs) handles.push_back(p.handle);
  res.trajectory.codes.push_back(request.w0);
  const double md0 = mean_gap(handles, request.pairs);
  res.md_curve.push_back(md0);
  res.mdd_curve.push_back(1.0);

  bool zero_drag = true;
  for (const PointPair& p : request.pairs) zero_drag = zero_drag && p.distance() < kZeroDragTolerance;

  if (zero_drag) {
    // Nothing to move: the edit is the identity.
    Synthesis s = gen.synthesize(request.w0);
    for (int k = 0; k < request.rounds * request.n_steps; ++k) {
      res.trajectory.codes.push_back(request.w0);
      res.md_curve.push_back(0.0);
      res.mdd_curve.push_back(1.0);
      if (request.keep_step_images) res.images.push_back(s.image);
    }
    res.images.insert(res.images.begin(), std::move(s.image));
    if (!request.keep_step_images) res.images.push_back(res.images.front());
  } else {
    LatentCode current = request.w0;
    for (int round = 0; round < request.rounds; ++round) {
      // Handles are re-derived from the object frame at the start of every round.
      const std::vector<Point> now = track_handles(gen, request.w0, handles, current);
      std::vector<PointPair> pairs;
      for (std::size_t i = 0; i < now.size(); ++i) {
        if (in_image(now[i], gen.image_resolution())) pairs.push_back({now[i], request.pairs[i].target});
      }
      if (pairs.empty()) throw NoCorrespondenceError("edit: every tracked handle left the image");
      Synthesis s0 = gen.synthesize(current);
      if (round == 0 && request.keep_step_images) res.images.push_back(std::move(s0.image));

      ag::Tape t(false);
      const Memory mem = models.predictor->encode(t, {ContextInput{&s0.feature, pairs}});
      std::vector<LatentCode> codes{current};
      for (int k = 1; k <= request.n_steps; ++k) {
        const Matrix out =
            models.predictor->predict(t, mem, t.constant(stack_latents(codes)), 1, k, models.regularizer).value();
        codes.emplace_back(out.bottomRows(l));
        const LatentCode& w = codes.back();
        res.trajectory.codes.push_back(w);
        const double md = mean_gap(track_handles(gen, request.w0, handles, w), request.pairs);
        res.md_curve.push_back(md);
        res.mdd_curve.push_back(md / md0);
        const bool last = round + 1 == request.rounds && k == request.n_steps;
        if (request.keep_step_images || last) res.images.push_back(gen.synthesize(w).image);
      }
      current = codes.back();
    }
  }
  res.w_final = res.trajectory.back();
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.synthesis_calls = synthesis_calls() - synth0;
  res.gradient_evaluations = ag::gradient_evaluations() - grad0;
  return res;
}

void save_edit_result(const EditResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / "trajectory.bin", std::ios::binary);
    if (!f) throw IoError("cannot write trajectory.bin in " + dir);
    const char magic[8] = {'A', 'D', 'R', 'G', 'T', 'R', 'J', '1'};
    f.write(magic, 8);
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(result.trajectory.size()),
                                     static_cast<std::uint32_t>(result.w_final.layers()),
                                     static_cast<std::uint32_t>(result.w_final.dim())};
    f.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const LatentCode& c : result.trajectory.codes) {
      f.write(reinterpret_cast<const char*>(c.values.data()), static_cast<std::streamsize>(c.values.size() * 8));
    }
  }
  for (std::size_t i = 0; i < result.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%03zu.png", i);
    write_png((fs::path(dir) / name).string(), result.images[i]);
  }
  {
    std::ofstream f(fs::path(dir) / "mdd.csv");
    f << "step,md,mdd\n" << std::setprecision(10);
    for (std::size_t i = 0; i < result.mdd_curve.size(); ++i) {
      f << i << ',' << result.md_curve[i] << ',' << result.mdd_curve[i] << '\n';
    }
  }
  nlohmann::json meta{{"schema", "autodrag.edit_result/1"},
                      {"steps", result.trajectory.size() - 1},
                      {"images", result.images.size()},
                      {"final_mdd", result.mdd_curve.back()},
                      {"wall_time_s", result.wall_time},
                      {"synthesis_calls", result.synthesis_calls},
                      {"gradient_evaluations", result.gradient_evaluations}};
  std::ofstream f(fs::path(dir) / "meta");
  f << meta.dump(2) << '\n';
}

}  // namespace autodrag
