// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "autodrag/autodrag.h"

#include "errors.hpp"
#include "evaluation/evaluation.hpp"
#include "io/checkpoint.hpp"
#include "io/hash.hpp"
#include "io/png.hpp"
#include "service/service.hpp"

#include "json.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <new>

struct ad_model {
  std::shared_ptr<autodrag::ModelBundle> bundle;
  std::string hash;
};

struct ad_result {
  autodrag::EditResult result;
};

namespace {

using namespace autodrag;

thread_local std::string t_last_error;

ad_status to_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::kParameter: return AD_ERR_PARAMETER;
    case ErrorKind::kShape: return AD_ERR_SHAPE;
    case ErrorKind::kNoCorrespondence: return AD_ERR_NO_CORRESPONDENCE;
    case ErrorKind::kState: return AD_ERR_STATE;
    case ErrorKind::kIo: return AD_ERR_IO;
    case ErrorKind::kFormat: return AD_ERR_FORMAT;
    case ErrorKind::kTraining: return AD_ERR_TRAINING;
    case ErrorKind::kUndefinedRatio: return AD_ERR_UNDEFINED_RATIO;
    case ErrorKind::kParse: return AD_ERR_PARSE;
    case ErrorKind::kUsage: return AD_ERR_USAGE;
  }
  return AD_ERR_INTERNAL;
}

template <typename F>
ad_status guarded(F&& f) {
  t_last_error.clear();
  try {
    f();
    return AD_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
  } catch (const std::exception& e) {
    t_last_error = e.what();
  }
  return AD_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ParameterError(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RunConfig parse_config(const char* json_in) {
  RunConfig cfg = json_in == nullptr || *json_in == '\0' ? RunConfig{} : config_from_json(json_in);
  cfg.normalise();
  return cfg;
}

LatentCode latent_from(const ModelBundle& b, const double* w, std::size_t count) {
  require(w, "latent");
  const GeneratorConfig& gc = b.config.generator;
  if (count != static_cast<std::size_t>(gc.layers) * gc.latent_dim) throw ShapeError("latent has the wrong size");
  Matrix m(gc.layers, gc.latent_dim);
  std::memcpy(m.data(), w, count * sizeof(double));
  return LatentCode(std::move(m));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

extern "C" {

const char* ad_version(void) { return "0.1.0"; }
const char* ad_last_error(void) { return t_last_error.c_str(); }
void ad_free(void* p) { std::free(p); }

const char* ad_status_name(ad_status status) {
  switch (status) {
    case AD_OK: return "ok";
    case AD_ERR_PARAMETER: return "parameter error";
    case AD_ERR_SHAPE: return "shape error";
    case AD_ERR_NO_CORRESPONDENCE: return "no correspondence";
    case AD_ERR_STATE: return "state error";
    case AD_ERR_IO: return "io error";
    case AD_ERR_FORMAT: return "format error";
    case AD_ERR_TRAINING: return "training error";
    case AD_ERR_UNDEFINED_RATIO: return "undefined ratio";
    case AD_ERR_PARSE: return "parse error";
    case AD_ERR_USAGE: return "usage error";
    case AD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ad_status ad_default_config(char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    RunConfig cfg;
    cfg.normalise();
    *json_out = dup_string(config_to_json(cfg));
  });
}

ad_status ad_normalise_config(const char* json_in, uint64_t seed, char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    RunConfig cfg = parse_config(json_in);
    if (seed != 0) cfg.reseed(seed);
    cfg.normalise();
    *json_out = dup_string(config_to_json(cfg));
  });
}

ad_status ad_train_regularizer(const char* config_json, const char* checkpoint_out, const char* curve_csv,
                               ad_progress_fn progress, void* user) {
  return guarded([&] {
    require(checkpoint_out, "checkpoint_out");
    const RunConfig cfg = parse_config(config_json);
    ModelBundle b = ModelBundle::create(cfg, true, false);
    const Stage1Result r = train_stage1(*b.generator, *b.regularizer, cfg.stage1, [&](int epoch, double loss) {
      if (progress != nullptr) progress(user, 1, epoch, loss, "");
    });
    ensure_parent(checkpoint_out);
    save_checkpoint(checkpoint_out, b);
    if (curve_csv != nullptr) {
      ensure_parent(curve_csv);
      std::ostringstream csv;
      csv << std::setprecision(10) << "epoch,l1\n";
      for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) csv << i << ',' << r.epoch_loss[i] << '\n';
      write_text(curve_csv, csv.str());
    }
  });
}

ad_status ad_train_predictor(const char* config_json, const char* stage1_checkpoint, const char* checkpoint_out,
                             const char* curve_csv, ad_progress_fn progress, void* user) {
  return guarded([&] {
    require(stage1_checkpoint, "stage1_checkpoint");
    require(checkpoint_out, "checkpoint_out");
    if (!std::filesystem::exists(stage1_checkpoint)) {
      throw IoError(std::string("stage-1 checkpoint not found: ") + stage1_checkpoint);
    }
    ModelBundle s1 = load_checkpoint(stage1_checkpoint);
    if (!s1.regularizer) throw StateError("checkpoint has no trained regularizer");
    const RunConfig cfg = config_json == nullptr || *config_json == '\0' ? s1.config : parse_config(config_json);
    if (!(cfg.generator == s1.config.generator) || !(cfg.regularizer == s1.config.regularizer)) {
      throw ParameterError("config does not match the stage-1 checkpoint's generator or regularizer");
    }
    ModelBundle b = ModelBundle::create(cfg, true, true);
    b.regularizer->params().copy_values_from(s1.regularizer->params());
    const Stage2Result r = train_stage2(*b.generator, *b.predictor, *b.regularizer, cfg.stage2,
                                        [&](const Stage2Epoch& e) {
                                          if (progress == nullptr) return;
                                          std::ostringstream d;
                                          d << "l_pred=" << e.l_pred << " l_drag=" << e.l_drag << " lr=" << e.lr;
                                          progress(user, 2, e.epoch, e.total, d.str().c_str());
                                        });
    ensure_parent(checkpoint_out);
    save_checkpoint(checkpoint_out, b);
    if (curve_csv != nullptr) {
      ensure_parent(curve_csv);
      std::ostringstream csv;
      csv << std::setprecision(10) << "epoch,l_pred,l_drag,total,lr\n";
      for (const Stage2Epoch& e : r.curve) {
        csv << e.epoch << ',' << e.l_pred << ',' << e.l_drag << ',' << e.total << ',' << e.lr << '\n';
      }
      write_text(curve_csv, csv.str());
    }
  });
}

ad_status ad_model_load(const char* path, ad_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<ad_model>();
    m->bundle = std::make_shared<ModelBundle>(load_checkpoint(path));
    m->hash = sha256_file(path);
    *out = m.release();
  });
}

void ad_model_free(ad_model* model) { delete model; }

const char* ad_model_hash(const ad_model* model) { return model == nullptr ? "" : model->hash.c_str(); }

ad_status ad_model_config(const ad_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    *json_out = dup_string(config_to_json(model->bundle->config));
  });
}

int ad_model_resolution(const ad_model* model) {
  return model == nullptr ? 0 : model->bundle->config.generator.image_resolution;
}

void ad_model_latent_shape(const ad_model* model, int* layers, int* dim) {
  if (model == nullptr) return;
  if (layers != nullptr) *layers = model->bundle->config.generator.layers;
  if (dim != nullptr) *dim = model->bundle->config.generator.latent_dim;
}

ad_status ad_model_sample_latent(const ad_model* model, uint64_t seed, double* out, size_t count) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    Rng rng(seed);
    const LatentCode w = model->bundle->generator->sample_latent(rng);
    if (count != static_cast<std::size_t>(w.values.size())) throw ShapeError("output buffer has the wrong size");
    std::memcpy(out, w.values.data(), count * sizeof(double));
  });
}

ad_status ad_model_render_png(const ad_model* model, const double* w, size_t count, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    const ModelBundle& b = *model->bundle;
    ensure_parent(path);
    write_png(path, b.generator->render(latent_from(b, w, count)));
  });
}

ad_status ad_model_keypoints(const ad_model* model, const double* w, size_t count, int n, double* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    if (n < 1 || n > 12) throw ParameterError("keypoint count must lie in [1, 12]");
    const ModelBundle& b = *model->bundle;
    const std::vector<Point> k = b.generator->keypoints(latent_from(b, w, count), 12);
    for (int i = 0; i < n; ++i) {
      out[2 * i] = k[static_cast<std::size_t>(i)].x;
      out[2 * i + 1] = k[static_cast<std::size_t>(i)].y;
    }
  });
}

ad_status ad_edit(const ad_model* model, const double* w0, size_t w0_count, const double* pairs, size_t n_pairs,
                  int n_steps, int rounds, ad_result** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    if (n_pairs > 0) require(pairs, "pairs");
    const ModelBundle& b = *model->bundle;
    if (!b.predictor) throw StateError("checkpoint has no trained predictor");
    EditRequest req;
    req.w0 = latent_from(b, w0, w0_count);
    for (std::size_t i = 0; i < n_pairs; ++i) {
      req.pairs.push_back({{pairs[4 * i], pairs[4 * i + 1]}, {pairs[4 * i + 2], pairs[4 * i + 3]}});
    }
    req.n_steps = n_steps > 0 ? n_steps : b.config.inference.n_steps;
    req.rounds = rounds > 0 ? rounds : b.config.inference.rounds;
    auto r = std::make_unique<ad_result>();
    r->result = edit(EditModels{b.generator.get(), b.predictor.get(), b.regularizer.get()}, req);
    *out = r.release();
  });
}

ad_status ad_read_points(const char* path, double** pairs_out, size_t* n_pairs_out) {
  return guarded([&] {
    require(path, "path");
    require(pairs_out, "pairs_out");
    require(n_pairs_out, "n_pairs_out");
    const std::vector<PointPair> pairs = read_points_file(path);
    double* buf = static_cast<double*>(std::malloc(std::max<std::size_t>(1, pairs.size()) * 4 * sizeof(double)));
    if (buf == nullptr) throw std::bad_alloc();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      buf[4 * i] = pairs[i].handle.x;
      buf[4 * i + 1] = pairs[i].handle.y;
      buf[4 * i + 2] = pairs[i].target.x;
      buf[4 * i + 3] = pairs[i].target.y;
    }
    *pairs_out = buf;
    *n_pairs_out = pairs.size();
  });
}

void ad_result_free(ad_result* result) { delete result; }

size_t ad_result_steps(const ad_result* result) {
  return result == nullptr ? 0 : result->result.trajectory.size() - 1;
}

size_t ad_result_mdd(const ad_result* result, double* out, size_t capacity) {
  if (result == nullptr) return 0;
  const auto& c = result->result.mdd_curve;
  for (std::size_t i = 0; out != nullptr && i < std::min(capacity, c.size()); ++i) out[i] = c[i];
  return c.size();
}

double ad_result_wall_time(const ad_result* result) { return result == nullptr ? 0.0 : result->result.wall_time; }

uint64_t ad_result_synthesis_calls(const ad_result* result) {
  return result == nullptr ? 0 : result->result.synthesis_calls;
}

uint64_t ad_result_gradient_evaluations(const ad_result* result) {
  return result == nullptr ? 0 : result->result.gradient_evaluations;
}

ad_status ad_result_final_latent(const ad_result* result, double* out, size_t count) {
  return guarded([&] {
    require(result, "result");
    require(out, "out");
    const Matrix& w = result->result.w_final.values;
    if (count != static_cast<std::size_t>(w.size())) throw ShapeError("output buffer has the wrong size");
    std::memcpy(out, w.data(), count * sizeof(double));
  });
}

ad_status ad_result_save(const ad_result* result, const char* dir) {
  return guarded([&] {
    require(result, "result");
    require(dir, "dir");
    save_edit_result(result->result, dir);
  });
}

ad_status ad_evaluate(const ad_model* model, const char* protocol, const char* out_dir, uint64_t seed,
                      ad_progress_fn progress, void* user, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(protocol, "protocol");
    require(out_dir, "out_dir");
    const ModelBundle& b = *model->bundle;
    const std::string p = protocol;
    if (p != "landmark" && p != "paired" && p != "mdd" && p != "ablation-n") {
      throw UsageError("unknown protocol '" + p + "' (landmark, paired, mdd, ablation-n)");
    }
    const EvaluationConfig& ec = b.config.evaluation;
    const std::uint64_t s = seed != 0 ? seed : ec.seed;
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::vector<MetricReport> reports;
    if (p == "ablation-n") {
      if (!b.regularizer) throw StateError("checkpoint has no trained regularizer");
      RunConfig base = b.config;
      base.evaluation.seed = s;
      std::vector<AblationVariant> variants;
      for (int n : ec.ablation_n) variants.push_back({"n" + std::to_string(n), n, true});
      variants.push_back({"n" + std::to_string(base.stage2.n) + "_no_regularizer", base.stage2.n, false});
      reports = ablation_eval(*b.generator, *b.regularizer, base, variants,
                              [&](const std::string& v, const Stage2Epoch& e) {
                                if (progress != nullptr) progress(user, 2, e.epoch, e.total, v.c_str());
                              });
    } else {
      if (!b.predictor) throw StateError("checkpoint has no trained predictor");
      const EvalContext ctx{EditModels{b.generator.get(), b.predictor.get(), b.regularizer.get()},
                            b.config.inference, model->hash};
      if (p == "landmark") {
        reports.push_back(landmark_eval(ctx, 1, ec.landmark_trials, s, true));
        for (int k : ec.landmark_points) reports.push_back(landmark_eval(ctx, k, ec.landmark_trials, s));
      } else if (p == "paired") {
        PairedSpec spec;
        spec.trials = ec.paired_trials;
        spec.points = ec.paired_points;
        spec.lambda = b.config.stage2.lambda;
        spec.n = b.config.stage2.n;
        spec.direction = b.config.stage2.direction;
        spec.seed = s;
        reports.push_back(paired_eval(ctx, spec));
        spec.identity = true;
        reports.push_back(paired_eval(ctx, spec));
      } else {
        const MddCurves c =
            mdd_curve_eval(ctx, sample_drags(*b.generator, ec.mdd_trials, ec.drag_min, ec.drag_max, s));
        write_curves_csv(c, (dir / "mdd_curves.csv").string());
        reports.push_back(c.final_mdd);
      }
    }
    for (MetricReport& r : reports) {
      if (r.config_hash.empty()) r.config_hash = model->hash;
      write_report_csv(r, (dir / (r.protocol + ".csv")).string());
    }
    const std::string summary = reports_summary_json(reports);
    write_text((dir / "summary.json").string(), summary + "\n");
    if (json_out != nullptr) *json_out = dup_string(summary);
  });
}

ad_status ad_serve(const ad_model* model, const char* host, int port) {
  return guarded([&] {
    require(model, "model");
    const ServiceConfig& sc = model->bundle->config.service;
    DragService service(model->bundle, model->hash, sc.session_ttl_seconds);
    service.start(host != nullptr ? host : sc.host, port > 0 ? port : sc.port);
    service.wait();
  });
}

}  // extern "C"
