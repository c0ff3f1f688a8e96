// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "evaluation/evaluation.hpp"

#include "errors.hpp"
#include "io/checkpoint.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>

namespace autodrag {

namespace {

double average(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  // sorted reduction keeps the mean independent of trial order
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

constexpr double kCenterMargin = 0.27;

}  // namespace

double MetricReport::mean() const { return average(values); }
double MetricReport::baseline_mean() const { return average(baseline); }

double mean_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.size() != b.size() || a.empty()) throw ParameterError("mean_distance: lists must have equal, non-zero length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += distance(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

double mdd(double md_cur, double md_init) {
  if (!(md_init > 0.0)) throw UndefinedRatioError("mdd: initial mean distance is zero");
  return md_cur / md_init;
}

double image_mse100(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("image_mse100: sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = a.rgb[i] - b.rgb[i];
    s += d * d;
  }
  return 100.0 * s / static_cast<double>(a.rgb.size());
}

std::vector<Drag> sample_drags(const ToyGenerator& gen, int count, double dmin, double dmax, std::uint64_t seed) {
  if (count < 0 || !(dmin >= 0.0) || dmax < dmin) throw ParameterError("sample_drags: bad range");
  const double res = gen.image_resolution();
  std::vector<Drag> out;
  for (std::uint64_t trial = 0; static_cast<int>(out.size()) < count; ++trial) {
    if (trial > static_cast<std::uint64_t>(count) * 100 + 1000) throw ParameterError("sample_drags: no valid drags");
    Rng rng(derive_seed(seed, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const LatentCode w0 = gen.sample_latent(rng);
    const SceneParams p = gen.decode_params(w0);
    // material point well inside the object
    const double r = 0.75 * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const Point handle = gen.image_position(p, {r * std::cos(a), r * std::sin(a)});
    const double len = dmin + (dmax - dmin) * unit(rng);
    const double dir = 2.0 * std::numbers::pi * unit(rng);
    const Point target{handle.x + len * std::cos(dir), handle.y + len * std::sin(dir)};
    if (!in_image(handle, gen.image_resolution()) || !in_image(target, gen.image_resolution())) continue;
    if (gen.mask_at(p, handle) <= 0.5) continue;
    const double cx = p.cx + (target.x - handle.x) / res;
    const double cy = p.cy + (target.y - handle.y) / res;
    if (std::abs(cx - 0.5) > kCenterMargin || std::abs(cy - 0.5) > kCenterMargin) continue;
    out.push_back(Drag{w0, PointPair{handle, target}});
  }
  return out;
}

MetricReport landmark_eval(const EvalContext& ctx, int num_points, int trials, std::uint64_t seed, bool zero_drag) {
  constexpr int kAnchors = 12;
  if (num_points < 1 || num_points > kAnchors) throw ParameterError("landmark_eval: num_points must be in [1, 12]");
  if (trials < 1) throw ParameterError("landmark_eval: trials must be >= 1");
  const ToyGenerator& gen = *ctx.models.generator;
  MetricReport rep;
  rep.protocol = "landmark_" + std::to_string(num_points) + (zero_drag ? "_zero" : "");
  rep.metric = "md_px";
  rep.config_hash = ctx.config_hash;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    const LatentCode wa = gen.sample_latent(rng);
    const LatentCode wb = zero_drag ? wa : gen.sample_latent(rng);
    std::vector<int> pick(kAnchors);
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(static_cast<std::size_t>(num_points));
    const std::vector<Point> ka = gen.keypoints(wa, kAnchors);
    const std::vector<Point> kb = gen.keypoints(wb, kAnchors);
    EditRequest req;
    req.w0 = wa;
    req.n_steps = ctx.inference.n_steps;
    req.rounds = ctx.inference.rounds;
    req.keep_step_images = false;
    std::vector<Point> want;
    for (int i : pick) {
      req.pairs.push_back({ka[static_cast<std::size_t>(i)], kb[static_cast<std::size_t>(i)]});
      want.push_back(kb[static_cast<std::size_t>(i)]);
    }
    std::vector<Point> start;
    for (const PointPair& p : req.pairs) start.push_back(p.handle);
    try {
      const EditResult res = edit(ctx.models, req);
      const std::vector<Point> got = gen.keypoints(res.w_final, kAnchors);
      std::vector<Point> mine;
      for (int i : pick) mine.push_back(got[static_cast<std::size_t>(i)]);
      rep.values.push_back(mean_distance(mine, want));
      rep.baseline.push_back(mean_distance(start, want));
    } catch (const Error&) {
      ++rep.failures;
    }
  }
  return rep;
}

MetricReport paired_eval(const EvalContext& ctx, const PairedSpec& spec) {
  if (spec.trials < 1 || spec.points < 1) throw ParameterError("paired_eval: trials and points must be >= 1");
  const ToyGenerator& gen = *ctx.models.generator;
  MetricReport rep;
  rep.protocol = spec.identity ? "paired_identity" : "paired";
  rep.metric = "mse_x100";
  rep.config_hash = ctx.config_hash;
  for (int trial = 0; trial < spec.trials; ++trial) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
    const LatentCode w1 = gen.sample_latent(rng);
    LatentCode w2 = w1;
    if (!spec.identity) {
      const LatentCode anchor = gen.sample_latent(rng);
      w2 = motion_from_anchor(w1, anchor, spec.lambda, spec.n, gen.edit_spec(), spec.direction).back();
    }
    std::vector<PointPair> flow = match_points(gen, w1, w2, -1.0);
    if (flow.empty()) {
      ++rep.failures;
      continue;
    }
    std::shuffle(flow.begin(), flow.end(), rng);
    if (static_cast<int>(flow.size()) > spec.points) flow.resize(static_cast<std::size_t>(spec.points));
    EditRequest req;
    req.w0 = w1;
    req.pairs = std::move(flow);
    req.n_steps = ctx.inference.n_steps;
    req.rounds = ctx.inference.rounds;
    req.keep_step_images = false;
    try {
      const EditResult res = edit(ctx.models, req);
      const Image i2 = gen.render(w2);
      rep.values.push_back(image_mse100(res.images.back(), i2));
      rep.baseline.push_back(image_mse100(gen.render(w1), i2));
    } catch (const Error&) {
      ++rep.failures;
    }
  }
  return rep;
}

double MddCurves::fraction_below(double threshold) const {
  if (final_mdd.values.empty()) return 0.0;
  const auto hits = std::count_if(final_mdd.values.begin(), final_mdd.values.end(),
                                  [&](double v) { return v <= threshold; });
  return static_cast<double>(hits) / static_cast<double>(final_mdd.values.size());
}

MddCurves mdd_curve_eval(const EvalContext& ctx, const std::vector<Drag>& drags) {
  MddCurves out;
  out.final_mdd.protocol = "mdd";
  out.final_mdd.metric = "final_mdd";
  out.final_mdd.config_hash = ctx.config_hash;
  for (const Drag& d : drags) {
    EditRequest req;
    req.w0 = d.w0;
    req.pairs = {d.pair};
    req.n_steps = ctx.inference.n_steps;
    req.rounds = ctx.inference.rounds;
    req.keep_step_images = false;
    try {
      EditResult res = edit(ctx.models, req);
      out.final_mdd.values.push_back(res.mdd_curve.back());
      out.curves.push_back(std::move(res.mdd_curve));
    } catch (const Error&) {
      ++out.final_mdd.failures;
    }
  }
  if (!out.curves.empty()) {
    out.mean_curve.assign(out.curves.front().size(), 0.0);
    for (std::size_t k = 0; k < out.mean_curve.size(); ++k) {
      std::vector<double> col;
      for (const auto& c : out.curves) col.push_back(c[k]);
      out.mean_curve[k] = average(col);
    }
  }
  return out;
}

void write_report_csv(const MetricReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  const bool base = !report.baseline.empty();
  f << std::setprecision(10) << "trial," << report.metric << (base ? ",no_edit" : "") << '\n';
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    f << i << ',' << report.values[i];
    if (base) f << ',' << report.baseline[i];
    f << '\n';
  }
  f << "mean," << report.mean();
  if (base) f << ',' << report.baseline_mean();
  f << '\n';
}

void write_curves_csv(const MddCurves& curves, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << std::setprecision(10) << "trial";
  for (std::size_t k = 0; k < curves.mean_curve.size(); ++k) f << ",step" << k;
  f << '\n';
  for (std::size_t i = 0; i < curves.curves.size(); ++i) {
    f << i;
    for (double v : curves.curves[i]) f << ',' << v;
    f << '\n';
  }
  f << "mean";
  for (double v : curves.mean_curve) f << ',' << v;
  f << '\n';
}

std::string reports_summary_json(const std::vector<MetricReport>& reports) {
  nlohmann::json j{{"schema", "autodrag.metrics/1"}, {"reports", nlohmann::json::array()}};
  for (const MetricReport& r : reports) {
    nlohmann::json e{{"protocol", r.protocol}, {"metric", r.metric},    {"count", r.count()},
                     {"failures", r.failures}, {"config_hash", r.config_hash}};
    e["mean"] = r.values.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.mean());
    if (!r.baseline.empty()) e["no_edit_mean"] = r.baseline_mean();
    j["reports"].push_back(std::move(e));
  }
  return j.dump(2);
}

std::vector<MetricReport> ablation_eval(const ToyGenerator& gen, const RegularizerModel& stage1,
                                        const RunConfig& base, const std::vector<AblationVariant>& variants,
                                        const AblationLog& log) {
  std::vector<MetricReport> out;
  for (const AblationVariant& v : variants) {
    RunConfig cfg = base;
    cfg.stage2.n = v.n;
    cfg.stage2.lambda = matched_lambda(base.stage2.lambda, base.stage2.n, v.n);
    cfg.stage2.use_regularizer = v.use_regularizer;
    cfg.inference.n_steps = v.n;
    RegularizerModel reg(cfg.regularizer);
    reg.params().copy_values_from(stage1.params());
    PredictorModel pred(cfg.predictor);
    train_stage2(gen, pred, reg, cfg.stage2, [&](const Stage2Epoch& e) {
      if (log) log(v.name, e);
    });
    EvalContext ctx{EditModels{&gen, &pred, v.use_regularizer ? &reg : nullptr}, cfg.inference,
                    config_hash(cfg)};
    PairedSpec spec;
    spec.trials = base.evaluation.paired_trials;
    spec.points = base.evaluation.paired_points;
    spec.lambda = base.stage2.lambda;
    spec.n = base.stage2.n;
    spec.direction = base.stage2.direction;
    spec.seed = base.evaluation.seed;
    MetricReport r = paired_eval(ctx, spec);
    r.protocol = "ablation_" + v.name;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace autodrag
