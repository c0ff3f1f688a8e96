// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Toy-scale evaluation protocols: keypoint manipulation, paired
// reconstruction, per-step MDD curves and the sequence-length sweep.

#pragma once

#include "inference/inference.hpp"
#include "io/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace autodrag {

struct MetricReport {
  std::string protocol;
  std::string metric;
  std::vector<double> values;
  // Same metric without any edit, trial by trial; may be empty.
  std::vector<double> baseline;
  int failures = 0;
  std::string config_hash;

  double mean() const;
  double baseline_mean() const;
  std::size_t count() const { return values.size(); }
};

double mean_distance(const std::vector<Point>& a, const std::vector<Point>& b);
double mdd(double md_cur, double md_init);
// Mean squared difference of two images, times 100.
double image_mse100(const Image& a, const Image& b);

struct EvalContext {
  EditModels models;
  InferenceConfig inference;
  std::string config_hash;
};

struct Drag {
  LatentCode w0;
  PointPair pair;
};

// Single-pair drags on held-out latents: the handle lies inside the object,
// the target is dmin..dmax px away in a random direction and reachable by
// translating the object.
std::vector<Drag> sample_drags(const ToyGenerator& gen, int count, double dmin, double dmax, std::uint64_t seed);

// Drags A's keypoints onto B's. With zero_drag, B = A.
MetricReport landmark_eval(const EvalContext& ctx, int num_points, int trials, std::uint64_t seed,
                           bool zero_drag = false);

// Sample w1, perturb it into w2 with (lambda, n), hand `points` oracle
// correspondences to the editor and compare the result with I2.
struct PairedSpec {
  int trials = 100;
  int points = 32;
  double lambda = 0.05;
  int n = 5;
  PerturbDirection direction = PerturbDirection::kAway;
  bool identity = false;  // w2 = w1
  std::uint64_t seed = 0;
};
MetricReport paired_eval(const EvalContext& ctx, const PairedSpec& spec);

struct MddCurves {
  MetricReport final_mdd;
  std::vector<std::vector<double>> curves;
  std::vector<double> mean_curve;

  double fraction_below(double threshold) const;
};
MddCurves mdd_curve_eval(const EvalContext& ctx, const std::vector<Drag>& drags);

// One row per trial plus a summary row.
void write_report_csv(const MetricReport& report, const std::string& path);
void write_curves_csv(const MddCurves& curves, const std::string& path);
// Structured summary of several reports.
std::string reports_summary_json(const std::vector<MetricReport>& reports);

struct AblationVariant {
  std::string name;
  int n = 5;
  bool use_regularizer = true;
};

using AblationLog = std::function<void(const std::string& variant, const Stage2Epoch&)>;

// Trains stage 2 once per variant from the same stage-1 regularizer and
// evaluates paired reconstruction on a shared held-out set. Lambda is matched
// to the base (n, lambda) so every variant covers the same endpoint motion.
std::vector<MetricReport> ablation_eval(const ToyGenerator& gen, const RegularizerModel& stage1,
                                        const RunConfig& base, const std::vector<AblationVariant>& variants,
                                        const AblationLog& log = {});

}  // namespace autodrag
