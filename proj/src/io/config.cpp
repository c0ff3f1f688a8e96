// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "io/config.hpp"

#include "errors.hpp"
#include "io/hash.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace autodrag {

using nlohmann::json;

namespace {

// Reads fields of one object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw FormatError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw FormatError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw FormatError("config: unknown key " + name_ + "." + k);
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string granularity_name(MaskGranularity g) { return g == MaskGranularity::kEntry ? "entry" : "layer"; }
std::string direction_name(PerturbDirection d) { return d == PerturbDirection::kAway ? "away" : "toward"; }

}  // namespace

void RunConfig::normalise() {
  generator.validate();
  regularizer.layers = predictor.layers = generator.layers;
  regularizer.edit_layers = predictor.edit_layers = generator.edit_layers;
  regularizer.latent_dim = predictor.latent_dim = generator.latent_dim;
  predictor.image_resolution = generator.image_resolution;
  predictor.feature_resolution = generator.feature_resolution;
  predictor.feature_channels = generator.feature_channels;
  stage1.corruption = corruption;
  stage2.n = perturb.n;
  stage2.lambda = perturb.lambda;
  stage2.direction = perturb.direction;
  perturb.validate();
  regularizer.validate();
  predictor.validate();
  stage1.validate();
  stage2.validate();
  if (inference.n_steps < 1 || inference.n_steps > predictor.max_positions) {
    throw ParameterError("inference.n_steps must lie in [1, predictor.max_positions]");
  }
  if (inference.rounds < 1) throw ParameterError("inference.rounds must be >= 1");
  if (service.session_ttl_seconds < 1) throw ParameterError("service.session_ttl_seconds must be positive");
}

void RunConfig::reseed(std::uint64_t s) {
  seed = s;
  corruption.seed = derive_seed(s, 1);
  perturb.seed = derive_seed(s, 2);
  regularizer.seed = derive_seed(s, 3);
  predictor.seed = derive_seed(s, 4);
  stage1.seed = derive_seed(s, 5);
  stage2.seed = derive_seed(s, 6);
  evaluation.seed = derive_seed(s, 7);
  normalise();
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  const GeneratorConfig& g = c.generator;
  j["generator"] = {{"latent_dim", g.latent_dim},
                    {"z_dim", g.z_dim},
                    {"layers", g.layers},
                    {"edit_layers", g.edit_layers},
                    {"image_resolution", g.image_resolution},
                    {"feature_resolution", g.feature_resolution},
                    {"feature_channels", g.feature_channels},
                    {"pose_dims", g.pose_dims},
                    {"shared_dims", g.shared_dims},
                    {"tanh_scale", g.tanh_scale},
                    {"bias_std", g.bias_std},
                    {"edge_temperature", g.edge_temperature},
                    {"seed", g.seed}};
  j["corruption"] = {{"mask_prob", c.corruption.mask_prob},
                     {"noise_std", c.corruption.noise_std},
                     {"seed", c.corruption.seed},
                     {"granularity", granularity_name(c.corruption.granularity)}};
  j["perturb"] = {{"lambda", c.perturb.lambda},
                  {"n", c.perturb.n},
                  {"seed", c.perturb.seed},
                  {"direction", direction_name(c.perturb.direction)}};
  const RegularizerConfig& r = c.regularizer;
  j["regularizer"] = {{"width", r.width},
                      {"ffn_width", r.ffn_width},
                      {"heads", r.heads},
                      {"encoder_layers", r.encoder_layers},
                      {"decoder_layers", r.decoder_layers},
                      {"seed", r.seed}};
  const PredictorConfig& p = c.predictor;
  j["predictor"] = {{"width", p.width},
                    {"ffn_width", p.ffn_width},
                    {"heads", p.heads},
                    {"conv_channels", p.conv_channels},
                    {"encoder_layers", p.encoder_layers},
                    {"decoder_layers", p.decoder_layers},
                    {"max_positions", p.max_positions},
                    {"max_pairs", p.max_pairs},
                    {"seed", p.seed}};
  const Stage1Config& s1 = c.stage1;
  j["stage1"] = {{"learning_rate", s1.learning_rate},
                 {"epochs", s1.epochs},
                 {"batch_size", s1.batch_size},
                 {"samples_per_epoch", s1.samples_per_epoch},
                 {"grad_clip", s1.grad_clip},
                 {"seed", s1.seed}};
  const Stage2Config& s2 = c.stage2;
  j["stage2"] = {{"lr_init", s2.lr_init},
                 {"lr_min", s2.lr_min},
                 {"cosine_period", s2.cosine_period},
                 {"epochs", s2.epochs},
                 {"alpha", s2.alpha},
                 {"beta", s2.beta},
                 {"regularizer_lr", s2.regularizer_lr},
                 {"batch_size", s2.batch_size},
                 {"samples_per_epoch", s2.samples_per_epoch},
                 {"sample_min_distance", s2.sample_min_distance},
                 {"drag_min_distance", s2.drag_min_distance},
                 {"max_pairs", s2.max_pairs},
                 {"stationary_fraction", s2.stationary_fraction},
                 {"grad_clip", s2.grad_clip},
                 {"use_regularizer", s2.use_regularizer},
                 {"seed", s2.seed}};
  j["inference"] = {{"n_steps", c.inference.n_steps}, {"rounds", c.inference.rounds}};
  const EvaluationConfig& e = c.evaluation;
  j["evaluation"] = {{"landmark_trials", e.landmark_trials},
                     {"landmark_points", e.landmark_points},
                     {"paired_trials", e.paired_trials},
                     {"paired_points", e.paired_points},
                     {"mdd_trials", e.mdd_trials},
                     {"drag_min", e.drag_min},
                     {"drag_max", e.drag_max},
                     {"ablation_n", e.ablation_n},
                     {"seed", e.seed}};
  j["service"] = {{"host", c.service.host},
                  {"port", c.service.port},
                  {"session_ttl_seconds", c.service.session_ttl_seconds}};
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  RunConfig c;
  Section root(j, "config");
  std::string schema;
  root.get("schema", schema);
  if (schema != kConfigSchema) throw FormatError("config: schema must be '" + std::string(kConfigSchema) + "'");
  root.get("seed", c.seed);
  root.get("out_dir", c.out_dir);
  if (const json* s = root.child("generator")) {
    Section g(*s, "generator");
    GeneratorConfig& o = c.generator;
    g.get("latent_dim", o.latent_dim);
    g.get("z_dim", o.z_dim);
    g.get("layers", o.layers);
    g.get("edit_layers", o.edit_layers);
    g.get("image_resolution", o.image_resolution);
    g.get("feature_resolution", o.feature_resolution);
    g.get("feature_channels", o.feature_channels);
    g.get("pose_dims", o.pose_dims);
    g.get("shared_dims", o.shared_dims);
    g.get("tanh_scale", o.tanh_scale);
    g.get("bias_std", o.bias_std);
    g.get("edge_temperature", o.edge_temperature);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("corruption")) {
    Section g(*s, "corruption");
    std::string gran = granularity_name(c.corruption.granularity);
    g.get("mask_prob", c.corruption.mask_prob);
    g.get("noise_std", c.corruption.noise_std);
    g.get("seed", c.corruption.seed);
    g.get("granularity", gran);
    if (gran != "entry" && gran != "layer") throw FormatError("config: corruption.granularity must be entry or layer");
    c.corruption.granularity = gran == "entry" ? MaskGranularity::kEntry : MaskGranularity::kLayer;
    g.finish();
  }
  if (const json* s = root.child("perturb")) {
    Section g(*s, "perturb");
    std::string dir = direction_name(c.perturb.direction);
    g.get("lambda", c.perturb.lambda);
    g.get("n", c.perturb.n);
    g.get("seed", c.perturb.seed);
    g.get("direction", dir);
    if (dir != "away" && dir != "toward") throw FormatError("config: perturb.direction must be away or toward");
    c.perturb.direction = dir == "away" ? PerturbDirection::kAway : PerturbDirection::kToward;
    g.finish();
  }
  if (const json* s = root.child("regularizer")) {
    Section g(*s, "regularizer");
    RegularizerConfig& o = c.regularizer;
    g.get("width", o.width);
    g.get("ffn_width", o.ffn_width);
    g.get("heads", o.heads);
    g.get("encoder_layers", o.encoder_layers);
    g.get("decoder_layers", o.decoder_layers);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("predictor")) {
    Section g(*s, "predictor");
    PredictorConfig& o = c.predictor;
    g.get("width", o.width);
    g.get("ffn_width", o.ffn_width);
    g.get("heads", o.heads);
    g.get("conv_channels", o.conv_channels);
    g.get("encoder_layers", o.encoder_layers);
    g.get("decoder_layers", o.decoder_layers);
    g.get("max_positions", o.max_positions);
    g.get("max_pairs", o.max_pairs);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("stage1")) {
    Section g(*s, "stage1");
    Stage1Config& o = c.stage1;
    g.get("learning_rate", o.learning_rate);
    g.get("epochs", o.epochs);
    g.get("batch_size", o.batch_size);
    g.get("samples_per_epoch", o.samples_per_epoch);
    g.get("grad_clip", o.grad_clip);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("stage2")) {
    Section g(*s, "stage2");
    Stage2Config& o = c.stage2;
    g.get("lr_init", o.lr_init);
    g.get("lr_min", o.lr_min);
    g.get("cosine_period", o.cosine_period);
    g.get("epochs", o.epochs);
    g.get("alpha", o.alpha);
    g.get("beta", o.beta);
    g.get("regularizer_lr", o.regularizer_lr);
    g.get("batch_size", o.batch_size);
    g.get("samples_per_epoch", o.samples_per_epoch);
    g.get("sample_min_distance", o.sample_min_distance);
    g.get("drag_min_distance", o.drag_min_distance);
    g.get("max_pairs", o.max_pairs);
    g.get("stationary_fraction", o.stationary_fraction);
    g.get("grad_clip", o.grad_clip);
    g.get("use_regularizer", o.use_regularizer);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("inference")) {
    Section g(*s, "inference");
    g.get("n_steps", c.inference.n_steps);
    g.get("rounds", c.inference.rounds);
    g.finish();
  }
  if (const json* s = root.child("evaluation")) {
    Section g(*s, "evaluation");
    EvaluationConfig& o = c.evaluation;
    g.get("landmark_trials", o.landmark_trials);
    g.get("landmark_points", o.landmark_points);
    g.get("paired_trials", o.paired_trials);
    g.get("paired_points", o.paired_points);
    g.get("mdd_trials", o.mdd_trials);
    g.get("drag_min", o.drag_min);
    g.get("drag_max", o.drag_max);
    g.get("ablation_n", o.ablation_n);
    g.get("seed", o.seed);
    g.finish();
  }
  if (const json* s = root.child("service")) {
    Section g(*s, "service");
    g.get("host", c.service.host);
    g.get("port", c.service.port);
    g.get("session_ttl_seconds", c.service.session_ttl_seconds);
    g.finish();
  }
  root.finish();
  c.normalise();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::string& path, const RunConfig& config) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write config " + path);
  f << config_to_json(config);
}

std::string config_hash(const RunConfig& config) { return sha256_hex(config_to_json(config)); }

}  // namespace autodrag
