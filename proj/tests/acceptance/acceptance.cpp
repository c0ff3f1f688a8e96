// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks, one PASS/FAIL line each.
//   fast:    perturbation math, masking, pass-through, gradients, causality,
//            call counts, oracle and protocol identities on untrained models
//   trained: trains both stages from the run config, then checks drag quality
//   slow:    sequence-length and regularizer ablation (three more trainings)

#include "errors.hpp"
#include "evaluation/evaluation.hpp"
#include "io/checkpoint.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace autodrag;
using Clock = std::chrono::steady_clock;

namespace {

int g_failed = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++g_failed;
  std::printf("%s  %-32s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void note(const std::string& text) {
  std::printf("      %s\n", text.c_str());
  std::fflush(stdout);
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename... T>
std::string str(const T&... parts) {
  std::ostringstream s;
  s.precision(4);
  (s << ... << parts);
  return s.str();
}

constexpr std::uint64_t kHeldOut = 0xace0ffee;

// ---------------------------------------------------------------- fast tier

void check_closed_form(const ToyGenerator& gen) {
  const auto t0 = Clock::now();
  const int e = gen.config().edit_layers;
  const int rest = gen.config().layers - e;
  double worst = 0.0;
  bool untouched = true;
  for (double lambda : {0.01, 0.05, 0.2}) {
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(derive_seed(kHeldOut, static_cast<std::uint64_t>(trial)));
      const LatentCode w0 = gen.sample_latent(rng), anchor = gen.sample_latent(rng);
      for (PerturbDirection dir : {PerturbDirection::kAway, PerturbDirection::kToward}) {
        const LatentSequence seq = motion_from_anchor(w0, anchor, lambda, 10, gen.edit_spec(), dir);
        const double g = dir == PerturbDirection::kAway ? 1.0 + lambda : 1.0 - lambda;
        const Matrix e0 = w0.values.topRows(e), es = anchor.values.topRows(e);
        for (int i = 0; i <= 10; ++i) {
          const Matrix closed = es + std::pow(g, i) * (e0 - es);
          const LatentCode& w = seq[static_cast<std::size_t>(i)];
          worst = std::max(worst, (w.values.topRows(e) - closed).norm() / closed.norm());
          untouched = untouched && w.values.bottomRows(rest) == w0.values.bottomRows(rest);
        }
      }
    }
  }
  const double t = since(t0);
  report(worst < 1e-6 && untouched && t < 1.0, "closed-form perturbation",
         str("max rel err ", worst, ", non-edit ", untouched ? "bit-identical" : "CHANGED", ", ", t, " s"));
}

void check_mask_rate(const ToyGenerator& gen) {
  CorruptionSpec spec;
  spec.mask_prob = 0.25;
  const int per = gen.config().edit_layers * gen.config().latent_dim;
  long zeros = 0, total = 0;
  for (std::uint64_t i = 0; total < 100000; ++i) {
    Rng rng(derive_seed(kHeldOut, i));
    spec.seed = derive_seed(kHeldOut + 1, i);
    const Corruption c = corrupt(gen.sample_latent(rng), gen.edit_spec(), spec);
    const Matrix edit = c.mask.topRows(gen.config().edit_layers);
    zeros += static_cast<long>((edit.array() == 0.0).count());
    total += per;
  }
  const double frac = static_cast<double>(zeros) / static_cast<double>(total);
  report(frac >= 0.24 && frac <= 0.26, "mask zero fraction", str(frac, " over ", total, " entries at p=0.25"));
}

void check_pass_through(const ToyGenerator& gen, const RegularizerModel& reg, const std::string& which) {
  const int rest = gen.config().layers - gen.config().edit_layers;
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(kHeldOut + 2, static_cast<std::uint64_t>(i)));
    const LatentCode w = gen.sample_latent(rng);
    CorruptionSpec spec;
    spec.seed = static_cast<std::uint64_t>(i);
    const LatentCode in = corrupt(w, gen.edit_spec(), spec).corrupted;
    const LatentCode out = regularize(reg, in, gen.edit_spec());
    if (out.values.bottomRows(rest) == in.values.bottomRows(rest)) ++exact;
  }
  report(exact == 100, "regularizer non-edit pass-through", str(exact, "/100 bit-exact (", which, ")"));
}

struct LossSample {
  LatentSequence seq;
  FeatureMap f0;
  std::vector<PointPair> pairs;
  std::vector<std::vector<PointPair>> steps;
};

LossSample loss_sample(const ToyGenerator& gen, const Stage2Config& s2, std::uint64_t seed) {
  const OracleMatcher matcher(gen);
  for (std::uint64_t k = 0;; ++k) {
    Rng rng(derive_seed(seed, k));
    LossSample s;
    const LatentCode w0 = gen.sample_latent(rng), anchor = gen.sample_latent(rng);
    s.seq = motion_from_anchor(w0, anchor, s2.lambda, s2.n, gen.edit_spec(), s2.direction);
    s.pairs = matcher.match(w0, s.seq.back(), s2.sample_min_distance);
    if (s.pairs.empty()) continue;
    if (s.pairs.size() > 8) s.pairs.resize(8);
    s.steps = drag_matches(matcher, s.seq, s2.drag_min_distance, s2.max_pairs);
    s.f0 = gen.features(w0);
    return s;
  }
}

ag::Var sample_loss(ag::Tape& t, const ToyGenerator& gen, const PredictorModel& pred, const RegularizerModel& reg,
                    const LossSample& s, double alpha, double beta) {
  const Memory mem = pred.encode(t, {ContextInput{&s.f0, s.pairs}});
  std::vector<LatentCode> prefix(s.seq.codes.begin(), s.seq.codes.end() - 1);
  const int n = static_cast<int>(prefix.size());
  const ag::Var out = pred.predict(t, mem, t.constant(stack_latents(prefix)), 1, n, &reg);
  return total_loss(pred_loss(t, out, s.seq), drag_loss(t, gen, out, s.seq, s.steps), alpha, beta);
}

void check_gradient(const ToyGenerator& gen, const RunConfig& cfg) {
  PredictorModel pred(cfg.predictor);
  RegularizerModel reg(cfg.regularizer);
  Stage2Config s2 = cfg.stage2;
  const LossSample s = loss_sample(gen, s2, kHeldOut + 3);
  std::size_t drag_pairs = 0;
  for (const auto& st : s.steps) drag_pairs += st.size();
  pred.params().zero_grad();
  {
    ag::Tape t;
    t.backward(sample_loss(t, gen, pred, reg, s, 0.1, 1.0));
  }
  auto params = pred.params().all();
  Rng rng(kHeldOut + 4);
  double worst = 0.0;
  int checked = 0;
  while (checked < 10) {
    ag::Parameter* p = params[std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(rng)];
    const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, p->value.size() - 1)(rng);
    const double an = p->grad.data()[i];
    const double x = p->value.data()[i];
    // Fourth-order stencil; the loss is O(1e4), so a small step drowns in round-off.
    const double h = 1e-3 * std::max(1.0, std::abs(x));
    auto eval = [&](double v) {
      p->value.data()[i] = v;
      ag::Tape t(false);
      return sample_loss(t, gen, pred, reg, s, 0.1, 1.0).value()(0, 0);
    };
    const double fd = (8.0 * (eval(x + h) - eval(x - h)) - (eval(x + 2.0 * h) - eval(x - 2.0 * h))) / (12.0 * h);
    p->value.data()[i] = x;
    const double err = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
    worst = std::max(worst, err);
    ++checked;
  }
  report(worst < 1e-3, "total loss gradient", str("max rel err ", worst, " on 10 predictor entries, alpha=0.1 beta=1, ",
                                                 drag_pairs, " drag pairs"));
}

void check_causality(const ToyGenerator& gen, const RunConfig& cfg, const PredictorModel& pred,
                     const RegularizerModel& reg) {
  const LossSample s = loss_sample(gen, cfg.stage2, kHeldOut + 5);
  std::vector<LatentCode> prefix(s.seq.codes.begin(), s.seq.codes.end() - 1);
  const auto base = predict_teacher_forced(pred, &reg, prefix, s.f0, s.pairs);
  bool exact = true, sensitive = true;
  for (std::size_t change = 1; change < prefix.size(); ++change) {
    std::vector<LatentCode> edited = prefix;
    edited[change].values.topRows(cfg.generator.edit_layers).array() += 0.5;
    const auto out = predict_teacher_forced(pred, &reg, edited, s.f0, s.pairs);
    for (std::size_t i = 0; i < change; ++i) exact = exact && out[i].values == base[i].values;
    sensitive = sensitive && !(out[change].values == base[change].values);
  }
  report(exact && sensitive, "decoder causality",
         str("earlier steps ", exact ? "bit-identical" : "CHANGED", " under later edits; later steps ",
             sensitive ? "respond" : "DO NOT respond"));
}

void check_no_optimisation(const EditModels& models, const std::vector<Drag>& drags) {
  bool ok = true;
  std::uint64_t max_calls = 0;
  for (int rounds : {1, 2}) {
    for (std::size_t i = 0; i < 10 && i < drags.size(); ++i) {
      EditRequest r;
      r.w0 = drags[i].w0;
      r.pairs = {drags[i].pair};
      r.n_steps = 5;
      r.rounds = rounds;
      const EditResult out = edit(models, r);
      ok = ok && out.gradient_evaluations == 0 && out.synthesis_calls <= static_cast<std::uint64_t>(rounds * 6);
      max_calls = std::max(max_calls, out.synthesis_calls);
    }
  }
  report(ok, "no optimisation at inference",
         str("0 gradient evaluations; synthesis calls <= rounds*(n_steps+1) (max seen ", max_calls, ")"));
}

void check_oracle(const ToyGenerator& gen, const std::vector<Drag>& drags) {
  double worst = 0.0;
  for (const Drag& d : drags) {
    const LatentCode w = gen.oracle_latent_for_move(d.w0, d.pair.handle, d.pair.target);
    worst = std::max(worst, distance(track_handles(gen, d.w0, {d.pair.handle}, w)[0], d.pair.target));
  }
  report(worst <= 1.0, "oracle drag placement", str("max handle error ", worst, " px over ", drags.size(), " drags"));
}

void check_identities(const EvalContext& ctx, const std::vector<double>& first_mdds) {
  const MetricReport zero = landmark_eval(ctx, 12, 20, kHeldOut + 6, true);
  PairedSpec spec;
  spec.trials = 20;
  spec.identity = true;
  spec.seed = kHeldOut + 7;
  const MetricReport same = paired_eval(ctx, spec);
  bool ones = mdd(3.7, 3.7) == 1.0;
  for (double v : first_mdds) ones = ones && v == 1.0;
  const bool ok = zero.failures == 0 && zero.mean() < 2.0 && same.failures == 0 && same.mean() < 1e-4 && ones;
  report(ok, "protocol identities",
         str("zero-drag landmark MD ", zero.mean(), " px; w2=w1 MSEx100 ", same.mean(), "; MDD(0)=1 ",
             ones ? "exactly" : "VIOLATED", " (", first_mdds.size(), " curves)"));
}

void fast_tier(const RunConfig& cfg) {
  std::printf("== fast tier\n");
  const ToyGenerator gen(cfg.generator);
  const RegularizerModel reg(cfg.regularizer);
  const PredictorModel pred(cfg.predictor);
  check_closed_form(gen);
  check_mask_rate(gen);
  check_pass_through(gen, reg, "untrained");
  check_gradient(gen, cfg);
  check_causality(gen, cfg, pred, reg);
  const std::vector<Drag> drags =
      sample_drags(gen, 100, cfg.evaluation.drag_min, cfg.evaluation.drag_max, cfg.evaluation.seed);
  const EditModels models{&gen, &pred, &reg};
  check_no_optimisation(models, drags);
  check_oracle(gen, drags);
  std::vector<double> firsts;
  for (std::size_t i = 0; i < 10; ++i) {
    EditRequest r;
    r.w0 = drags[i].w0;
    r.pairs = {drags[i].pair};
    r.keep_step_images = false;
    firsts.push_back(edit(models, r).mdd_curve.front());
  }
  check_identities(EvalContext{models, cfg.inference, config_hash(cfg)}, firsts);
}

// ------------------------------------------------------------- trained tier

struct Timings {
  double stage1 = 0.0;
  double stage2 = 0.0;
};

void trained_tier(const RunConfig& cfg, const fs::path& work) {
  std::printf("== trained tier (work dir %s)\n", work.c_str());
  fs::create_directories(work);
  const std::string hash = config_hash(cfg);
  Timings tm;

  ModelBundle b = ModelBundle::create(cfg, true, true);
  const ToyGenerator& gen = *b.generator;
  auto t0 = Clock::now();
  train_stage1(gen, *b.regularizer, cfg.stage1, [&](int e, double l) {
    if ((e + 1) % 10 == 0) note(str("stage 1 epoch ", e + 1, " l1 ", l, " (", since(t0), " s)"));
  });
  tm.stage1 = since(t0);
  {
    ModelBundle s1 = ModelBundle::create(cfg, true, false);
    s1.regularizer->params().copy_values_from(b.regularizer->params());
    save_checkpoint((work / "stage1.ckpt").string(), s1);
  }
  const DenoisingReport dn = evaluate_denoising(gen, *b.regularizer, cfg.corruption, 1024, kHeldOut + 8);
  report(dn.reconstructed_l1 <= 0.5 * dn.corrupted_l1 && tm.stage1 <= 600.0, "stage-1 denoising",
         str("held-out L1 ", dn.reconstructed_l1, " vs corrupted ", dn.corrupted_l1, " (ratio ",
             dn.reconstructed_l1 / dn.corrupted_l1, "), ", tm.stage1, " s"));

  t0 = Clock::now();
  train_stage2(gen, *b.predictor, *b.regularizer, cfg.stage2, [&](const Stage2Epoch& e) {
    if ((e.epoch + 1) % 10 == 0) {
      note(str("stage 2 epoch ", e.epoch + 1, " l_pred ", e.l_pred, " l_drag ", e.l_drag, " (", since(t0), " s)"));
    }
  });
  tm.stage2 = since(t0);
  save_checkpoint((work / "trained.ckpt").string(), b);
  std::ofstream(work / "timings.json") << nlohmann::json{{"config_hash", hash},
                                                         {"stage1_s", tm.stage1},
                                                         {"stage2_s", tm.stage2}}
                                              .dump(2)
                                       << "\n";

  const EditModels models{&gen, b.predictor.get(), b.regularizer.get()};
  const EvalContext ctx{models, cfg.inference, hash};
  const std::vector<Drag> drags =
      sample_drags(gen, 100, cfg.evaluation.drag_min, cfg.evaluation.drag_max, cfg.evaluation.seed);
  const MddCurves curves = mdd_curve_eval(ctx, drags);
  write_curves_csv(curves, (work / "mdd_curves.csv").string());
  const double total = tm.stage1 + tm.stage2;
  const double frac = curves.fraction_below(0.5);
  std::ostringstream mean_curve;
  mean_curve.precision(3);
  for (double v : curves.mean_curve) mean_curve << ' ' << v;
  report(curves.final_mdd.failures == 0 && curves.final_mdd.mean() <= 0.3 && frac >= 0.8 && total <= 3600.0,
         "end-to-end drag",
         str("mean final MDD ", curves.final_mdd.mean(), ", ", 100.0 * frac, "% <= 0.5, ",
             curves.final_mdd.count(), " drags, ", curves.final_mdd.failures, " failures, training ", total, " s"));
  note("mean MDD curve:" + mean_curve.str());

  check_pass_through(gen, *b.regularizer, "trained");
  check_no_optimisation(models, drags);
  check_oracle(gen, drags);
  std::vector<double> firsts;
  for (const auto& c : curves.curves) firsts.push_back(c.front());
  check_identities(ctx, firsts);
}

// ---------------------------------------------------------------- slow tier

void slow_tier(const RunConfig& cfg, const fs::path& work) {
  std::printf("== slow tier (work dir %s)\n", work.c_str());
  const fs::path s1 = work / "stage1.ckpt";
  if (!fs::exists(s1)) {
    report(false, "ablation", "missing " + s1.string() + "; run the trained tier first");
    return;
  }
  const ModelBundle b = load_checkpoint(s1.string());
  if (!(b.config.generator == cfg.generator) || !(b.config.regularizer == cfg.regularizer)) {
    report(false, "ablation", "stage-1 checkpoint was trained with another config");
    return;
  }
  const int n = cfg.stage2.n;
  const std::vector<AblationVariant> variants{
      {"full", n, true}, {"n1", 1, true}, {"no_regularizer", n, false}};
  const auto t0 = Clock::now();
  const std::vector<MetricReport> reps = ablation_eval(*b.generator, *b.regularizer, cfg, variants,
                                                       [&](const std::string& v, const Stage2Epoch& e) {
                                                         if ((e.epoch + 1) % 25 == 0) {
                                                           note(str(v, " epoch ", e.epoch + 1, " (", since(t0), " s)"));
                                                         }
                                                       });
  for (const MetricReport& r : reps) {
    write_report_csv(r, (work / (r.protocol + ".csv")).string());
    note(str(r.protocol, ": MSEx100 ", r.mean(), " (no edit ", r.baseline_mean(), ", ", r.count(), " trials)"));
  }
  const double full = reps[0].mean(), n1 = reps[1].mean(), noreg = reps[2].mean();
  report(full < noreg && full < n1, "ablation ordering",
         str("full ", full, " < w/o regularizer ", noreg, " and < n=1 ", n1, "; ", since(t0), " s"));
  report(full < n1, "sequence length effect", str("MSE(n=", n, ") ", full, " < MSE(n=1) ", n1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autodrag acceptance checks"};
  std::string tier = "fast", config, work = "acceptance_work";
  app.add_option("--tier", tier, "fast | trained | slow")->check(CLI::IsMember({"fast", "trained", "slow"}));
  app.add_option("--config", config, "run config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--work", work, "directory for checkpoints and reports");
  CLI11_PARSE(app, argc, argv);
  try {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    cfg.normalise();
    if (tier == "fast") fast_tier(cfg);
    if (tier == "trained") trained_tier(cfg, work);
    if (tier == "slow") slow_tier(cfg, work);
  } catch (const std::exception& e) {
    report(false, "harness", e.what());
  }
  std::printf("%s: %d failing check(s)\n", tier.c_str(), g_failed);
  return g_failed == 0 ? 0 : 1;
}
