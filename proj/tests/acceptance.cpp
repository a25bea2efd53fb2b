// Acceptance gate: one self-contained check per release criterion, one
// PASS/FAIL line each, nonzero exit if any criterion fails. Heavier
// criteria reuse artifacts from earlier ones (the adaptation study's
// sticker-pretrained model feeds the OOS check).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfda/dataio.hpp"
#include "sfda/logging.hpp"
#include "sfda/losses.hpp"
#include "sfda/metrics.hpp"
#include "sfda/oos.hpp"
#include "sfda/pretext.hpp"
#include "sfda/sticker.hpp"
#include "sfda/trainer.hpp"
#include "test_util.hpp"

using namespace sfda;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------- 1

void criterion_intervention() {
  auto t0 = Clock::now();
  StickerConfig cfg;
  Rng rng = make_rng(1001, "acc-intervention");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 10000, hw = 32;
  const double footprint_bound =
      cfg.scale_max * cfg.scale_max * hw * hw * 1.01 + 1;

  bool ok = true;
  std::string why = "10000/10000 triples satisfy all three invariants";
  for (int i = 0; i < n && ok; ++i) {
    Image x(hw, hw, 3);
    for (double& v : x.pixels) v = unit(rng);
    StickerSpec spec = sample_spec(cfg, rng);
    double lambda = unit(rng);
    Image sticker = render_sticker(spec, cfg, hw, hw, 2000 + i);
    auto mask = compute_mask(sticker);

    Image mixed = apply_intervention(x, sticker, lambda);
    Image ident = apply_intervention(x, sticker, 1.0);
    if (ident.pixels != x.pixels) {
      ok = false;
      why = "lambda=1 output differs from the input (triple " +
            std::to_string(i) + ")";
      break;
    }
    int on = 0;
    for (int y = 0; y < hw && ok; ++y)
      for (int px = 0; px < hw; ++px) {
        if (mask[y * hw + px]) {
          ++on;
          continue;
        }
        for (int c = 0; c < 3; ++c)
          if (mixed.at(y, px, c) != x.at(y, px, c)) {
            ok = false;
            why = "off-mask pixel changed (triple " + std::to_string(i) + ")";
          }
      }
    if (ok && on > footprint_bound) {
      ok = false;
      why = "footprint " + std::to_string(on) + " exceeds bound " +
            fmt(footprint_bound);
    }
  }
  double dt = seconds_since(t0);
  if (ok && dt >= 60.0) {
    ok = false;
    why = "runtime " + fmt(dt) + "s exceeds 60s";
  }
  report(1, ok, "intervention invariants (10k randomized triples)",
         why + " in " + fmt(dt) + "s");
}

// ---------------------------------------------------------------------- 2

void criterion_loss_oracles() {
  bool ok = true;
  std::string why;

  // Diversity loss must equal the independently computed -H(p_hat).
  Rng rng = make_rng(1002, "acc-div");
  std::uniform_real_distribution<double> u(0.02, 1.0);
  double worst_div = 0.0;
  for (int i = 0; i < 1000; ++i) {
    int k = 2 + i % 9;
    nn::Vec p(k);
    for (int d = 0; d < k; ++d) p[d] = u(rng);
    p /= p.sum();
    double h = 0.0;
    for (int d = 0; d < k; ++d) h -= p[d] * std::log(p[d]);
    worst_div = std::max(worst_div, std::abs(loss_diversity(p, k) + h));
  }
  if (worst_div > 1e-8) {
    ok = false;
    why = "diversity-vs-entropy gap " + std::to_string(worst_div);
  }

  // Self-training entropy on the two closed-form bank configurations.
  double two_row, ortho;
  {
    MemoryBank bank({"a", "b"}, 3, 0.05);
    bank.update_row("a", nn::Vec::Unit(3, 0));
    bank.update_row("b", nn::Vec::Unit(3, 1));
    two_row = loss_self_training(bank, {bank.row(0)}, {"a"}).value;
  }
  {
    MemoryBank bank({"a", "b", "c"}, 3, 0.05);
    for (int i = 0; i < 3; ++i)
      bank.update_row(std::string(1, 'a' + i), nn::Vec::Unit(3, i));
    ortho = loss_self_training(bank, {bank.row(0)}, {"a"}).value;
  }
  if (ok && std::abs(two_row) > 1e-6) {
    ok = false;
    why = "2-row bank entropy " + std::to_string(two_row) + " != 0";
  }
  if (ok && std::abs(ortho - std::log(2.0)) > 1e-6) {
    ok = false;
    why = "orthonormal bank entropy " + std::to_string(ortho) + " != log 2";
  }

  // Label-smoothed CE hand value: equal logits, K=2, s=0.1 -> log 2.
  double ce_val = ce_label_smoothed(nn::Vec::Zero(2), 0, 0.1).value;
  if (ok && std::abs(ce_val - 0.6931) > 1e-4) {
    ok = false;
    why = "smoothed CE " + std::to_string(ce_val) + " != 0.6931";
  }

  report(2, ok, "loss oracle suite (diversity, self-training, smoothed CE)",
         ok ? "max diversity gap " + std::to_string(worst_div) +
                  ", bank entropies {" + fmt(two_row) + ", " + fmt(ortho) +
                  "}, CE " + fmt(ce_val)
            : why);
}

// ---------------------------------------------------------------------- 3

void criterion_grad_checks() {
  auto t0 = Clock::now();
  ModelBundle m = build_model(sfda_test::tiny_arch(), 2, 3, 17);
  long n_params = sfda_test::param_count(m);

  Rng rng = make_rng(1003, "acc-grad");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto rand_image = [&] {
    Image img(8, 8, 3);
    for (double& v : img.pixels) v = unit(rng);
    return img;
  };
  std::vector<Image> batch{rand_image(), rand_image()};

  MemoryBank bank({"a", "b", "x0", "x1"}, m.arch.feature_dim, 0.05);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const char* id : {"a", "b", "x0", "x1"}) {
    nn::Vec v(m.arch.feature_dim);
    for (int d = 0; d < v.size(); ++d) v[d] = g(rng);
    bank.update_row(id, v);
  }

  // Each entry: loss name, scalar evaluation, matching analytic backward.
  struct Check {
    std::string name;
    std::function<double()> eval;       // forward only
    std::function<double()> backward;   // forward + param-grad accumulation
  };

  auto goal_eval = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ModelBundle::Fwd f;
      total += ce_label_smoothed(m.forward_goal(batch[i], f),
                                 static_cast<int>(i) % 2, 0.1)
                   .value / batch.size();
    }
    return total;
  };
  auto goal_back = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ModelBundle::Fwd f;
      LossValueGrad lv = ce_label_smoothed(m.forward_goal(batch[i], f),
                                           static_cast<int>(i) % 2, 0.1);
      total += lv.value / batch.size();
      m.backward_goal(f, lv.grad / batch.size());
    }
    return total;
  };

  auto sub_eval = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ModelBundle::Fwd f;
      total += ce(m.forward_subsidiary(batch[i], f), 3).value / batch.size();
    }
    return total;
  };
  auto sub_back = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ModelBundle::Fwd f;
      LossValueGrad lv = ce(m.forward_subsidiary(batch[i], f), 3);
      total += lv.value / batch.size();
      m.backward_subsidiary(f, lv.grad / batch.size());
    }
    return total;
  };

  std::vector<std::string> st_ids{"x0", "x1"};
  auto st_feats = [&] {
    std::vector<nn::Vec> feats;
    for (const Image& img : batch) {
      ModelBundle::Fwd f;
      nn::L2NormCache nc;
      feats.push_back(nn::l2_normalize(m.forward_features(img, f), nc));
    }
    return feats;
  };
  auto st_eval = [&] {
    return loss_self_training(bank, st_feats(), st_ids).value;
  };
  auto st_back = [&] {
    double total = 0.0;
    std::vector<nn::Vec> feats;
    std::vector<ModelBundle::Fwd> fwd(batch.size());
    std::vector<nn::L2NormCache> ncs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
      feats.push_back(
          nn::l2_normalize(m.forward_features(batch[i], fwd[i]), ncs[i]));
    SelfTrainingResult res = loss_self_training(bank, feats, st_ids);
    total = res.value;
    for (std::size_t i = 0; i < batch.size(); ++i)
      m.backward_from_feature(
          fwd[i], nn::l2_normalize_backward(res.feature_grads[i], ncs[i]));
    return total;
  };

  auto div_eval = [&] {
    nn::Vec p_hat = nn::Vec::Zero(m.goal_classes);
    for (const Image& img : batch) {
      ModelBundle::Fwd f;
      p_hat += nn::softmax(m.forward_goal(img, f));
    }
    p_hat /= static_cast<double>(batch.size());
    return loss_diversity(p_hat, m.goal_classes);
  };
  auto div_back = [&] {
    std::vector<ModelBundle::Fwd> fwd(batch.size());
    std::vector<nn::Vec> probs;
    for (std::size_t i = 0; i < batch.size(); ++i)
      probs.push_back(nn::softmax(m.forward_goal(batch[i], fwd[i])));
    nn::Vec p_hat = nn::Vec::Zero(m.goal_classes);
    for (const nn::Vec& p : probs) p_hat += p;
    p_hat /= static_cast<double>(probs.size());
    double value = loss_diversity(p_hat, m.goal_classes);
    std::vector<nn::Vec> grads = loss_diversity_grad(probs);
    for (std::size_t i = 0; i < batch.size(); ++i)
      m.backward_goal(fwd[i], grads[i]);
    return value;
  };

  std::vector<Check> checks{{"goal CE", goal_eval, goal_back},
                            {"subsidiary CE", sub_eval, sub_back},
                            {"self-training", st_eval, st_back},
                            {"diversity", div_eval, div_back}};

  bool ok = n_params <= 1000;
  std::string why =
      ok ? "" : "model has " + std::to_string(n_params) + " params (> 1000)";
  double worst = 0.0;
  std::string worst_at;
  const double eps = 1e-5, tol = 1e-4;

  for (const Check& c : checks) {
    if (!ok) break;
    m.zero_grad();
    c.backward();
    std::vector<nn::Vec> analytic;
    for (nn::Param* p : m.all_params()) analytic.push_back(p->g);

    auto params = m.all_params();
    for (std::size_t pi = 0; pi < params.size() && ok; ++pi) {
      nn::Param* p = params[pi];
      for (Eigen::Index d = 0; d < p->w.size(); ++d) {
        double saved = p->w[d];
        p->w[d] = saved + eps;
        double up = c.eval();
        p->w[d] = saved - eps;
        double dn = c.eval();
        p->w[d] = saved;
        double fd = (up - dn) / (2 * eps);
        double a = analytic[pi][d];
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd),
                                                  1e-4});
        if (rel > worst) {
          worst = rel;
          worst_at = c.name;
        }
        if (rel > tol) {
          ok = false;
          why = c.name + " grad mismatch: analytic " + std::to_string(a) +
                " vs fd " + std::to_string(fd);
          break;
        }
      }
    }
  }
  double dt = seconds_since(t0);
  if (ok && dt >= 120.0) {
    ok = false;
    why = "runtime " + fmt(dt) + "s exceeds 120s";
  }
  report(3, ok, "finite-difference gradient checks (4 losses, " +
                    std::to_string(n_params) + "-param model)",
         ok ? "worst relative error " + std::to_string(worst) + " (" +
                  worst_at + ") in " + fmt(dt) + "s"
            : why);
}

// ---------------------------------------------------------------------- 4

void criterion_phase_contracts() {
  auto [src, tgt] = sfda_test::small_pair(31, 8);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs_goal = 1;
  cfg.epochs_sticker = 1;
  cfg.epochs_adapt = 1;
  cfg.seed = 31;

  Dataset dsn = build_sticker_dataset(src, cfg.task, cfg.sticker, 1, cfg.lambda);
  Dataset dod = build_pseudo_oos_dataset(src, cfg.oos_grid, cfg.sticker_prob,
                                         cfg.sticker, cfg.lambda, 2);
  Dataset dt = tgt;
  for (Sample& s : dt.samples) s.goal_label.reset();
  Dataset dtn = build_sticker_dataset(dt, cfg.task, cfg.sticker, 3, cfg.lambda);

  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 31);
  auto sums = [&] {
    return std::array<std::uint64_t, 3>{
        m.component_checksum(Component::Backbone),
        m.component_checksum(Component::GoalHead),
        m.component_checksum(Component::SubsidiaryHead)};
  };

  bool ok = true;
  std::string why;
  auto s0 = sums();
  pretrain_goal(m, src, dsn, cfg);
  auto s1 = sums();
  if (!(s1[0] != s0[0] && s1[1] != s0[1] && s1[2] == s0[2])) {
    ok = false;
    why = "phase 1 must mutate exactly {backbone, goal head}";
  }
  pretrain_sticker(m, dsn, dod, cfg);
  auto s2 = sums();
  if (ok && !(s2[0] == s1[0] && s2[1] == s1[1] && s2[2] != s1[2])) {
    ok = false;
    why = "phase 2 must mutate exactly {subsidiary head}";
  }
  adapt_target(m, dt, dtn, cfg);
  auto s3 = sums();
  if (ok && !(s3[0] != s2[0] && s3[1] == s2[1] && s3[2] != s2[2])) {
    ok = false;
    why = "phase 3 must mutate exactly {backbone, subsidiary head}";
  }

  // Round-robin isolation: loss A's steps leave loss B's moments bitwise
  // unchanged even though both optimizers manage the same parameters.
  nn::Param shared;
  shared.init_zero(8);
  nn::Adam opt_a({&shared}, 1e-3), opt_b({&shared}, 1e-3);
  shared.g = nn::Vec::Ones(8);
  opt_b.step();
  std::uint64_t b_moments = opt_b.moment_checksum();
  for (int i = 0; i < 5; ++i) {
    shared.g = nn::Vec::Constant(8, 0.5 + i);
    opt_a.step();
  }
  if (ok && opt_b.moment_checksum() != b_moments) {
    ok = false;
    why = "optimizer A's steps perturbed optimizer B's moments";
  }

  report(4, ok, "freezing/phase contracts + optimizer isolation",
         ok ? "mutated sets {h,f_g} / {f_n} / {h,f_n} verified; moments isolated"
            : why);
}

// ---------------------------------------------------------------------- 5

void criterion_a_distance_oracle() {
  // 1D Gaussians N(0,1) vs N(1,1): Bayes error = Phi(-1/2).
  const double bayes = 0.5 * std::erfc(0.5 / std::sqrt(2.0));  // 0.3085
  Rng rng = make_rng(1005, "acc-gauss");
  std::normal_distribution<double> g0(0.0, 1.0), g1(1.0, 1.0);
  const int n = 5000;
  nn::Mat a(n, 1), b(n, 1);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = g0(rng);
    b(i, 0) = g1(rng);
  }
  ADistanceResult r = a_distance(a, b, 1005);
  bool ok = std::abs(r.psi - bayes) <= 0.03;
  std::string why = "probe error " + fmt(r.psi) + " vs Bayes " + fmt(bayes);

  // Monotonicity of the domain-similarity score across shift magnitudes.
  std::vector<double> gammas;
  FeatureFn pixels8 = [](const Image& img) {
    Image small = resize(img, 8, 8);
    return Eigen::Map<const nn::Vec>(small.pixels.data(),
                                     static_cast<Eigen::Index>(
                                         small.pixels.size()))
        .eval();
  };
  for (double mag : {0.0, 0.3, 0.6, 0.9}) {
    auto [src, tgt] =
        make_synthetic_domain_pair(4, 50, {"color", mag}, 1005);
    gammas.push_back(dsm(src, tgt, pixels8, 1005));
  }
  std::string gtxt;
  for (double v : gammas) gtxt += fmt(v) + " ";
  for (std::size_t i = 0; ok && i + 1 < gammas.size(); ++i)
    if (gammas[i + 1] >= gammas[i] + 0.02) {
      ok = false;
      why = "gamma not decreasing at magnitude step " + std::to_string(i + 1);
    }
  if (ok && gammas.back() >= gammas.front()) {
    ok = false;
    why = "gamma did not decrease overall";
  }
  report(5, ok, "A-distance Gaussian oracle + shift monotonicity",
         why + "; gammas over {0,0.3,0.6,0.9}: " + gtxt);
}

// ---------------------------------------------------------------------- 6

void criterion_suitability_ordering() {
  auto t0 = Clock::now();
  auto [src, tgt] =
      make_synthetic_domain_pair(4, 50, {"color", 0.6}, 1006);
  TrainConfig tcfg;
  tcfg.batch_size = 32;
  tcfg.epochs_goal = 10;
  tcfg.seed = 1006;
  Dataset dsn =
      build_sticker_dataset(src, tcfg.task, tcfg.sticker, 5, tcfg.lambda);
  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 1006);
  pretrain_goal(m, src, dsn, tcfg);

  SuitabilityConfig scfg;
  scfg.sticker = tcfg.sticker;
  scfg.seed = 1006;

  std::vector<PretextTask> tasks{
      PretextTask::StickerLocation,       PretextTask::StickerRotation,
      PretextTask::StickerClassification, PretextTask::ImageRotation,
      PretextTask::PatchLocation,         PretextTask::Jigsaw};
  std::map<std::string, SuitabilityReport> reps;
  std::string summary;
  for (PretextTask t : tasks) {
    SuitabilityReport r = suitability(src, t, m, scfg);
    summary += r.task + "(" + fmt(r.dsm) + "," + fmt(r.tsm) + ") ";
    reps[r.task] = r;
  }

  bool ok = true;
  std::string why;
  if (reps["sticker-rot"].dsm <= reps["image-rotation"].dsm) {
    ok = false;
    why = "DSM(sticker-rot) <= DSM(image-rotation)";
  }
  if (ok && reps["sticker-loc"].dsm <= reps["patch-location"].dsm) {
    ok = false;
    why = "DSM(sticker-loc) <= DSM(patch-location)";
  }
  double best = reps["sticker-clsf"].dsm + reps["sticker-clsf"].tsm;
  for (const auto& [name, r] : reps)
    if (ok && name != "sticker-clsf" && r.dsm + r.tsm >= best) {
      ok = false;
      why = "DSM+TSM(" + name + ") >= sticker-clsf";
    }
  double dt = seconds_since(t0);
  if (ok && dt >= 600.0) {
    ok = false;
    why = "runtime " + fmt(dt) + "s exceeds 600s";
  }
  report(6, ok, "suitability ordering across candidate tasks",
         (ok ? "orderings hold" : why) + "; " + summary + "in " + fmt(dt) +
             "s");
}

// ---------------------------------------------------------------------- 7/8

ModelBundle* g_phase2_model = nullptr;  // seed-0 artifact shared with C8
TrainConfig g_study_cfg;

TrainConfig study_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs_goal = 10;
  cfg.seed = seed;
  // Desk-scale sticker instantiation chosen for suitability (Insight-4
  // style control): few glyphs whose evenly spaced signature hues land on
  // the palette the goal backbone separates, and the larger of the two
  // candidate scale ranges. With 10 small glyphs the subsidiary head never
  // exceeds ~20% source accuracy and its target gradients are pure noise;
  // with this instantiation it reaches ~60% and transfers across the shift.
  cfg.sticker.n_glyphs = 4;
  cfg.sticker.scale_min = 0.4;
  cfg.sticker.scale_max = 0.7;
  return cfg;
}

// Phase 2 runs two Adams round-robin over the same head parameters. At this
// model size the near-sign-sized steps of eps=1e-8 make the two optimizers
// cancel instead of compromise, so the study uses SGD-like settings
// (eps >> sqrt(v), lr scaled up accordingly) where steps track gradient
// magnitude again.
TrainConfig sticker_config(const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.lr = 0.1;
  cfg.adam_eps = 1.0;
  cfg.epochs_sticker = 120;
  return cfg;
}

// Phase 3: same magnitude-sensitive regime; the bank lives in classifier
// outputs where the diversity loss counteracts the contraction pull of
// self-training, and a wide temperature keeps neighborhoods soft (a sharp
// T=0.05 over 4-dim logits pulls samples onto wrong-class neighbors).
TrainConfig adapt_config(const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.lr = 3e-4;
  cfg.adam_eps = 1.0;
  cfg.epochs_adapt = 50;
  cfg.temperature = 1.0;
  cfg.bank_space = "goal_logits";
  return cfg;
}

void criterion_adaptation_study() {
  auto t0 = Clock::now();
  ArchConfig arch = sfda_test::small_arch();
  arch.width1 = 8;
  arch.width2 = 16;
  arch.width3 = 16;
  arch.feature_dim = 32;
  arch.goal_hidden = 32;
  arch.subsid_hidden = 32;

  double sum_source_only = 0.0, sum_full = 0.0, sum_baseline = 0.0;
  double sum_da_before = 0.0, sum_da_after = 0.0;
  std::string per_seed;

  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    TrainConfig cfg = study_config(seed);
    auto [src, tgt] =
        make_synthetic_domain_pair(4, 100, {"color", 0.6}, seed);
    Dataset dsn =
        build_sticker_dataset(src, cfg.task, cfg.sticker, seed + 10, cfg.lambda);
    Dataset dod = build_pseudo_oos_dataset(src, cfg.oos_grid, cfg.sticker_prob,
                                           cfg.sticker, cfg.lambda, seed + 20);
    Dataset dt = tgt;
    for (Sample& s : dt.samples) s.goal_label.reset();
    Dataset dtn =
        build_sticker_dataset(dt, cfg.task, cfg.sticker, seed + 30, cfg.lambda);

    ModelBundle m = build_model(arch, 4, cfg.sticker.n_glyphs, seed);
    pretrain_goal(m, src, dsn, cfg);
    pretrain_sticker(m, dsn, dod, sticker_config(cfg));
    double source_only = accuracy(m, tgt, "goal");

    if (seed == 0) {
      g_phase2_model = new ModelBundle(m);
      g_study_cfg = cfg;
    }

    ModelBundle full = m;
    adapt_target(full, dt, dtn, adapt_config(cfg));
    double full_acc = accuracy(full, tgt, "goal");

    TrainConfig ablated = adapt_config(cfg);
    ablated.use_subsidiary = false;  // clustering-only adaptation baseline
    ModelBundle base = m;
    adapt_target(base, dt, dtn, ablated);
    double base_acc = accuracy(base, tgt, "goal");

    ADistancePair da = feature_a_distance_report(m, full, src, tgt, seed);
    sum_source_only += source_only;
    sum_full += full_acc;
    sum_baseline += base_acc;
    sum_da_before += da.before.d_a;
    sum_da_after += da.after.d_a;
    per_seed += "seed" + std::to_string(seed) + "{src-only " +
                fmt(source_only) + ", full " + fmt(full_acc) + ", st+div " +
                fmt(base_acc) + ", d_A " + fmt(da.before.d_a) + "->" +
                fmt(da.after.d_a) + "} ";
  }

  double src_only = 100.0 * sum_source_only / 3.0;
  double full = 100.0 * sum_full / 3.0;
  double base = 100.0 * sum_baseline / 3.0;
  double da_before = sum_da_before / 3.0, da_after = sum_da_after / 3.0;

  bool ok = true;
  std::string why;
  if (full < src_only + 5.0) {
    ok = false;
    why = "full " + fmt(full) + " < source-only " + fmt(src_only) + " + 5";
  }
  if (ok && full < base + 1.0) {
    ok = false;
    why = "full " + fmt(full) + " < st+div baseline " + fmt(base) + " + 1";
  }
  if (ok && da_after >= da_before) {
    ok = false;
    why = "d_A did not decrease (" + fmt(da_before) + " -> " + fmt(da_after) +
          ")";
  }
  double dt = seconds_since(t0);
  if (ok && dt >= 1800.0) {
    ok = false;
    why = "runtime " + fmt(dt) + "s exceeds 1800s";
  }
  report(7, ok, "desk-scale adaptation over 3 seeds",
         (ok ? "full " + fmt(full) + "%, source-only " + fmt(src_only) +
                   "%, st+div " + fmt(base) + "%, mean d_A " +
                   fmt(da_before) + "->" + fmt(da_after)
             : why) +
             "; " + per_seed + "in " + fmt(dt) + "s");
}

void criterion_oos_routing() {
  if (!g_phase2_model) {
    report(8, false, "OOS routing after sticker pretraining",
           "missing phase-2 model from criterion 7");
    return;
  }
  const ModelBundle& m = *g_phase2_model;
  const TrainConfig& cfg = g_study_cfg;
  // Held-out data: fresh draws under seeds never used in training.
  auto [src, tgt] =
      make_synthetic_domain_pair(4, 50, {"color", 0.6}, 901);
  Dataset held_sticker =
      build_sticker_dataset(src, cfg.task, cfg.sticker, 902, cfg.lambda);
  Dataset held_oos = build_pseudo_oos_dataset(
      src, cfg.oos_grid, cfg.sticker_prob, cfg.sticker, cfg.lambda, 903);

  int oos_node = m.sticker_classes;
  auto mean_oos_mass = [&](const Dataset& ds) {
    double total = 0.0;
    for (const Sample& s : ds.samples) {
      ModelBundle::Fwd f;
      total += nn::softmax(m.forward_subsidiary(s.image, f))[oos_node];
    }
    return total / ds.size();
  };
  double oos_mass = mean_oos_mass(held_oos);
  double sticker_mass = mean_oos_mass(held_sticker);
  bool ok = oos_mass >= 0.8 && sticker_mass <= 0.2;
  report(8, ok, "OOS routing after sticker pretraining",
         "mean OOS-node mass: pseudo-OOS " + fmt(oos_mass) +
             " (need >= 0.8), stickered-source " + fmt(sticker_mass) +
             " (need <= 0.2)");
  delete g_phase2_model;
  g_phase2_model = nullptr;
}

// ---------------------------------------------------------------------- 9

struct PipelineResult {
  std::vector<double> losses;
  std::array<std::uint64_t, 3> checksums;
};

PipelineResult run_pipeline(const fs::path& log_path) {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs_goal = 2;
  cfg.epochs_sticker = 2;
  cfg.epochs_adapt = 2;
  cfg.seed = 77;

  auto [src, tgt] = make_synthetic_domain_pair(4, 20, {"color", 0.6}, 77);
  Dataset dsn = build_sticker_dataset(src, cfg.task, cfg.sticker, 1, cfg.lambda);
  Dataset dod = build_pseudo_oos_dataset(src, cfg.oos_grid, cfg.sticker_prob,
                                         cfg.sticker, cfg.lambda, 2);
  Dataset dt = tgt;
  for (Sample& s : dt.samples) s.goal_label.reset();
  Dataset dtn = build_sticker_dataset(dt, cfg.task, cfg.sticker, 3, cfg.lambda);

  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 77);
  {
    MetricsLog log(log_path.string());
    pretrain_goal(m, src, dsn, cfg, &log);
    pretrain_sticker(m, dsn, dod, cfg, &log);
    adapt_target(m, dt, dtn, cfg, &log);
  }

  PipelineResult res;
  res.checksums = {m.component_checksum(Component::Backbone),
                   m.component_checksum(Component::GoalHead),
                   m.component_checksum(Component::SubsidiaryHead)};
  std::ifstream in(log_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    res.losses.push_back(
        nlohmann::json::parse(line).at("value").get<double>());
  }
  return res;
}

void criterion_determinism() {
  fs::path dir = fs::temp_directory_path() / "sfda_acceptance";
  fs::create_directories(dir);
  PipelineResult a = run_pipeline(dir / "run_a.ndjson");
  PipelineResult b = run_pipeline(dir / "run_b.ndjson");

  bool ok = a.checksums == b.checksums &&
            a.losses.size() == b.losses.size() && !a.losses.empty();
  double worst = 0.0;
  std::string why = ok ? "" : "checksum or trajectory-length mismatch";
  for (std::size_t i = 0; ok && i < a.losses.size(); ++i) {
    worst = std::max(worst, std::abs(a.losses[i] - b.losses[i]));
    if (worst > 1e-6) {
      ok = false;
      why = "loss trajectories diverge at step " + std::to_string(i);
    }
  }
  fs::remove_all(dir);
  report(9, ok, "end-to-end determinism (two identical-seed pipelines)",
         ok ? std::to_string(a.losses.size()) +
                  " logged losses identical (max gap " +
                  std::to_string(worst) + "), final checksums equal"
            : why);
}

}  // namespace

int main(int argc, char** argv) {
  // Optional argv: criterion numbers to run (default: all nine).
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  auto wanted = [&](int c) {
    return which.empty() ||
           std::find(which.begin(), which.end(), c) != which.end();
  };

  if (wanted(1)) criterion_intervention();
  if (wanted(2)) criterion_loss_oracles();
  if (wanted(3)) criterion_grad_checks();
  if (wanted(4)) criterion_phase_contracts();
  if (wanted(5)) criterion_a_distance_oracle();
  if (wanted(6)) criterion_suitability_ordering();
  if (wanted(7)) criterion_adaptation_study();
  if (wanted(8)) criterion_oos_routing();
  if (wanted(9)) criterion_determinism();

  if (g_failures == 0) {
    std::printf("acceptance: all 9 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
