// Operator CLI: data preparation, the three training phases, evaluation,
// suitability reports, and static plots. One command per process; every
// command writes its outputs under the run directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfda/config.hpp"
#include "sfda/dataio.hpp"
#include "sfda/errors.hpp"
#include "sfda/logging.hpp"
#include "sfda/metrics.hpp"
#include "sfda/oos.hpp"
#include "sfda/plot.hpp"
#include "sfda/pretext.hpp"
#include "sfda/sticker.hpp"
#include "sfda/trainer.hpp"

namespace fs = std::filesystem;
using namespace sfda;

namespace {

struct RunContext {
  RunConfig cfg;
  fs::path out;

  fs::path checkpoints() const { return out / "checkpoints"; }
  fs::path plots() const { return out / "plots"; }

  void prepare() const {
    fs::create_directories(out);
    fs::create_directories(checkpoints());
    fs::create_directories(plots());
    std::ofstream snap(out / "config_snapshot.json");
    snap << cfg.to_json() << "\n";
  }

  std::pair<Dataset, Dataset> domain_pair() const {
    return make_synthetic_domain_pair(cfg.n_classes, cfg.n_per_class,
                                      parse_shift_spec(cfg.shift),
                                      cfg.train.seed, cfg.image_size);
  }

  ModelBundle fresh_model() const {
    ArchConfig arch;
    arch.image_size = cfg.image_size;
    return build_model(arch, cfg.n_classes, cfg.train.sticker.n_glyphs,
                       cfg.train.seed);
  }

  ModelBundle load_model(const std::string& name,
                         const std::string& needed_by) const {
    fs::path path = checkpoints() / (name + ".ckpt");
    if (!fs::exists(path))
      throw CheckpointError("missing checkpoint '" + path.string() +
                            "' required by " + needed_by +
                            "; run the earlier phase first");
    ModelBundle m = fresh_model();
    load_checkpoint(m, path.string());
    return m;
  }
};

int cmd_make_data(const RunContext& rc) {
  auto [src, tgt] = rc.domain_pair();
  export_image_folder(src, (rc.out / "data" / "source").string());
  export_image_folder(tgt, (rc.out / "data" / "target").string());
  std::cout << "wrote " << src.size() << " source and " << tgt.size()
            << " target samples under " << (rc.out / "data") << "\n";
  return 0;
}

int cmd_prepare_stickers(const RunContext& rc) {
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  std::vector<StickerSpec> src_specs, tgt_specs;
  Dataset dsn = build_sticker_dataset(src, t.task, t.sticker,
                                      derive_seed(t.seed, "dsn"), t.lambda,
                                      &src_specs);
  Dataset dtn = build_sticker_dataset(tgt, t.task, t.sticker,
                                      derive_seed(t.seed, "dtn"), t.lambda,
                                      &tgt_specs);
  export_image_folder(dsn, (rc.out / "data" / "source_stickered").string());
  export_image_folder(dtn, (rc.out / "data" / "target_stickered").string());
  write_sticker_manifest(dsn, src_specs, t.task,
                         (rc.out / "data" / "source_stickered_manifest.ndjson")
                             .string());
  write_sticker_manifest(dtn, tgt_specs, t.task,
                         (rc.out / "data" / "target_stickered_manifest.ndjson")
                             .string());
  std::cout << "wrote stickered datasets (" << dsn.size() << " + "
            << dtn.size() << " samples) with manifests\n";
  return 0;
}

int cmd_make_oos(const RunContext& rc) {
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  Dataset dod = build_pseudo_oos_dataset(src, t.oos_grid, t.sticker_prob,
                                         t.sticker, t.lambda,
                                         derive_seed(t.seed, "oos"));
  export_image_folder(dod, (rc.out / "data" / "pseudo_oos").string());
  std::cout << "wrote " << dod.size() << " pseudo-OOS samples\n";
  return 0;
}

int cmd_pretrain_goal(const RunContext& rc) {
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  Dataset dsn = build_sticker_dataset(src, t.task, t.sticker,
                                      derive_seed(t.seed, "dsn"), t.lambda);
  ModelBundle m = rc.fresh_model();
  MetricsLog log((rc.out / "metrics_pretrain_goal.ndjson").string());
  pretrain_goal(m, src, dsn, t, &log);
  save_checkpoint(m, "source_goal",
                  (rc.checkpoints() / "goal.ckpt").string());
  std::cout << "source accuracy: " << accuracy(m, src, "goal") << "\n";
  return 0;
}

int cmd_pretrain_sticker(const RunContext& rc) {
  ModelBundle m = rc.load_model("goal", "pretrain-sticker");
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  Dataset dsn = build_sticker_dataset(src, t.task, t.sticker,
                                      derive_seed(t.seed, "dsn"), t.lambda);
  Dataset dod = build_pseudo_oos_dataset(src, t.oos_grid, t.sticker_prob,
                                         t.sticker, t.lambda,
                                         derive_seed(t.seed, "oos"));
  MetricsLog log((rc.out / "metrics_pretrain_sticker.ndjson").string());
  pretrain_sticker(m, dsn, dod, t, &log);
  save_checkpoint(m, "source_sticker",
                  (rc.checkpoints() / "sticker.ckpt").string());
  std::cout << "sticker accuracy (source): " << accuracy(m, dsn, "subsidiary")
            << "\n";
  return 0;
}

int cmd_adapt(const RunContext& rc) {
  ModelBundle m = rc.load_model("sticker", "adapt");
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  Dataset unlabeled_tgt = tgt;
  for (Sample& s : unlabeled_tgt.samples) s.goal_label.reset();
  Dataset dtn = build_sticker_dataset(unlabeled_tgt, t.task, t.sticker,
                                      derive_seed(t.seed, "dtn"), t.lambda);
  MetricsLog log((rc.out / "metrics_adapt.ndjson").string());
  adapt_target(m, unlabeled_tgt, dtn, t, &log);
  save_checkpoint(m, "adapted",
                  (rc.checkpoints() / "adapted.ckpt").string());
  std::cout << "adaptation finished; evaluate with `eval`\n";
  return 0;
}

int cmd_eval(const RunContext& rc, const std::string& which) {
  std::string name = which;
  if (name.empty()) {
    for (const char* cand : {"adapted", "sticker", "goal"})
      if (fs::exists(rc.checkpoints() / (std::string(cand) + ".ckpt"))) {
        name = cand;
        break;
      }
    if (name.empty())
      throw CheckpointError("no checkpoint found under " +
                            rc.checkpoints().string());
  }
  ModelBundle m = rc.load_model(name, "eval");
  auto [src, tgt] = rc.domain_pair();
  std::cout << "checkpoint: " << name << "\n"
            << "source goal accuracy: " << accuracy(m, src, "goal") << "\n"
            << "target goal accuracy: " << accuracy(m, tgt, "goal") << "\n";
  if (name == "adapted" &&
      fs::exists(rc.checkpoints() / "sticker.ckpt")) {
    ModelBundle before = rc.load_model("sticker", "eval");
    ADistancePair pair =
        feature_a_distance_report(before, m, src, tgt, rc.cfg.train.seed);
    std::cout << "source-target d_A before adaptation: " << pair.before.d_a
              << "\nsource-target d_A after adaptation: " << pair.after.d_a
              << "\n";
  }
  return 0;
}

int cmd_suitability(const RunContext& rc, const std::string& task_name) {
  // DSM/TSM both need a frozen goal-pretrained backbone; reuse the phase-1
  // checkpoint when available, otherwise train one now.
  ModelBundle m = rc.fresh_model();
  auto [src, tgt] = rc.domain_pair();
  const TrainConfig& t = rc.cfg.train;
  if (fs::exists(rc.checkpoints() / "goal.ckpt")) {
    load_checkpoint(m, (rc.checkpoints() / "goal.ckpt").string());
  } else {
    Dataset dsn = build_sticker_dataset(src, t.task, t.sticker,
                                        derive_seed(t.seed, "dsn"), t.lambda);
    pretrain_goal(m, src, dsn, t);
  }

  SuitabilityConfig scfg;
  scfg.sticker = t.sticker;
  scfg.lambda = t.lambda;
  scfg.seed = t.seed;
  scfg.variant = parse_formula_variant(rc.cfg.formula_variant);
  scfg.zeta_d = rc.cfg.zeta_d;
  scfg.zeta_n = rc.cfg.zeta_n;
  scfg.zeta = rc.cfg.zeta;
  scfg.equalize_classes = rc.cfg.equalize_classes;

  std::vector<PretextTask> tasks;
  if (task_name.empty() || task_name == "all") {
    tasks = {PretextTask::StickerLocation,      PretextTask::StickerRotation,
             PretextTask::StickerClassification, PretextTask::ImageRotation,
             PretextTask::PatchLocation,         PretextTask::Jigsaw};
  } else {
    tasks = {parse_pretext_task(task_name)};
  }

  std::vector<ScatterPoint> points;
  nlohmann::json all = nlohmann::json::array();
  for (PretextTask task : tasks) {
    SuitabilityReport rep = suitability(src, task, m, scfg);
    all.push_back(nlohmann::json::parse(rep.to_json()));
    points.push_back({rep.dsm, rep.tsm, rep.task});
    std::cout << rep.task << ": DSM=" << rep.dsm << " TSM=" << rep.tsm
              << " passes=" << (rep.passes ? "yes" : "no") << "\n";
  }
  std::ofstream out(rc.out / "suitability.json");
  out << all.dump(2) << "\n";
  write_scatter_svg((rc.plots() / "suitability_scatter.svg").string(),
                    "Subsidiary task suitability", "DSM", "TSM", points, 0.0,
                    1.0, 0.0, 1.0);
  std::cout << "report: " << (rc.out / "suitability.json") << "\n";
  return 0;
}

int cmd_plot_convergence(const RunContext& rc) {
  std::map<std::string, Series> series;
  for (const auto& entry : fs::directory_iterator(rc.out)) {
    std::string fname = entry.path().filename().string();
    if (fname.rfind("metrics_", 0) != 0 ||
        entry.path().extension() != ".ndjson")
      continue;
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      std::string key = j.at("phase").get<std::string>() + "/" +
                        j.at("metric").get<std::string>();
      Series& s = series[key];
      s.name = key;
      s.x.push_back(j.at("step").get<double>());
      s.y.push_back(j.at("value").get<double>());
    }
  }
  if (series.empty()) throw ConfigError("no metrics logs found in run dir");
  std::vector<Series> list;
  for (auto& [k, s] : series) list.push_back(std::move(s));
  write_line_svg((rc.plots() / "convergence.svg").string(),
                 "Training losses", "step", "loss", list);
  std::cout << "wrote " << (rc.plots() / "convergence.svg") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sticker-based source-free domain adaptation harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/run", task, checkpoint;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string formula_variant;
  bool no_subsidiary = false, no_oos = false, no_st = false, no_div = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "run directory");
  app.add_option("--seed", seed, "override train.seed");
  app.add_option("--set", overrides, "config override key=value")
      ->take_all();
  app.add_flag("--no-subsidiary", no_subsidiary, "disable L_t_n");
  app.add_flag("--no-oos", no_oos, "disable the pseudo-OOS loss");
  app.add_flag("--no-st", no_st, "disable the self-training loss");
  app.add_flag("--no-div", no_div, "disable the diversity loss");
  app.add_option("--formula-variant", formula_variant,
                 "a-distance form: standard | paper_verbatim");

  app.add_subcommand("make-data", "generate and export the domain pair");
  app.add_subcommand("prepare-stickers", "export stickered datasets");
  app.add_subcommand("make-oos", "export the pseudo-OOS dataset");
  app.add_subcommand("pretrain-goal", "phase 1: goal-task source training");
  app.add_subcommand("pretrain-sticker", "phase 2: sticker head training");
  app.add_subcommand("adapt", "phase 3: source-free target adaptation");
  auto* eval_cmd = app.add_subcommand("eval", "accuracy + d_A report");
  eval_cmd->add_option("--checkpoint", checkpoint,
                       "which checkpoint: goal | sticker | adapted");
  auto* suit_cmd =
      app.add_subcommand("suitability", "DSM/TSM suitability report");
  suit_cmd->add_option("--task", task,
                       "sticker-loc | sticker-rot | sticker-clsf | "
                       "image-rotation | patch-location | jigsaw | all");
  app.add_subcommand("plot-convergence", "loss curves from metrics logs");

  CLI11_PARSE(app, argc, argv);

  try {
    RunContext rc;
    rc.cfg = RunConfig::load(config_path, overrides);
    if (seed) rc.cfg.train.seed = *seed;
    if (!formula_variant.empty()) rc.cfg.formula_variant = formula_variant;
    rc.cfg.train.use_subsidiary = !no_subsidiary;
    rc.cfg.train.use_oos = !no_oos;
    rc.cfg.train.use_st = !no_st;
    rc.cfg.train.use_div = !no_div;
    rc.out = out_dir;
    rc.prepare();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "make-data") return cmd_make_data(rc);
    if (cmd == "prepare-stickers") return cmd_prepare_stickers(rc);
    if (cmd == "make-oos") return cmd_make_oos(rc);
    if (cmd == "pretrain-goal") return cmd_pretrain_goal(rc);
    if (cmd == "pretrain-sticker") return cmd_pretrain_sticker(rc);
    if (cmd == "adapt") return cmd_adapt(rc);
    if (cmd == "eval") return cmd_eval(rc, checkpoint);
    if (cmd == "suitability") return cmd_suitability(rc, task);
    if (cmd == "plot-convergence") return cmd_plot_convergence(rc);
    std::cerr << "unknown command: " << cmd << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
