#include "sfda/config.hpp"

#include <fstream>

#include "json.hpp"
#include "sfda/errors.hpp"

namespace sfda {

namespace {
using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}
}  // namespace

RunConfig RunConfig::load(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ConfigError("config parse error in " + config_path + ": " +
                        e.what());
    }
    maybe(j, "n_classes", cfg.n_classes);
    maybe(j, "n_per_class", cfg.n_per_class);
    maybe(j, "shift", cfg.shift);
    maybe(j, "image_size", cfg.image_size);
    maybe(j, "zeta_d", cfg.zeta_d);
    maybe(j, "zeta_n", cfg.zeta_n);
    maybe(j, "zeta", cfg.zeta);
    maybe(j, "formula_variant", cfg.formula_variant);
    maybe(j, "equalize_classes", cfg.equalize_classes);
    if (j.contains("train")) {
      const json& t = j.at("train");
      maybe(t, "lr", cfg.train.lr);
      maybe(t, "adam_eps", cfg.train.adam_eps);
      maybe(t, "batch_size", cfg.train.batch_size);
      maybe(t, "epochs_goal", cfg.train.epochs_goal);
      maybe(t, "epochs_sticker", cfg.train.epochs_sticker);
      maybe(t, "epochs_adapt", cfg.train.epochs_adapt);
      maybe(t, "lambda", cfg.train.lambda);
      maybe(t, "oos_grid", cfg.train.oos_grid);
      maybe(t, "sticker_prob", cfg.train.sticker_prob);
      maybe(t, "temperature", cfg.train.temperature);
      maybe(t, "smoothing", cfg.train.smoothing);
      maybe(t, "seed", cfg.train.seed);
      maybe(t, "bank_space", cfg.train.bank_space);
      if (t.contains("task"))
        cfg.train.task = parse_sticker_task(t.at("task").get<std::string>());
      if (t.contains("sticker")) {
        const json& s = t.at("sticker");
        maybe(s, "n_glyphs", cfg.train.sticker.n_glyphs);
        maybe(s, "glyph_seed", cfg.train.sticker.glyph_seed);
        maybe(s, "scale_min", cfg.train.sticker.scale_min);
        maybe(s, "scale_max", cfg.train.sticker.scale_max);
        maybe(s, "n_textures", cfg.train.sticker.n_textures);
      }
    }
  }
  for (const std::string& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + ov);
    cfg.apply_override(ov.substr(0, eq), ov.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void RunConfig::apply_override(const std::string& key,
                               const std::string& value) {
  auto numeric = [&](auto&& parse) {
    try {
      return parse(value);
    } catch (const std::exception&) {
      throw ConfigError("bad numeric value for " + key + ": " + value);
    }
  };
  auto as_int = [&] { return numeric([](const std::string& v) { return std::stoi(v); }); };
  auto as_double = [&] { return numeric([](const std::string& v) { return std::stod(v); }); };
  auto as_u64 = [&] {
    return numeric([](const std::string& v) -> std::uint64_t { return std::stoull(v); });
  };

  if (key == "n_classes") n_classes = as_int();
  else if (key == "n_per_class") n_per_class = as_int();
  else if (key == "shift") shift = value;
  else if (key == "image_size") image_size = as_int();
  else if (key == "zeta_d") zeta_d = as_double();
  else if (key == "zeta_n") zeta_n = as_double();
  else if (key == "zeta") zeta = as_double();
  else if (key == "formula_variant") formula_variant = value;
  else if (key == "equalize_classes") equalize_classes = as_int();
  else if (key == "train.lr") train.lr = as_double();
  else if (key == "train.adam_eps") train.adam_eps = as_double();
  else if (key == "train.batch_size") train.batch_size = as_int();
  else if (key == "train.epochs_goal") train.epochs_goal = as_int();
  else if (key == "train.epochs_sticker") train.epochs_sticker = as_int();
  else if (key == "train.epochs_adapt") train.epochs_adapt = as_int();
  else if (key == "train.lambda") train.lambda = as_double();
  else if (key == "train.task") train.task = parse_sticker_task(value);
  else if (key == "train.oos_grid") train.oos_grid = as_int();
  else if (key == "train.sticker_prob") train.sticker_prob = as_double();
  else if (key == "train.temperature") train.temperature = as_double();
  else if (key == "train.smoothing") train.smoothing = as_double();
  else if (key == "train.seed") train.seed = as_u64();
  else if (key == "train.bank_space") train.bank_space = value;
  else if (key == "train.sticker.n_glyphs") train.sticker.n_glyphs = as_int();
  else if (key == "train.sticker.glyph_seed") train.sticker.glyph_seed = as_u64();
  else if (key == "train.sticker.scale_min") train.sticker.scale_min = as_double();
  else if (key == "train.sticker.scale_max") train.sticker.scale_max = as_double();
  else if (key == "train.sticker.n_textures") train.sticker.n_textures = as_int();
  else throw ConfigError("unknown config key: " + key);
}

std::string RunConfig::to_json() const {
  json j{
      {"n_classes", n_classes},
      {"n_per_class", n_per_class},
      {"shift", shift},
      {"image_size", image_size},
      {"zeta_d", zeta_d},
      {"zeta_n", zeta_n},
      {"zeta", zeta},
      {"formula_variant", formula_variant},
      {"equalize_classes", equalize_classes},
      {"train",
       {{"lr", train.lr},
        {"adam_eps", train.adam_eps},
        {"batch_size", train.batch_size},
        {"epochs_goal", train.epochs_goal},
        {"epochs_sticker", train.epochs_sticker},
        {"epochs_adapt", train.epochs_adapt},
        {"lambda", train.lambda},
        {"task", sticker_task_name(train.task)},
        {"oos_grid", train.oos_grid},
        {"sticker_prob", train.sticker_prob},
        {"temperature", train.temperature},
        {"smoothing", train.smoothing},
        {"seed", train.seed},
        {"bank_space", train.bank_space},
        {"use_subsidiary", train.use_subsidiary},
        {"use_oos", train.use_oos},
        {"use_st", train.use_st},
        {"use_div", train.use_div},
        {"sticker",
         {{"n_glyphs", train.sticker.n_glyphs},
          {"glyph_seed", train.sticker.glyph_seed},
          {"scale_min", train.sticker.scale_min},
          {"scale_max", train.sticker.scale_max},
          {"n_textures", train.sticker.n_textures}}}}},
  };
  return j.dump(2);
}

void RunConfig::validate() const {
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  if (image_size < 32 || image_size % 8 != 0)
    throw ConfigError("image_size must be >= 32 and a multiple of 8");
  parse_shift_spec(shift);
  parse_formula_variant(formula_variant);
  train.validate();
}

}  // namespace sfda
