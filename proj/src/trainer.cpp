#include "sfda/trainer.hpp"

#include <cmath>

#include "sfda/errors.hpp"

namespace sfda {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (adam_eps <= 0.0) throw ConfigError("adam_eps must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs_goal < 1 || epochs_sticker < 1 || epochs_adapt < 1)
    throw ConfigError("phase epoch caps must be >= 1");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must be in [0,1]");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (smoothing < 0.0 || smoothing >= 1.0)
    throw ConfigError("smoothing must be in [0,1)");
  if (oos_grid < 2) throw ConfigError("oos_grid must be >= 2");
  if (bank_space != "backbone" && bank_space != "goal_logits")
    throw ConfigError("bank_space must be 'backbone' or 'goal_logits'");
}

std::vector<std::pair<std::string, double>> RoundRobin::step(
    ModelBundle& m, const std::vector<std::string>& schedule) {
  std::vector<std::pair<std::string, double>> out;
  for (const std::string& name : schedule) {
    Entry* entry = nullptr;
    for (Entry& e : entries_)
      if (e.name == name) entry = &e;
    if (!entry)
      throw ConfigError("round-robin schedule names unknown loss: " + name);
    m.zero_grad();
    double value = entry->compute();
    entry->optimizer->step();
    out.emplace_back(name, value);
  }
  return out;
}

namespace {

/// Mean label-smoothed CE over one batch, gradients routed through the
/// goal head into the backbone.
double goal_batch_loss(ModelBundle& m, const Dataset& ds,
                       const std::vector<int>& batch, double smoothing) {
  double total = 0.0;
  const double inv_b = 1.0 / batch.size();
  for (int idx : batch) {
    const Sample& s = ds.samples[idx];
    if (!s.goal_label)
      throw DatasetFormatError("unlabeled sample in goal batch: " + s.id);
    ModelBundle::Fwd f;
    nn::Vec logits = m.forward_goal(s.image, f);
    LossValueGrad lv = ce_label_smoothed(logits, *s.goal_label, smoothing);
    total += lv.value * inv_b;
    m.backward_goal(f, lv.grad * inv_b);
  }
  return total;
}

/// Mean CE on the (|C_n|+1)-way subsidiary head.
double subsidiary_batch_loss(ModelBundle& m, const Dataset& ds,
                             const std::vector<int>& batch) {
  double total = 0.0;
  const double inv_b = 1.0 / batch.size();
  for (int idx : batch) {
    const Sample& s = ds.samples[idx];
    if (!s.subsidiary_label)
      throw DatasetFormatError("sample without subsidiary label: " + s.id);
    ModelBundle::Fwd f;
    nn::Vec logits = m.forward_subsidiary(s.image, f);
    LossValueGrad lv = ce(logits, *s.subsidiary_label);
    total += lv.value * inv_b;
    m.backward_subsidiary(f, lv.grad * inv_b);
  }
  return total;
}

nn::Vec bank_feature(const ModelBundle& m, const Image& img,
                     const std::string& bank_space, ModelBundle::Fwd& f,
                     nn::L2NormCache& norm_cache) {
  if (bank_space == "goal_logits")
    return nn::l2_normalize(m.forward_goal(img, f), norm_cache);
  return nn::l2_normalize(m.forward_features(img, f), norm_cache);
}

void bank_feature_backward(ModelBundle& m, const std::string& bank_space,
                           const ModelBundle::Fwd& f,
                           const nn::L2NormCache& norm_cache,
                           const nn::Vec& gf) {
  nn::Vec gz = nn::l2_normalize_backward(gf, norm_cache);
  if (bank_space == "goal_logits")
    m.backward_goal(f, gz);
  else
    m.backward_from_feature(f, gz);
}

}  // namespace

void pretrain_goal(ModelBundle& m, const Dataset& ds, const Dataset& dsn,
                   const TrainConfig& cfg, MetricsLog* log) {
  cfg.validate();
  if (ds.goal_classes != dsn.goal_classes)
    throw DatasetFormatError("pretrain_goal: goal label sets differ");

  m.set_frozen(Component::Backbone, false);
  m.set_frozen(Component::GoalHead, false);
  m.set_frozen(Component::SubsidiaryHead, true);

  Dataset joint = concat(ds, dsn);
  std::vector<nn::Param*> params = m.params(Component::Backbone);
  for (nn::Param* p : m.params(Component::GoalHead)) params.push_back(p);
  nn::Adam opt(params, cfg.lr, 0.9, 0.999, cfg.adam_eps);

  BatchStream stream(joint, cfg.batch_size, derive_seed(cfg.seed, "goal"));
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs_goal; ++epoch) {
    for (int b = 0; b < stream.batches_per_epoch(); ++b, ++step) {
      std::vector<int> batch = stream.next();
      m.zero_grad();
      double loss;
      try {
        loss = goal_batch_loss(m, joint, batch, cfg.smoothing);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (goal phase, batch " +
                           std::to_string(step) + ")");
      }
      opt.step();
      if (log) log->record(step, "source_goal", "L_s_g", loss);
    }
  }
}

void pretrain_sticker(ModelBundle& m, const Dataset& dsn, const Dataset& dod,
                      const TrainConfig& cfg, MetricsLog* log) {
  cfg.validate();
  m.set_frozen(Component::Backbone, true);
  m.set_frozen(Component::GoalHead, true);
  m.set_frozen(Component::SubsidiaryHead, false);

  nn::Adam opt_sn(m.params(Component::SubsidiaryHead), cfg.lr, 0.9, 0.999,
                  cfg.adam_eps);
  nn::Adam opt_od(m.params(Component::SubsidiaryHead), cfg.lr, 0.9, 0.999,
                  cfg.adam_eps);

  BatchStream sn_stream(dsn, cfg.batch_size,
                        derive_seed(cfg.seed, "sticker-sn"));
  BatchStream od_stream(dod, cfg.batch_size,
                        derive_seed(cfg.seed, "sticker-od"));

  long step = 0;
  RoundRobin rr;
  rr.add({"L_s_n",
          [&] { return subsidiary_batch_loss(m, dsn, sn_stream.next()); },
          &opt_sn});
  rr.add({"L_s_od",
          [&] { return subsidiary_batch_loss(m, dod, od_stream.next()); },
          &opt_od});

  std::vector<std::string> schedule{"L_s_n"};
  if (cfg.use_oos) schedule.push_back("L_s_od");

  for (int epoch = 0; epoch < cfg.epochs_sticker; ++epoch) {
    for (int b = 0; b < sn_stream.batches_per_epoch(); ++b, ++step) {
      try {
        for (const auto& [name, value] : rr.step(m, schedule))
          if (log) log->record(step, "source_sticker", name, value);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (sticker phase, batch " +
                           std::to_string(step) + ")");
      }
    }
  }
}

std::unique_ptr<MemoryBank> init_memory_bank(const ModelBundle& m,
                                             const Dataset& joint_target,
                                             const TrainConfig& cfg) {
  std::vector<std::string> ids;
  ids.reserve(joint_target.size());
  for (const Sample& s : joint_target.samples) ids.push_back(s.id);

  int dim = cfg.bank_space == "goal_logits" ? m.goal_classes
                                            : m.arch.feature_dim;
  auto bank =
      std::make_unique<MemoryBank>(ids, dim, cfg.temperature);
  for (const Sample& s : joint_target.samples) {
    ModelBundle::Fwd f;
    nn::L2NormCache nc;
    bank->update_row(s.id, bank_feature(m, s.image, cfg.bank_space, f, nc));
  }
  return bank;
}

void adapt_target(ModelBundle& m, const Dataset& dt, const Dataset& dtn,
                  const TrainConfig& cfg, MetricsLog* log) {
  cfg.validate();
  m.set_frozen(Component::Backbone, false);
  m.set_frozen(Component::GoalHead, true);  // f_g keeps its inductive bias
  m.set_frozen(Component::SubsidiaryHead, false);

  Dataset joint = concat(dt, dtn);
  std::unique_ptr<MemoryBank> bank = init_memory_bank(m, joint, cfg);
  if (!bank->initialized())
    throw ConfigError("memory bank not fully initialized before adaptation");

  std::vector<nn::Param*> backbone = m.params(Component::Backbone);
  std::vector<nn::Param*> backbone_and_sub = backbone;
  for (nn::Param* p : m.params(Component::SubsidiaryHead))
    backbone_and_sub.push_back(p);

  nn::Adam opt_tn(backbone_and_sub, cfg.lr, 0.9, 0.999, cfg.adam_eps);
  nn::Adam opt_st(backbone, cfg.lr, 0.9, 0.999, cfg.adam_eps);
  nn::Adam opt_div(backbone, cfg.lr, 0.9, 0.999, cfg.adam_eps);

  BatchStream joint_stream(joint, cfg.batch_size,
                           derive_seed(cfg.seed, "adapt-joint"));
  BatchStream tn_stream(dtn, cfg.batch_size,
                        derive_seed(cfg.seed, "adapt-tn"));

  // L_st and L_div share the per-step joint batch (Algo-1 step structure);
  // each micro-step re-runs its own forward because the previous
  // optimizer step already moved the shared backbone.
  std::vector<int> joint_batch;

  RoundRobin rr;
  rr.add({"L_t_n",
          [&] { return subsidiary_batch_loss(m, dtn, tn_stream.next()); },
          &opt_tn});
  rr.add({"L_st",
          [&] {
            double loss = 0.0;
            std::vector<nn::Vec> feats;
            std::vector<std::string> ids;
            std::vector<ModelBundle::Fwd> fwd(joint_batch.size());
            std::vector<nn::L2NormCache> ncs(joint_batch.size());
            for (std::size_t i = 0; i < joint_batch.size(); ++i) {
              const Sample& s = joint.samples[joint_batch[i]];
              feats.push_back(
                  bank_feature(m, s.image, cfg.bank_space, fwd[i], ncs[i]));
              ids.push_back(s.id);
            }
            SelfTrainingResult res = loss_self_training(*bank, feats, ids);
            for (std::size_t i = 0; i < joint_batch.size(); ++i)
              bank_feature_backward(m, cfg.bank_space, fwd[i], ncs[i],
                                    res.feature_grads[i]);
            loss = res.value;
            // Detached write-back after this micro-step's update.
            for (std::size_t i = 0; i < joint_batch.size(); ++i)
              bank->update_row(ids[i], feats[i]);
            return loss;
          },
          &opt_st});
  rr.add({"L_div",
          [&] {
            std::vector<ModelBundle::Fwd> fwd(joint_batch.size());
            std::vector<nn::Vec> probs;
            for (std::size_t i = 0; i < joint_batch.size(); ++i) {
              const Sample& s = joint.samples[joint_batch[i]];
              probs.push_back(nn::softmax(m.forward_goal(s.image, fwd[i])));
            }
            nn::Vec p_hat = nn::Vec::Zero(m.goal_classes);
            for (const nn::Vec& p : probs) p_hat += p;
            p_hat /= static_cast<double>(probs.size());
            double loss = loss_diversity(p_hat, m.goal_classes);
            std::vector<nn::Vec> grads = loss_diversity_grad(probs);
            for (std::size_t i = 0; i < joint_batch.size(); ++i)
              m.backward_goal(fwd[i], grads[i]);
            return loss;
          },
          &opt_div});

  std::vector<std::string> schedule;
  if (cfg.use_subsidiary) schedule.push_back("L_t_n");
  if (cfg.use_st) schedule.push_back("L_st");
  if (cfg.use_div) schedule.push_back("L_div");

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs_adapt; ++epoch) {
    for (int b = 0; b < joint_stream.batches_per_epoch(); ++b, ++step) {
      joint_batch = joint_stream.next();
      try {
        for (const auto& [name, value] : rr.step(m, schedule))
          if (log) log->record(step, "adapt", name, value);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (adapt phase, batch " +
                           std::to_string(step) + ")");
      }
    }
  }
}

}  // namespace sfda
