#include "doctest.h"
#include "sfda/errors.hpp"
#include "sfda/trainer.hpp"
#include "test_util.hpp"

using namespace sfda;

namespace {

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs_goal = 1;
  cfg.epochs_sticker = 1;
  cfg.epochs_adapt = 1;
  cfg.seed = 9;
  return cfg;
}

struct Phase2Fixture {
  Dataset src, tgt, dsn, dod, dtn;
  TrainConfig cfg = quick_config();

  Phase2Fixture() {
    std::tie(src, tgt) = sfda_test::small_pair(9, 8);
    dsn = build_sticker_dataset(src, cfg.task, cfg.sticker, 1, cfg.lambda);
    dod = build_pseudo_oos_dataset(src, cfg.oos_grid, cfg.sticker_prob,
                                   cfg.sticker, cfg.lambda, 2);
    for (Sample& s : tgt.samples) s.goal_label.reset();
    dtn = build_sticker_dataset(tgt, cfg.task, cfg.sticker, 3, cfg.lambda);
  }
};

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.bank_space = "pixel";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lambda = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("round robin runs losses in schedule order, one step each") {
  ModelBundle m = build_model(sfda_test::tiny_arch(), 2, 3, 1);
  nn::Param dummy;
  dummy.init_zero(1);
  nn::Adam opt_a({&dummy}, 1e-3), opt_b({&dummy}, 1e-3);

  std::vector<std::string> order;
  RoundRobin rr;
  rr.add({"A", [&] { order.push_back("A"); return 1.0; }, &opt_a});
  rr.add({"B", [&] { order.push_back("B"); return 2.0; }, &opt_b});

  auto out = rr.step(m, {"A", "B", "A"});
  CHECK(order == std::vector<std::string>{"A", "B", "A"});
  REQUIRE(out.size() == 3);
  CHECK(out[0].second == 1.0);
  CHECK(out[1].second == 2.0);
  CHECK_THROWS_AS(rr.step(m, {"C"}), ConfigError);
}

TEST_CASE("optimizer moments are isolated between losses") {
  nn::Param p;
  p.init_zero(4);
  nn::Adam opt_a({&p}, 1e-3), opt_b({&p}, 1e-3);
  p.g = nn::Vec::Ones(4);
  opt_a.step();
  std::uint64_t b_before = opt_b.moment_checksum();
  p.g = nn::Vec::Ones(4) * 2.0;
  opt_a.step();
  CHECK(opt_b.moment_checksum() == b_before);
  CHECK(opt_a.moment_checksum() != b_before);
}

TEST_CASE("goal pretraining mutates only the backbone and goal head") {
  Phase2Fixture fx;
  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 5);
  std::uint64_t sub = m.component_checksum(Component::SubsidiaryHead);
  std::uint64_t bb = m.component_checksum(Component::Backbone);
  std::uint64_t goal = m.component_checksum(Component::GoalHead);

  pretrain_goal(m, fx.src, fx.dsn, fx.cfg);
  CHECK(m.component_checksum(Component::SubsidiaryHead) == sub);
  CHECK(m.component_checksum(Component::Backbone) != bb);
  CHECK(m.component_checksum(Component::GoalHead) != goal);
}

TEST_CASE("sticker pretraining mutates only the subsidiary head") {
  Phase2Fixture fx;
  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 5);
  pretrain_goal(m, fx.src, fx.dsn, fx.cfg);
  std::uint64_t sub = m.component_checksum(Component::SubsidiaryHead);
  std::uint64_t bb = m.component_checksum(Component::Backbone);
  std::uint64_t goal = m.component_checksum(Component::GoalHead);

  pretrain_sticker(m, fx.dsn, fx.dod, fx.cfg);
  CHECK(m.component_checksum(Component::SubsidiaryHead) != sub);
  CHECK(m.component_checksum(Component::Backbone) == bb);
  CHECK(m.component_checksum(Component::GoalHead) == goal);
}

TEST_CASE("adaptation mutates the backbone and subsidiary head, not f_g") {
  Phase2Fixture fx;
  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 5);
  pretrain_goal(m, fx.src, fx.dsn, fx.cfg);
  pretrain_sticker(m, fx.dsn, fx.dod, fx.cfg);
  std::uint64_t sub = m.component_checksum(Component::SubsidiaryHead);
  std::uint64_t bb = m.component_checksum(Component::Backbone);
  std::uint64_t goal = m.component_checksum(Component::GoalHead);

  Dataset dt = fx.tgt;
  adapt_target(m, dt, fx.dtn, fx.cfg);
  CHECK(m.component_checksum(Component::SubsidiaryHead) != sub);
  CHECK(m.component_checksum(Component::Backbone) != bb);
  CHECK(m.component_checksum(Component::GoalHead) == goal);
}

TEST_CASE("memory bank is initialized over the full joint target set") {
  Phase2Fixture fx;
  ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 5);
  Dataset joint = concat(fx.tgt, fx.dtn);
  auto bank = init_memory_bank(m, joint, fx.cfg);
  CHECK(bank->rows() == static_cast<int>(joint.size()));
  CHECK(bank->dim() == 16);
  CHECK(bank->initialized());
  for (int r = 0; r < bank->rows(); ++r)
    CHECK(bank->row(r).norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("training runs are seed-reproducible") {
  Phase2Fixture fx;
  auto run = [&] {
    ModelBundle m = build_model(sfda_test::small_arch(), 4, 10, 5);
    pretrain_goal(m, fx.src, fx.dsn, fx.cfg);
    pretrain_sticker(m, fx.dsn, fx.dod, fx.cfg);
    Dataset dt = fx.tgt;
    adapt_target(m, dt, fx.dtn, fx.cfg);
    return std::tuple{m.component_checksum(Component::Backbone),
                      m.component_checksum(Component::GoalHead),
                      m.component_checksum(Component::SubsidiaryHead)};
  };
  CHECK(run() == run());
}
