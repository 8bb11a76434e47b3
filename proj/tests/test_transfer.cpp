#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edtl/simulator.hpp"
#include "edtl/transfer.hpp"
#include "support/helpers.hpp"

using namespace edtl;
using edtl::testing::bit_equal;

namespace {

TrainConfig quick_cfg(std::uint64_t seed, std::size_t epochs = 5) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

Dataset quick_source(std::size_t n, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n_rows = n;
  cfg.seed = seed;
  cfg.dt = 1.0;  // coarse integration is fine for test data
  return generate_line(profile_alpha(), cfg, TargetKind::electricity);
}

}  // namespace

TEST_CASE("pretrain records validation quality and is deterministic") {
  const Dataset source = quick_source(600, 2);
  const auto a = pretrain(source, quick_cfg(5), {16, 16, 16, 16});
  const auto b = pretrain(source, quick_cfg(5), {16, 16, 16, 16});
  CHECK(bit_equal(a.net, b.net));
  CHECK(a.report.val_mse > 0.0);
  CHECK(a.source_schema == source.schema);
  CHECK(a.net.input_dim() == source.n_features());
  CHECK(a.scaler.means.size() == source.n_features());

  Dataset empty = source;
  empty.rows = Matrix(0, source.n_features());
  empty.targets.clear();
  CHECK_THROWS_AS(pretrain(empty, quick_cfg(5)), std::invalid_argument);
}

TEST_CASE("adapt_input rebuilds the first layer and copies the rest") {
  const Dataset source = quick_source(400, 3);
  const auto pre = pretrain(source, quick_cfg(7, 2), {12, 12, 12, 12});

  FeatureSchema target_schema;
  target_schema.names = {"s1", "s2", "s3", "s4", "s5", "s6", "s7"};
  target_schema.target_name = "E";

  const auto adapted = adapt_input(pre, target_schema, 11);
  CHECK(adapted.layer_count() == pre.net.layer_count());
  CHECK(adapted.input_dim() == 7);
  CHECK(adapted.layers[0].out_dim() == pre.net.layers[0].out_dim());
  for (std::size_t j = 1; j < adapted.layer_count(); ++j)
    CHECK(bit_equal(adapted.layers[j], pre.net.layers[j]));

  SUBCASE("identical schema still re-initializes the first layer") {
    const auto same = adapt_input(pre, source.schema, 11);
    CHECK_FALSE(bit_equal(same.layers[0], pre.net.layers[0]));
    for (std::size_t j = 1; j < same.layer_count(); ++j)
      CHECK(bit_equal(same.layers[j], pre.net.layers[j]));
  }

  SUBCASE("two seeds differ only in the adaptation layer") {
    const auto s1 = adapt_input(pre, target_schema, 1);
    const auto s2 = adapt_input(pre, target_schema, 2);
    CHECK_FALSE(bit_equal(s1.layers[0], s2.layers[0]));
    for (std::size_t j = 1; j < s1.layer_count(); ++j)
      CHECK(bit_equal(s1.layers[j], s2.layers[j]));
  }
}

TEST_CASE("make_base_specs: k = J + 1") {
  const auto specs4 = make_base_specs(4);
  REQUIRE(specs4.size() == 5);
  CHECK(specs4[0].strategy == BaseModelSpec::Strategy::tune_hidden);
  CHECK(specs4[0].hidden_index == 1);
  CHECK(specs4[3].hidden_index == 4);
  CHECK(specs4[4].strategy == BaseModelSpec::Strategy::tune_all);

  CHECK(make_base_specs(1).size() == 2);
  CHECK_THROWS_AS(make_base_specs(0), std::invalid_argument);
}

TEST_CASE("freeze_mask wiring") {
  const auto specs = make_base_specs(4);
  const std::size_t L = 5;

  SUBCASE("tune_hidden(2): adaptation true, hidden-2 true, others false, output per switch") {
    const auto mask = freeze_mask(specs[1], L, true);
    CHECK(mask.trainable == std::vector<bool>{true, true, false, false, true});
    const auto frozen_out = freeze_mask(specs[1], L, false);
    CHECK(frozen_out.trainable == std::vector<bool>{true, true, false, false, false});
  }
  SUBCASE("tune_hidden(1): the designated layer is the adaptation layer itself") {
    const auto mask = freeze_mask(specs[0], L, true);
    CHECK(mask.trainable == std::vector<bool>{true, false, false, false, true});
  }
  SUBCASE("tune_all: everything trains") {
    const auto mask = freeze_mask(specs[4], L, true);
    CHECK(mask.trainable == std::vector<bool>(L, true));
  }
  SUBCASE("masks are pairwise distinct") {
    for (std::size_t a = 0; a < specs.size(); ++a)
      for (std::size_t b = a + 1; b < specs.size(); ++b)
        CHECK(freeze_mask(specs[a], L).trainable != freeze_mask(specs[b], L).trainable);
  }
}

TEST_CASE("fine_tune obeys the freeze contract") {
  const Dataset source = quick_source(500, 13);
  const auto pre = pretrain(source, quick_cfg(13, 3), {10, 10, 10, 10});

  SimConfig tcfg;
  tcfg.n_rows = 120;
  tcfg.seed = 77;
  tcfg.dt = 1.0;
  const Dataset target_raw = generate_line(profile_beta(), tcfg, TargetKind::electricity);
  const auto [target_std, scaler] = fit_standardize(target_raw);

  const auto adapted = adapt_input(pre, target_raw.schema, 5);
  const auto specs = make_base_specs(adapted.hidden_count());

  SUBCASE("tune_hidden(3): only {adapt, hidden-3, output} move") {
    const auto tuned = fine_tune(adapted, specs[2], target_std, quick_cfg(3));
    CHECK_FALSE(bit_equal(tuned.layers[0], adapted.layers[0]));
    CHECK(bit_equal(tuned.layers[1], adapted.layers[1]));
    CHECK_FALSE(bit_equal(tuned.layers[2], adapted.layers[2]));
    CHECK(bit_equal(tuned.layers[3], adapted.layers[3]));
    CHECK_FALSE(bit_equal(tuned.layers[4], adapted.layers[4]));
  }

  SUBCASE("every spec reduces training loss from the adapted init") {
    const double before = evaluate_mse(adapted, target_std);
    for (const auto& spec : specs) {
      const auto tuned = fine_tune(adapted, spec, target_std, quick_cfg(31, 8));
      CHECK(evaluate_mse(tuned, target_std) < before);
    }
  }

  SUBCASE("base models agree bit-exactly on mutually frozen layers") {
    const auto t2 = fine_tune(adapted, specs[1], target_std, quick_cfg(3));
    const auto t3 = fine_tune(adapted, specs[2], target_std, quick_cfg(4));
    // hidden-4 (weight layer 3) is frozen in both
    CHECK(bit_equal(t2.layers[3], adapted.layers[3]));
    CHECK(bit_equal(t3.layers[3], adapted.layers[3]));
    CHECK(bit_equal(t2.layers[3], t3.layers[3]));
  }
}
