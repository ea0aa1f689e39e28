#include <gtest/gtest.h>

#include <filesystem>

#include "gmp/config.hpp"
#include "gmp/errors.hpp"

using namespace gmp;

namespace {

std::size_t error_line(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Config, DefaultsWhenEmpty) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg, ExperimentConfig{});
}

TEST(Config, ParsesSectionsAndComments) {
  const auto cfg = parse_config(
      "# leading comment\n"
      "[data]\n"
      "preset = asym-v\n"
      "seed = 7\n"
      "; another comment\n"
      "\n"
      "[train]\n"
      "strategy = cagp_only\n"
      "eta = 0.05\n"
      "[run]\n"
      "seeds = 0, 1,2\n");
  EXPECT_EQ(cfg.data.seed, 7u);
  EXPECT_EQ(cfg.train.strategy, Strategy::CagpOnly);
  EXPECT_EQ(cfg.train.eta, 0.05);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(Config, PresetAppliesBeforeOverridesRegardlessOfOrder) {
  const auto cfg = parse_config("[data]\ndomain_leak_v = 0.5\npreset = asym-v\n");
  auto expected = synth::SynthConfig::preset("asym-v");
  expected.domain_leak.v = 0.5;
  EXPECT_EQ(cfg.data, expected);
}

TEST(Config, CanonicalTextRoundTrips) {
  ExperimentConfig cfg;
  cfg.data.noise_std.a = 0.123456789012345678;
  cfg.train.lambda = 1.0 / 3.0;
  cfg.train.strategy = Strategy::FixedProjDomain;
  cfg.train.track_loss_change = false;
  cfg.seeds = {4, 5};
  cfg.target_domain = 1;
  EXPECT_EQ(parse_config(to_config_text(cfg)), cfg);
}

TEST(Config, ApplySeedSetsEverySeed) {
  ExperimentConfig cfg;
  cfg.apply_seed(9);
  EXPECT_EQ(cfg.data.seed, 9u);
  EXPECT_EQ(cfg.model_seed, 9u);
  EXPECT_EQ(cfg.train.seed, 9u);
  cfg.seeds.clear();
  EXPECT_EQ(cfg.run_seeds(), (std::vector<std::uint64_t>{9}));
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[data]\nnum_classes = 3\nbogus = 1\n"), 3u);
  EXPECT_EQ(error_line("[nope]\n"), 1u);
  EXPECT_EQ(error_line("[train]\neta = 0.1\neta = 0.2\n"), 3u);
  EXPECT_EQ(error_line("[train]\n\nepochs = many\n"), 3u);
  EXPECT_EQ(error_line("x = 1\n"), 1u);
  EXPECT_EQ(error_line("[train]\nno equals sign\n"), 2u);
  EXPECT_EQ(error_line("[train\n"), 1u);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config("[train]\nstrategy = magic\n"), Error);
  EXPECT_THROW(parse_config("[train]\neta = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[split]\nval_fraction = 1.0\n"), ConfigError);
  EXPECT_THROW(parse_config("[split]\ntarget_domain = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[data]\npreset = nothing\n"), ConfigError);
}

TEST(Config, LoadMissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/dir/cfg.ini"), ConfigError);
}

TEST(Config, ShippedBenchmarkConfigLoads) {
  const auto cfg = load_config(std::filesystem::path(GMP_SOURCE_DIR) / "configs" / "asym-v.ini");
  EXPECT_EQ(cfg.run_seeds().size(), 5u);
  EXPECT_EQ(cfg.train.strategy, Strategy::Gmp);
}
