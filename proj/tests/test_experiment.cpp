#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hexloop/experiment.hpp"

using namespace hexloop;

namespace {

struct SignBug {
  double operator()(const GibbsSpec& s, int loops, int edges) const {
    return -loops * std::log(s.n) + edges * std::log(s.x);
  }
};

ExperimentConfig populated() {
  ExperimentConfig c;
  c.command = "rsw";
  c.n = 1.25;
  c.x = 0.1;  // not exactly representable
  c.p = 0.3;
  c.r = 3;
  c.k = 4;
  c.window = 1;
  c.cut = 2;
  c.seed = 18446744073709551615ull;
  c.sweeps = 7;
  c.burnin = 11;
  c.samples = 123;
  c.chains = 3;
  c.threads = 2;
  c.boundary = std::vector<int>{4, 8, 15};
  c.grid_n = {1.0, 1.0 / 3.0};
  c.grid_x = {std::sqrt(0.5)};
  c.grid_k = {2, 3};
  c.eps = 0.01;
  c.scale = 0.25;
  c.tolerances = {{"law_preservation", 1e-10}, {"rsw_lo", 0.0}};
  c.out = "out/x.csv";
  return c;
}

}  // namespace

TEST(Config, RoundTrip) {
  for (const auto& c : {ExperimentConfig{}, populated()}) {
    EXPECT_EQ(ExperimentConfig::parse(c.emit()), c);
    EXPECT_EQ(ExperimentConfig::parse(ExperimentConfig::parse(c.emit()).emit()).emit(), c.emit());
  }
}

TEST(Config, Validation) {
  EXPECT_THROW(ExperimentConfig::parse(R"({"n": -1})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"x": 0})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"p": 1.5})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"r": -1})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"seed": -3})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"seed": 1.5})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"sedd": 1})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"command": "frobnicate"})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"n": "two"})"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse("{"), RangeError);
  EXPECT_THROW(ExperimentConfig::parse("[]"), RangeError);
  EXPECT_EQ(ExperimentConfig::parse(R"({"seed": 18446744073709551615})").seed, 18446744073709551615ull);
  EXPECT_FALSE(ExperimentConfig::parse(R"({"boundary": "empty"})").boundary.has_value());
  EXPECT_THROW((void)ExperimentConfig{}.require_seed(), RangeError);
}

TEST(Csv, FullPrecision) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  Csv csv({"a", "b"});
  csv.row({Csv::num(0.2), Csv::num(7)});
  EXPECT_EQ(csv.str(), "a,b\n0.20000000000000001,7\n");
}

TEST(Seeds, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 5), derive_seed(42, 5));
  EXPECT_NE(derive_seed(42, 5), derive_seed(43, 5));
}

TEST(ParallelMap, OrderAndErrors) {
  const auto v = parallel_map<int>(100, 4, [](int i) { return i * i; });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(parallel_map<int>(10, 3,
                                 [](int i) {
                                   if (i == 7) throw PreconditionError("boom");
                                   return i;
                                 }),
               PreconditionError);
  EXPECT_TRUE(parallel_map<int>(0, 4, [](int i) { return i; }).empty());
}

TEST(Polyhex, FixedCounts) {
  // Fixed polyhexes: 1, 3, 11, 44, 186, 814.
  const std::vector<std::size_t> expected{1, 3, 11, 44, 186, 814};
  for (int s = 1; s <= 6; ++s) EXPECT_EQ(fixed_polyhexes(s).size(), expected[s - 1]) << s;
  CounterRng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto cells = random_polyhex(12, rng);
    EXPECT_EQ(std::set<FaceCoord>(cells.begin(), cells.end()).size(), 12u);
  }
  // The ring of six around a hole is not simply connected.
  std::vector<FaceCoord> ring(kFaceDirections.begin(), kFaceDirections.end());
  EXPECT_FALSE(spec_on(ring, 1, 1).has_value());
  ring.push_back({0, 0});
  EXPECT_TRUE(spec_on(ring, 1, 1).has_value());
}

TEST(Commands, EnumerateSingleHexagon) {
  ExperimentConfig c;
  c.command = "enumerate";
  c.r = 0;
  c.n = 2;
  c.x = 1 / std::sqrt(2.0);
  auto res = run_command(c);
  auto j = nlohmann::json::parse(res.payload);
  EXPECT_NEAR(j["p_loop_origin"].get<double>(), 0.2, 1e-12);
  EXPECT_NEAR(j["z"].get<double>(), 1.25, 1e-12);
  c.n = c.x = 1;
  j = nlohmann::json::parse(run_command(c).payload);
  EXPECT_NEAR(j["p_loop_origin"].get<double>(), 0.5, 1e-12);
  c.r = 3;
  EXPECT_THROW(run_command(c), RangeError);
}

TEST(Commands, SampleIsThreadInvariant) {
  ExperimentConfig c;
  c.command = "sample";
  c.r = 2;
  c.n = 1.5;
  c.x = 0.8;
  c.seed = 9;
  c.samples = 50;
  c.burnin = 20;
  c.chains = 4;
  c.threads = 1;
  const auto one = run_command(c).payload;
  c.threads = 4;
  EXPECT_EQ(run_command(c).payload, one);
  c.seed = 10;
  EXPECT_NE(run_command(c).payload, one);
  c.seed.reset();
  EXPECT_THROW(run_command(c), RangeError);
}

TEST(Commands, RswGrid) {
  ExperimentConfig c;
  c.command = "rsw";
  c.seed = 1;
  EXPECT_EQ(run_command(c).payload, "n,x,k,estimate,ci_lo,ci_hi,samples,supported\n");
  c.grid_n = {1.0};
  c.grid_x = {1e-3, 1.0};
  c.grid_k = {2};
  c.samples = 2000;
  c.burnin = 200;
  c.chains = 2;
  const auto res = run_command(c);
  ASSERT_EQ(res.report.rows.size(), 2u);
  EXPECT_EQ(res.report.rows[0].value, 0.0);
  EXPECT_GT(res.report.rows[1].value, 0.0);
  EXPECT_EQ(res.report.rows[1].n_samples, 4000);
  c.threads = 3;
  EXPECT_EQ(run_command(c).payload, res.payload);
}

TEST(Commands, Blocking) {
  ExperimentConfig c;
  c.command = "blocking";
  c.seed = 4;
  c.samples = 100;
  c.burnin = 50;
  c.grid_n = {1.0, 2.0};
  c.grid_x = {1.0, 1 / std::sqrt(2.0)};
  c.grid_k = {1, 2};
  auto res = run_command(c);
  EXPECT_TRUE(res.report.pass()) << res.report.to_json().dump(1);
  EXPECT_EQ(res.report.rows.size(), 8u);
  c.grid_n = {2.0};
  c.grid_x = {1 / std::sqrt(2.0)};
  c.grid_k = {2, 3};
  res = run_command(c);
  EXPECT_TRUE(res.report.pass()) << res.report.to_json().dump(1);
  EXPECT_EQ(res.report.assertions.size(), 1u);
  c.grid_n = {0.5};
  EXPECT_THROW(run_command(c), RangeError);
}

TEST(Commands, ArmsAndTrifurcation) {
  ExperimentConfig c;
  c.command = "arms";
  c.seed = 2;
  c.r = 6;
  c.cut = 2;
  c.k = 1;
  c.samples = 200;
  auto res = run_command(c);
  EXPECT_TRUE(res.report.pass());
  EXPECT_TRUE(nlohmann::json::parse(res.payload).contains("pij"));
  c.command = "trifurcation";
  c.samples = 50;
  res = run_command(c);
  EXPECT_TRUE(res.report.pass());
  c.threads = 3;
  EXPECT_EQ(run_command(c).payload, res.payload);
}

TEST(Commands, Couple) {
  ExperimentConfig c;
  c.command = "couple";
  c.seed = 3;
  c.r = 1;
  c.window = 0;
  c.n = 1.5;
  c.x = 0.8;
  c.samples = 300;
  c.burnin = 50;
  const auto res = run_command(c);
  EXPECT_TRUE(res.report.pass());
  EXPECT_EQ(res.report.assertions.front().kind, "exact");
  c.window = 2;
  EXPECT_THROW(run_command(c), RangeError);
}

TEST(Suite, ExactChecksAtSmallScale) {
  SuiteOptions o;
  o.scale = 0.01;
  o.seed = 5;
  EXPECT_TRUE(check_law_preservation(o).pass);
  EXPECT_TRUE(check_delta_equivalence(o).pass);
  EXPECT_TRUE(check_fkg(o).pass);
  EXPECT_TRUE(check_trifurcation(o).pass);
  EXPECT_TRUE(check_catalan(o).pass);
}

TEST(Suite, SignBugIsCaught) {
  SuiteOptions o;
  const auto law = check_law_preservation(o, SignBug{});
  EXPECT_FALSE(law.pass);
  EXPECT_GT(law.value, 1e-3);
  const auto spec = GibbsSpec::ball(1, 2.0, 0.8);
  EXPECT_LT(detailed_balance_error(spec), 1e-12);
  EXPECT_GT(detailed_balance_error(spec, SignBug{}), 1e-3);
}

TEST(Suite, ZeroToleranceFailsStatistically) {
  SuiteOptions o;
  o.scale = 0.01;
  o.tolerances["wilson_uniform"] = 0.0;
  const auto a = check_wilson(o);
  EXPECT_FALSE(a.pass);
  EXPECT_EQ(a.kind, "statistical");
}

TEST(Suite, DetailedBalanceDomains) {
  const auto d = detailed_balance_domains(3, 5, 2, 1);
  EXPECT_EQ(d.size(), 1u + 3u + 11u + 4u);
}

TEST(Suite, DetailedBalanceWithBoundaries) {
  CounterRng rng(17);
  for (int t = 0; t < 3; ++t) {
    auto base = GibbsSpec::ball(2, 1.0, 1.0);
    SpinConfig spins(base.host().face_count());
    for (auto& s : spins) s = rng.bernoulli(0.5) ? 1 : -1;
    for (const auto& [n, x] : coupling_grid()) {
      const GibbsSpec spec(base.domain, n, x, dw(base.host_ptr(), spins));
      EXPECT_LT(detailed_balance_error(spec), 1e-12);
    }
  }
}
