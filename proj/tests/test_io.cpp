#include <gtest/gtest.h>

#include "oracles.hpp"
#include "selftest/io.hpp"

using namespace selftest;

#ifndef SELFTEST_FIXTURE_DIR
#error "SELFTEST_FIXTURE_DIR must point at fixtures/"
#endif

namespace {

std::string fixture(const std::string& name) { return std::string(SELFTEST_FIXTURE_DIR) + "/" + name; }

void expect_identical(const Strategy& a, const Strategy& b) {
  ASSERT_EQ(a.dim_a, b.dim_a);
  ASSERT_EQ(a.dim_b, b.dim_b);
  ASSERT_EQ(a.is_pure(), b.is_pure());
  if (a.is_pure()) {
    EXPECT_EQ(a.pure_state(), b.pure_state());
  } else {
    EXPECT_EQ(std::get<Operator>(a.state), std::get<Operator>(b.state));
  }
  for (const auto& [x, y] : {std::pair{&a.alice, &b.alice}, std::pair{&a.bob, &b.bob}}) {
    ASSERT_EQ(x->size(), y->size());
    for (std::size_t q = 0; q < x->size(); ++q) {
      ASSERT_EQ((*x)[q].size(), (*y)[q].size());
      for (std::size_t j = 0; j < (*x)[q].size(); ++j) EXPECT_EQ((*x)[q][j], (*y)[q][j]);
    }
  }
}

void expect_parse_error_at(const std::string& text, const std::string& where) {
  try {
    io::parse_text(text, "in.json");
    FAIL() << "no error for " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("in.json:" + where), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Io, StrategyRoundTripIsExact) {
  std::mt19937_64 gen(81);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = static_cast<std::size_t>(trial);
    const Strategy s = random::strategy({2 + trial % 3, 2 + trial % 2, 1 + k % 3, 2, 2 + k % 3}, gen);
    const std::string text = io::encode(s).dump();
    expect_identical(s, io::decode_strategy(io::parse_text(text, "mem")));
  }
}

TEST(Io, MixedStateRoundTrip) {
  std::mt19937_64 gen(82);
  Strategy s = random::strategy({2, 3, 2, 2, 2}, gen);
  s.state = random::density(6, 3, gen);
  expect_identical(s, io::decode_strategy(io::parse_text(io::encode(s).dump(2), "mem")));
}

TEST(Io, FixturesMatchTheConstructions) {
  expect_identical(io::parse_strategy_file(fixture("chsh.json")), lab::canonical_chsh());
  expect_identical(io::parse_strategy_file(fixture("trine.json")), lab::trine_strategy());
  expect_identical(io::parse_strategy_file(fixture("trine_minimal_naimark.json")), lab::moment_strategy(1));
  const NonlocalGame g = io::decode_game(io::read_json(fixture("chsh_game.json")));
  EXPECT_EQ(g.predicate, lab::chsh_game().predicate);
  EXPECT_EQ(g.pi, lab::chsh_game().pi);
}

TEST(Io, MinimalNaimarkFixtureIsProjectiveAndMatchesTrine) {
  const Strategy s = io::parse_strategy_file(fixture("trine_minimal_naimark.json"));
  EXPECT_EQ(s.dim_b, 3);
  EXPECT_TRUE(validate_strategy(s).valid);
  EXPECT_LT(oracle::correlation_distance(s, lab::trine_strategy()), 1e-12);
}

TEST(Io, MalformedJsonReportsLineAndColumn) {
  expect_parse_error_at("{\n  \"dims\": {\"A\": 2,\n", "3:1");
  expect_parse_error_at("{\"a\": [1, 2,, 3]}", "1:13");
  expect_parse_error_at("", "1:1");
}

TEST(Io, TruncatedFixtureFails) {
  std::ifstream in(fixture("chsh.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  EXPECT_THROW(io::parse_text(text.substr(0, text.size() / 2), "cut"), Error);
}

TEST(Io, StructuralErrorsNameTheLocation) {
  io::Json j = io::encode(lab::canonical_chsh());
  j["state"]["data"][3] = "oops";
  try {
    io::decode_strategy(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("state.data[3]"), std::string::npos) << e.what();
  }
  io::Json k = io::encode(lab::canonical_chsh());
  k.erase("bob");
  EXPECT_THROW(io::decode_strategy(k), Error);
  io::Json m = io::encode(lab::canonical_chsh());
  m["state"]["kind"] = "thermal";
  EXPECT_THROW(io::decode_strategy(m), Error);
}

TEST(Io, ComplexEntriesAcceptPairsAndReals) {
  EXPECT_EQ(io::decode_complex(io::Json::array({1.5, -2.0}), "z"), cplx(1.5, -2.0));
  EXPECT_EQ(io::decode_complex(io::Json(0.25), "z"), cplx(0.25, 0.0));
  EXPECT_THROW(io::decode_complex(io::Json::array({1.0, 2.0, 3.0}), "z"), Error);
}

TEST(Io, GameRoundTripAndValidation) {
  const NonlocalGame g = lab::chsh_game();
  const NonlocalGame back = io::decode_game(io::encode(g));
  EXPECT_EQ(back.predicate, g.predicate);
  io::Json bad = io::encode(g);
  bad["pi"][0][0] = 0.9;  // no longer sums to one
  EXPECT_THROW(io::decode_game(bad), Error);
  io::Json ragged = io::encode(g);
  ragged["predicate"][1].erase(0);
  EXPECT_THROW(io::decode_game(ragged), Error);
}

TEST(Io, WitnessRoundTrip) {
  std::mt19937_64 gen(83);
  DilationWitness w = make_witness(random::isometry(3, 2, gen), random::isometry(4, 2, gen));
  w.aux = random::state(2, gen);
  const io::WitnessFile f = io::decode_witness(io::encode(w));
  EXPECT_EQ(f.u_a, w.u_a);
  EXPECT_EQ(f.u_b, w.u_b);
  ASSERT_TRUE(f.aux.has_value());
  EXPECT_EQ(*f.aux, w.aux);
  ASSERT_TRUE(f.aux_dims.has_value());
  EXPECT_EQ(f.aux_dims->first, 1);
  EXPECT_EQ(f.form, "vector");

  io::Json j = io::encode(w);
  j["form"] = "banana";
  EXPECT_THROW(io::decode_witness(j), Error);
  j.erase("U_A");
  EXPECT_THROW(io::decode_witness(j), Error);
}

TEST(Io, CsvUsesShortestRoundTrip) {
  const auto rows = lab::robustness_sweep({0.0, 0.1}, 1, 2);
  const std::string csv = io::robustness_csv(rows);
  EXPECT_EQ(csv.rfind("magnitude,delta,epsilon,bound\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, TrineMetricsSerializeExactly) {
  const std::string text = io::encode(strategy_metrics(lab::trine_strategy())).dump();
  EXPECT_NE(text.find("0.3333333333333333"), std::string::npos) << text;
}
