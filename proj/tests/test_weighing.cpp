#include <catch_amalgamated.hpp>

#include "gsbm/weighing.hpp"

using namespace gsbm;

TEST_CASE("random weighing is uniform on [0, 1] and reproducible") {
  LabelAlphabet a({"a", "b", "c", "d"});
  const auto w1 = draw_weighing(a, 17);
  const auto w2 = draw_weighing(a, 17);
  REQUIRE(w1 == w2);
  REQUIRE(w1.size() == 4);
  for (double x : w1.weights()) {
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK_FALSE(w1 == draw_weighing(a, 18));

  double mean = 0.0;
  for (std::uint64_t s = 0; s < 2000; ++s) mean += draw_weighing(LabelAlphabet(), s)[0];
  CHECK(mean / 2000.0 == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("weights outside [0, 1] need raw mode") {
  REQUIRE_THROWS(WeighingFunction({1.5}));
  REQUIRE_NOTHROW(WeighingFunction({1.5}, true));
  REQUIRE(WeighingFunction({0.5}).scaled(4.0).raw());
  REQUIRE_FALSE(WeighingFunction({0.5}).scaled(0.5).raw());
}

TEST_CASE("override maps resolve label names") {
  LabelAlphabet pm({"+1", "-1"});
  const auto raw = weighing_from_map(pm, {{"+1", 1.0}, {"-1", -1.0}}, WeightMode::raw);
  CHECK(raw[0] == 1.0);
  CHECK(raw[1] == -1.0);
  CHECK(raw.raw());

  const auto resc = weighing_from_map(pm, {{"+1", 1.0}, {"-1", -1.0}}, WeightMode::rescaled);
  CHECK(resc[0] == 1.0);
  CHECK(resc[1] == 0.0);
  CHECK_FALSE(resc.raw());

  const auto inside = weighing_from_map(pm, {{"+1", 0.2}, {"-1", 0.7}}, WeightMode::rescaled);
  CHECK(inside[1] == 0.7);

  REQUIRE_THROWS(weighing_from_map(pm, {{"+1", 1.0}}, WeightMode::raw));
  REQUIRE_THROWS(weighing_from_map(pm, {{"+1", 1.0}, {"0", 1.0}}, WeightMode::raw));
}

TEST_CASE("unit weighing has one per label") {
  const auto w = WeighingFunction::unit(LabelAlphabet({"x", "y"}));
  CHECK(w.weights() == std::vector<double>{1.0, 1.0});
}
