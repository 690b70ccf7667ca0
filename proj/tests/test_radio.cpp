#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rcamp/radio.hpp"
#include "rcamp/rng.hpp"

using namespace rcamp;
using namespace rcamp::radio;

namespace {

AccessPoint make_ap(const std::string& id, Vec2 pos, double rss_d0 = -40.0, double eta = 3.0) {
  AccessPoint ap;
  ap.id = id;
  ap.position = pos;
  ap.params.rss_d0 = rss_d0;
  ap.params.eta = eta;
  return ap;
}

AccessPoint quiet(AccessPoint ap) {
  ap.params.sigma_shadow = 0.0;
  ap.params.multipath = false;
  return ap;
}

}  // namespace

TEST_CASE("path loss at reference points") {
  const auto ap = make_ap("a", {0, 0});
  CHECK(*deterministic_rss(ap, {10, 0}) == doctest::Approx(-70.0).epsilon(1e-12));
  CHECK(*deterministic_rss(ap, {1, 0}) == doctest::Approx(-40.0));
  CHECK(*deterministic_rss(ap, {0, 100}) == doctest::Approx(-100.0));
  // inside d0 the distance is clamped
  CHECK(*deterministic_rss(ap, {0.1, 0}) == doctest::Approx(-40.0));
  CHECK(*deterministic_rss(ap, {0, 0}) == doctest::Approx(-40.0));
}

TEST_CASE("inactive AP gives no signal") {
  auto ap = make_ap("a", {0, 0});
  ap.active = false;
  CHECK_FALSE(deterministic_rss(ap, {3, 4}).has_value());
  CHECK_FALSE(sample_rss(ap, {3, 4}, 7).has_value());
}

TEST_CASE("path loss is non-increasing with distance") {
  const auto ap = make_ap("a", {2, -1}, -35.0, 2.7);
  double prev = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double d = 1.0 + 0.37 * i;
    const double v = *deterministic_rss(ap, ap.position + Vec2(d, 0));
    if (i > 0) CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("noise-free sample equals the deterministic term") {
  const auto ap = quiet(make_ap("a", {0, 0}));
  for (int i = 0; i < 50; ++i) {
    const Vec2 p(0.7 * i, 3.0 - 0.2 * i);
    CHECK(*sample_rss(ap, p, 11, i) == *deterministic_rss(ap, p));
  }
}

TEST_CASE("very large Nakagami shape makes multipath vanish") {
  auto ap = make_ap("a", {0, 0});
  ap.params.sigma_shadow = 0.0;
  ap.params.nakagami_m = 1e12;
  for (std::uint64_t k = 0; k < 100; ++k) {
    CHECK(*sample_rss(ap, {4, 3}, 5, k) == doctest::Approx(*deterministic_rss(ap, {4, 3})).epsilon(1e-5));
  }
}

TEST_CASE("shadow field is a deterministic function of seed and position") {
  const auto ap = make_ap("a", {0, 0});
  for (int i = 0; i < 20; ++i) {
    const Vec2 p(1.3 * i, -0.4 * i);
    CHECK(shadowing_db(ap, p, 99) == shadowing_db(ap, p, 99));
  }
  CHECK(shadowing_db(ap, {1, 2}, 1) != shadowing_db(ap, {1, 2}, 2));
  // repeated full samples are bit-identical for the same call index
  CHECK(*sample_rss(ap, {5, 5}, 3, 17) == *sample_rss(ap, {5, 5}, 3, 17));
}

TEST_CASE("shadowing standard deviation matches sigma over many seeds") {
  auto ap = make_ap("a", {0, 0});
  ap.params.sigma_shadow = 2.0;
  for (const Vec2& p : {Vec2(3.3, 7.1), Vec2(10.0, 10.0), Vec2(-2.5, 12.25)}) {
    double sum = 0.0;
    double sum2 = 0.0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
      const double v = shadowing_db(ap, p, static_cast<std::uint64_t>(s));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(sd == doctest::Approx(2.0).epsilon(0.10));
    CHECK(std::abs(mean) < 0.1);
  }
}

TEST_CASE("shadow field is spatially correlated") {
  const ShadowField f(42, 5.0, 2.0);
  // neighbours 10 cm apart differ far less than sigma
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec2 p(0.31 * i, 0.17 * i);
    worst = std::max(worst, std::abs(f(p) - f(p + Vec2(0.1, 0.0))));
  }
  CHECK(worst < 0.5);
}

TEST_CASE("multipath power has unit mean") {
  auto ap = make_ap("a", {0, 0});
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) sum += std::pow(10.0, -multipath_db(ap, 8, static_cast<std::uint64_t>(k)) / 10.0);
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("ewma filter") {
  EwmaState s{1.0, -60.0};
  CHECK(ewma_update(s, -50.0) == -50.0);
  s = {0.0, -60.0};
  CHECK(ewma_update(s, -50.0) == -60.0);
  s = {0.5, -60.0};
  CHECK(ewma_update(s, -50.0) == -55.0);
  EwmaState empty{0.3, std::nullopt};
  CHECK(ewma_update(empty, -72.0) == -72.0);
}

TEST_CASE("ewma output stays between previous value and input") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double prev = rng.uniform(-110, -20);
    const double raw = rng.uniform(-110, -20);
    EwmaState s{rng.uniform(), prev};
    const double v = ewma_update(s, raw);
    CHECK(v >= std::min(prev, raw) - 1e-12);
    CHECK(v <= std::max(prev, raw) + 1e-12);
  }
}

TEST_CASE("association") {
  SUBCASE("single AP above threshold") {
    const std::vector<ApReading> r{{"a", true, -65.0}};
    const auto as = associate(r, std::nullopt, -90.0);
    REQUIRE(as.ap_id);
    CHECK(*as.ap_id == "a");
    CHECK(*as.rss == -65.0);
  }
  SUBCASE("current AP switched off, second AP in range") {
    const std::vector<ApReading> r{{"a", false, std::nullopt}, {"b", true, -80.0}};
    const auto as = associate(r, std::string("a"), -90.0);
    REQUIRE(as.ap_id);
    CHECK(*as.ap_id == "b");
  }
  SUBCASE("everything below threshold") {
    const std::vector<ApReading> r{{"a", true, -95.0}, {"b", true, -91.0}};
    CHECK_FALSE(associate(r, std::nullopt, -90.0).ap_id);
  }
  SUBCASE("sticky while above threshold") {
    const std::vector<ApReading> r{{"a", true, -85.0}, {"b", true, -50.0}};
    CHECK(*associate(r, std::string("a"), -90.0).ap_id == "a");
    CHECK(*associate(r, std::nullopt, -90.0).ap_id == "b");
  }
  SUBCASE("empty list") { CHECK_FALSE(associate(std::span<const ApReading>{}, std::nullopt, -90.0).ap_id); }
  SUBCASE("threshold boundary is connected") {
    const std::vector<ApReading> r{{"a", true, -90.0}};
    CHECK(associate(r, std::nullopt, -90.0).ap_id);
  }
}

TEST_CASE("association over sampled APs never returns an inactive AP") {
  std::vector<AccessPoint> aps{make_ap("a", {0, 0}), make_ap("b", {30, 0}), make_ap("c", {15, 20})};
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    for (auto& ap : aps) ap.active = rng.uniform() < 0.6;
    const Vec2 p(rng.uniform(-5, 35), rng.uniform(-5, 25));
    const auto as = associate(aps, p, std::nullopt, -90.0, 4, static_cast<std::uint64_t>(i));
    if (as.ap_id) {
      const auto it = std::find_if(aps.begin(), aps.end(), [&](const AccessPoint& a) { return a.id == *as.ap_id; });
      CHECK(it->active);
      CHECK(*as.rss >= -90.0);
    }
  }
}

TEST_CASE("parameter validation") {
  PropagationParams p;
  CHECK_NOTHROW(p.validate());
  p.nakagami_m = 0.4;
  CHECK_THROWS(p.validate());
  p = {};
  p.d0 = 0.0;
  CHECK_THROWS(p.validate());
  p = {};
  p.shadow_corr_len = -1.0;
  CHECK_THROWS(p.validate());
}
