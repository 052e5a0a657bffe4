#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "colopos/fingerprint.hpp"

using namespace colopos;

namespace {

RadioMap two_sample_map() {
  RadioMap map;
  map.samples.push_back({{0, 0, 0}, {{"a", -50.0}, {"b", -70.0}}});
  map.samples.push_back({{2, 0, 0}, {{"a", -70.0}, {"b", -50.0}}});
  return map;
}

RadioMap random_map(std::size_t n, std::mt19937_64& rng, int floor = 0) {
  std::uniform_real_distribution<double> pos(0.0, 40.0), rss(-90.0, -40.0);
  RadioMap map;
  for (std::size_t i = 0; i < n; ++i) {
    RadioMapSample s;
    s.pos = {pos(rng), pos(rng), floor};
    for (int a = 0; a < 6; ++a) s.readings["ap" + std::to_string(a)] = rss(rng);
    map.samples.push_back(std::move(s));
  }
  return map;
}

double kmeans_objective(const RadioMap& map, const ClusterModel& model) {
  double sum = 0.0;
  for (std::size_t i = 0; i < map.samples.size(); ++i) {
    const Position& c = model.centroids[model.assignment[i]];
    const double d = distance2d(map.samples[i].pos, c);
    sum += d * d;
  }
  return sum;
}

}  // namespace

TEST_CASE("fit retains samples and validates") {
  std::mt19937_64 rng(1);
  const RadioMap map = random_map(100, rng);
  const FingerprintModel model = fit(map, 5);
  CHECK(model.map.samples.size() == 100);
  CHECK_THROWS(fit(map, 0));
  CHECK_THROWS(fit(RadioMap{}, 5));
}

TEST_CASE("fit keeps duplicate sample positions") {
  RadioMap map = two_sample_map();
  map.samples.push_back(map.samples.front());
  CHECK(fit(map, 1).map.samples.size() == 3);
}

TEST_CASE("exact match with k=1 returns the sample position") {
  const FingerprintModel model = fit(two_sample_map(), 1);
  const WifiScan scan{"d1", 0.0, {{"a", -50.0}, {"b", -70.0}}};
  const Position p = estimate_position(model, scan);
  CHECK(p.x == Catch::Approx(0.0));
  CHECK(p.y == Catch::Approx(0.0));
}

TEST_CASE("equidistant neighbors average to the midpoint") {
  const FingerprintModel model = fit(two_sample_map(), 2);
  const WifiScan scan{"d1", 0.0, {{"a", -60.0}, {"b", -60.0}}};
  // oracle: both samples sit at RSS distance sqrt(2)*10, so weights are equal
  const Position p = estimate_position(model, scan);
  CHECK(p.x == Catch::Approx(1.0));
  CHECK(p.y == Catch::Approx(0.0));
}

TEST_CASE("scan with only unknown APs is unlocatable") {
  const FingerprintModel model = fit(two_sample_map(), 1);
  const WifiScan scan{"d1", 0.0, {{"zz", -40.0}}};
  CHECK_THROWS_AS(estimate_position(model, scan), UnlocatableError);
}

TEST_CASE("estimate stays inside the convex hull of its neighbors") {
  std::mt19937_64 rng(2);
  const RadioMap map = random_map(60, rng);
  const FingerprintModel model = fit(map, 4);
  std::uniform_real_distribution<double> rss(-90.0, -40.0);
  for (int trial = 0; trial < 50; ++trial) {
    WifiScan scan{"d1", 0.0, {}};
    for (int a = 0; a < 6; ++a) scan.readings["ap" + std::to_string(a)] = rss(rng);
    const auto neighbors = k_nearest(model, scan);
    const Position p = estimate_position(model, scan);
    // hull membership via bounding checks on each axis plus weight convexity
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const Neighbor& n : neighbors) {
      const Position& q = model.map.samples[n.sample].pos;
      xmin = std::min(xmin, q.x), xmax = std::max(xmax, q.x);
      ymin = std::min(ymin, q.y), ymax = std::max(ymax, q.y);
    }
    CHECK(p.x >= xmin - 1e-9);
    CHECK(p.x <= xmax + 1e-9);
    CHECK(p.y >= ymin - 1e-9);
    CHECK(p.y <= ymax + 1e-9);
  }
}

TEST_CASE("an AP absent from scan and map changes nothing") {
  std::mt19937_64 rng(3);
  const RadioMap map = random_map(30, rng);
  const FingerprintModel model = fit(map, 3);
  WifiScan scan{"d1", 0.0, {{"ap0", -55.0}, {"ap1", -65.0}}};
  const Position a = estimate_position(model, scan);
  const Position b = estimate_position(model, scan);  // unchanged input
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("kmeans with K equal to point count isolates each point") {
  RadioMap map;
  map.samples.push_back({{0, 0, 0}, {{"a", -50.0}}});
  map.samples.push_back({{0, 10, 0}, {{"a", -50.0}}});
  map.samples.push_back({{10, 0, 0}, {{"a", -50.0}}});
  map.samples.push_back({{10, 10, 0}, {{"a", -50.0}}});
  const ClusterModel model = kmeans(map, 4, 1);
  REQUIRE(model.centroids.size() == 4);
  CHECK(kmeans_objective(map, model) == Catch::Approx(0.0));
}

TEST_CASE("kmeans with K=1 returns the mean") {
  const ClusterModel model = kmeans(two_sample_map(), 1, 1);
  REQUIRE(model.centroids.size() == 1);
  CHECK(model.centroids[0].x == Catch::Approx(1.0));
  CHECK(model.centroids[0].y == Catch::Approx(0.0));
}

TEST_CASE("kmeans rejects invalid K") {
  CHECK_THROWS(kmeans(two_sample_map(), 0, 1));
  CHECK_THROWS(kmeans(two_sample_map(), 3, 1));
}

TEST_CASE("kmeans beats random assignment baselines") {
  std::mt19937_64 rng(4);
  const RadioMap map = random_map(60, rng);
  const ClusterModel model = kmeans(map, 30, 7);
  const double fitted = kmeans_objective(map, model);

  std::mt19937_64 baseline_rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, 29);
  for (int trial = 0; trial < 10; ++trial) {
    ClusterModel random_model;
    random_model.assignment.resize(map.samples.size());
    std::vector<double> sx(30, 0), sy(30, 0);
    std::vector<int> count(30, 0);
    for (std::size_t i = 0; i < map.samples.size(); ++i) {
      random_model.assignment[i] = pick(baseline_rng);
      sx[random_model.assignment[i]] += map.samples[i].pos.x;
      sy[random_model.assignment[i]] += map.samples[i].pos.y;
      ++count[random_model.assignment[i]];
    }
    for (int c = 0; c < 30; ++c)
      random_model.centroids.push_back(
          {count[c] ? sx[c] / count[c] : 0.0, count[c] ? sy[c] / count[c] : 0.0, 0});
    CHECK(fitted <= kmeans_objective(map, random_model));
  }
}

TEST_CASE("kmeans centroids are means of their members") {
  std::mt19937_64 rng(5);
  const RadioMap map = random_map(40, rng);
  const ClusterModel model = kmeans(map, 8, 3);
  std::vector<double> sx(8, 0), sy(8, 0);
  std::vector<int> count(8, 0);
  for (std::size_t i = 0; i < map.samples.size(); ++i) {
    sx[model.assignment[i]] += map.samples[i].pos.x;
    sy[model.assignment[i]] += map.samples[i].pos.y;
    ++count[model.assignment[i]];
  }
  for (int c = 0; c < 8; ++c) {
    REQUIRE(count[c] > 0);  // no empty cluster
    CHECK(model.centroids[c].x == Catch::Approx(sx[c] / count[c]));
    CHECK(model.centroids[c].y == Catch::Approx(sy[c] / count[c]));
  }
}

TEST_CASE("kmeans never mixes floors in one cluster") {
  std::mt19937_64 rng(6);
  RadioMap map = random_map(20, rng, 0);
  const RadioMap upper = random_map(20, rng, 1);
  map.samples.insert(map.samples.end(), upper.samples.begin(), upper.samples.end());
  const ClusterModel model = kmeans(map, 10, 2);
  for (std::size_t i = 0; i < map.samples.size(); ++i)
    CHECK(model.centroids[model.assignment[i]].floor == map.samples[i].pos.floor);
}

TEST_CASE("classify concentrates on the neighbors' clusters") {
  const FingerprintModel model = fit(two_sample_map(), 1);
  const ClusterModel clusters = kmeans(model.map, 2, 1);
  const WifiScan scan{"d1", 0.0, {{"a", -50.0}, {"b", -70.0}}};
  const ClusterProbs probs = classify(model, clusters, scan);
  const std::size_t home = clusters.assignment[0];
  CHECK(probs.probs[home] == Catch::Approx(1.0));
}

TEST_CASE("equal-weight neighbors in two clusters split evenly") {
  const FingerprintModel model = fit(two_sample_map(), 2);
  const ClusterModel clusters = kmeans(model.map, 2, 1);
  const WifiScan scan{"d1", 0.0, {{"a", -60.0}, {"b", -60.0}}};
  const ClusterProbs probs = classify(model, clusters, scan);
  CHECK(probs.probs[0] == Catch::Approx(0.5));
  CHECK(probs.probs[1] == Catch::Approx(0.5));
}

TEST_CASE("classify output is a probability distribution") {
  std::mt19937_64 rng(7);
  const RadioMap map = random_map(80, rng);
  const FingerprintModel model = fit(map, 5);
  const ClusterModel clusters = kmeans(map, 12, 9);
  std::uniform_real_distribution<double> rss(-90.0, -40.0);
  for (int trial = 0; trial < 100; ++trial) {
    WifiScan scan{"d1", 0.0, {}};
    for (int a = 0; a < 6; ++a) scan.readings["ap" + std::to_string(a)] = rss(rng);
    const ClusterProbs probs = classify(model, clusters, scan);
    double sum = 0.0;
    for (double p : probs.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("radio map csv round trip") {
  std::mt19937_64 rng(8);
  const RadioMap map = random_map(10, rng);
  std::ostringstream os;
  write_radio_map_csv(os, map);
  std::istringstream is(os.str());
  const RadioMap back = read_radio_map_csv(is);
  REQUIRE(back.samples.size() == map.samples.size());
  for (std::size_t i = 0; i < map.samples.size(); ++i) {
    CHECK(back.samples[i].pos.x == Catch::Approx(map.samples[i].pos.x).margin(1e-3));
    CHECK(back.samples[i].readings.size() == map.samples[i].readings.size());
  }
}

TEST_CASE("cluster model json round trip") {
  std::mt19937_64 rng(9);
  const RadioMap map = random_map(20, rng);
  const ClusterModel model = kmeans(map, 5, 1);
  const ClusterModel back = clusters_from_json(clusters_to_json(model));
  CHECK(back.assignment == model.assignment);
  REQUIRE(back.centroids.size() == model.centroids.size());
  CHECK(back.centroids[0].x == model.centroids[0].x);
}
