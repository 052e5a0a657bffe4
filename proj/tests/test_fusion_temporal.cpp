#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "colopos/fusion_temporal.hpp"
#include "colopos/simulator.hpp"

using namespace colopos;

namespace {

FloorMap open_room(double size = 20.0) {
  FloorMap map;
  map.bounds[0] = {0.0, 0.0, size, size};
  return map;
}

ParticleSet uniform_set(const FloorMap& map, int n, std::uint64_t seed) {
  FusionConfig cfg;
  cfg.particle_count = n;
  std::mt19937_64 rng(seed);
  return init_particles(map, cfg, rng);
}

}  // namespace

TEST_CASE("init_particles fills the bounds with uniform weights") {
  const FloorMap map = open_room();
  FusionConfig cfg;
  std::mt19937_64 rng(1);
  const ParticleSet set = init_particles(map, cfg, rng);
  REQUIRE(set.particles.size() == 1000);
  for (const Particle& p : set.particles) {
    CHECK(p.weight == Catch::Approx(1e-3));
    CHECK(map.bounds.at(0).contains(p.pos.x, p.pos.y));
  }
}

TEST_CASE("init_particles is deterministic per seed") {
  const FloorMap map = open_room();
  FusionConfig cfg;
  std::mt19937_64 a(7), b(7);
  const ParticleSet sa = init_particles(map, cfg, a);
  const ParticleSet sb = init_particles(map, cfg, b);
  for (std::size_t i = 0; i < sa.particles.size(); ++i)
    CHECK(sa.particles[i].pos == sb.particles[i].pos);
}

TEST_CASE("mean displacement follows the speed model") {
  const FloorMap map = open_room(1000.0);
  FusionConfig cfg;
  cfg.particle_count = 10000;
  cfg.speed_mean = 1.0;
  cfg.speed_std = 0.1;
  std::mt19937_64 rng(2);
  ParticleSet set = init_particles(map, cfg, rng);
  // keep everything away from the boundary
  for (Particle& p : set.particles) p.pos = {500.0, 500.0, 0};
  const ParticleSet before = set;
  propagate(set, 0.5, map, cfg, rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < set.particles.size(); ++i)
    sum += distance2d(set.particles[i].pos, before.particles[i].pos);
  const double mean = sum / set.particles.size();
  CHECK(std::abs(mean - 0.5) < 3.0 * 0.1 * 0.5 / std::sqrt(10000.0) + 1e-3);
}

TEST_CASE("particles stay inside a closed cell") {
  FloorMap map;
  map.bounds[0] = {0.0, 0.0, 10.0, 10.0};
  map.walls.push_back({{4, 4, 0}, {5, 4, 0}});
  map.walls.push_back({{5, 4, 0}, {5, 5, 0}});
  map.walls.push_back({{5, 5, 0}, {4, 5, 0}});
  map.walls.push_back({{4, 5, 0}, {4, 4, 0}});
  FusionConfig cfg;
  cfg.particle_count = 20;
  std::mt19937_64 rng(3);
  ParticleSet set = uniform_set(map, 20, 3);
  for (Particle& p : set.particles) p.pos = {4.5, 4.5, 0};
  for (int step = 0; step < 100; ++step) propagate(set, 0.5, map, cfg, rng);
  for (const Particle& p : set.particles) {
    CHECK(p.pos.x > 4.0);
    CHECK(p.pos.x < 5.0);
    CHECK(p.pos.y > 4.0);
    CHECK(p.pos.y < 5.0);
  }
}

TEST_CASE("zero speed spread gives exact displacements") {
  const FloorMap map = open_room(1000.0);
  FusionConfig cfg;
  cfg.particle_count = 200;
  cfg.speed_std = 0.0;
  std::mt19937_64 rng(4);
  ParticleSet set = init_particles(map, cfg, rng);
  for (Particle& p : set.particles) p.pos = {500.0, 500.0, 0};
  const ParticleSet before = set;
  propagate(set, 0.5, map, cfg, rng);
  for (std::size_t i = 0; i < set.particles.size(); ++i)
    CHECK(distance2d(set.particles[i].pos, before.particles[i].pos) ==
          Catch::Approx(0.5 * cfg.speed_mean).epsilon(1e-12));
}

TEST_CASE("propagation never crosses a wall") {
  const FloorMap map = demo_map();
  FusionConfig cfg;
  cfg.particle_count = 200;
  std::mt19937_64 rng(5);
  ParticleSet set = init_particles(map, cfg, rng);
  for (int step = 0; step < 200; ++step) {
    const ParticleSet before = set;
    propagate(set, 0.5, map, cfg, rng);
    for (std::size_t i = 0; i < set.particles.size(); ++i)
      if (before.particles[i].pos.floor == set.particles[i].pos.floor)
        CHECK_FALSE(crosses_wall(map, before.particles[i].pos, set.particles[i].pos));
  }
}

// --- scoring ----------------------------------------------------------------

TEST_CASE("single-cluster scaling spans the unit interval") {
  ClusterModel clusters;
  clusters.centroids = {{0, 0, 0}};
  ClusterProbs probs{{1.0}};
  ParticleSet set;
  set.particles = {{{1, 0, 0}, 0.5}, {{5, 0, 0}, 0.25}, {{9, 0, 0}, 0.25}};
  const auto scores = score_wifi(set, probs, clusters);
  CHECK(scores[0] == Catch::Approx(1.0));
  CHECK(scores[1] == Catch::Approx(0.5));
  CHECK(scores[2] == Catch::Approx(0.0));
}

TEST_CASE("equidistant particles all score the cluster probability") {
  ClusterModel clusters;
  clusters.centroids = {{0, 0, 0}};
  ClusterProbs probs{{0.7}};
  ParticleSet set;
  set.particles = {{{3, 0, 0}, 0.5}, {{0, 3, 0}, 0.5}};
  const auto scores = score_wifi(set, probs, clusters);
  CHECK(scores[0] == Catch::Approx(0.7));
  CHECK(scores[1] == Catch::Approx(0.7));
}

TEST_CASE("a symmetric ring under uniform probabilities scores evenly") {
  ClusterModel clusters;
  clusters.centroids = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  ClusterProbs probs{{0.25, 0.25, 0.25, 0.25}};
  ParticleSet set;
  for (int i = 0; i < 8; ++i) {
    const double a = i * M_PI / 4.0;
    set.particles.push_back({{3.0 * std::cos(a), 3.0 * std::sin(a), 0}, 0.125});
  }
  const auto scores = score_wifi(set, probs, clusters);
  // direct-evaluation oracle: every 90-degree rotation maps the configuration
  // onto itself, so the four axis particles agree and the four diagonals agree
  CHECK(scores[0] == Catch::Approx(scores[2]));
  CHECK(scores[2] == Catch::Approx(scores[4]));
  CHECK(scores[1] == Catch::Approx(scores[3]));
  CHECK(scores[3] == Catch::Approx(scores[5]));
}

TEST_CASE("scores remain within [0, 1]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 20.0), pr(0.0, 1.0);
  ClusterModel clusters;
  ClusterProbs probs;
  double total = 0.0;
  for (int c = 0; c < 5; ++c) {
    clusters.centroids.push_back({u(rng), u(rng), 0});
    probs.probs.push_back(pr(rng));
    total += probs.probs.back();
  }
  for (double& p : probs.probs) p /= total;
  ParticleSet set;
  for (int i = 0; i < 100; ++i) set.particles.push_back({{u(rng), u(rng), 0}, 0.01});
  for (double s : score_wifi(set, probs, clusters)) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0 + 1e-12);
  }
}

TEST_CASE("bluetooth kernel peaks on the range circle") {
  FusionConfig cfg;
  cfg.delta_b = 1.0;
  cfg.normalize_bt_score = true;
  const LdplParams ldpl{1.0, -59.0, 2.0, 0.0};
  const double rss = distance_to_rss(ldpl, 4.0);  // l = 4 m

  ParticleSet set_j;
  set_j.particles = {{{0, 0, 0}, 1.0}};
  ParticleSet set_i;
  set_i.particles = {{{4, 0, 0}, 0.5}, {{1, 0, 0}, 0.5}, {{8, 0, 0}, 0.0}};
  const auto scores = score_bluetooth(set_i, set_j, {1.0}, rss, ldpl, cfg);
  CHECK(scores[0] == Catch::Approx(1.0));
  CHECK(scores[1] < scores[0]);
  CHECK(scores[2] < scores[0]);
}

TEST_CASE("an infinitely wide kernel scores everything equally") {
  FusionConfig cfg;
  cfg.delta_b = 1e9;
  const LdplParams ldpl{1.0, -59.0, 2.0, 0.0};
  ParticleSet set_j = uniform_set(open_room(), 20, 8);
  ParticleSet set_i = uniform_set(open_room(), 20, 9);
  const auto scores =
      score_bluetooth(set_i, set_j, std::vector<double>(20, 1.0), -70.0, ldpl, cfg);
  for (double s : scores) CHECK(s == Catch::Approx(scores[0]).epsilon(1e-9));
}

TEST_CASE("score_bluetooth equals the brute-force double loop") {
  FusionConfig cfg;
  cfg.normalize_bt_score = false;
  const LdplParams ldpl{1.0, -59.0, 2.0, 0.0};
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 20.0), w(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ParticleSet set_i = uniform_set(open_room(), 50, 100 + trial);
    ParticleSet set_j = uniform_set(open_room(), 50, 200 + trial);
    std::vector<double> wj(50);
    for (double& x : wj) x = w(rng);
    const double rss = -50.0 - 30.0 * w(rng);

    const auto got = score_bluetooth(set_i, set_j, wj, rss, ldpl, cfg);
    const double l = rss_to_distance(ldpl, rss);
    for (std::size_t i = 0; i < 50; ++i) {
      double expected = 0.0;
      for (std::size_t k = 0; k < 50; ++k) {
        const double dx = set_i.particles[i].pos.x - set_j.particles[k].pos.x;
        const double dy = set_i.particles[i].pos.y - set_j.particles[k].pos.y;
        const double d = std::sqrt(dx * dx + dy * dy);
        expected += wj[k] * std::exp(-(d - l) * (d - l) /
                                     (2.0 * cfg.delta_b * cfg.delta_b));
      }
      CHECK(got[i] == expected);
    }
  }
}

// --- resampling and estimation ----------------------------------------------

TEST_CASE("systematic resampling yields floor/ceil expected copies") {
  ParticleSet set;
  const int n = 10;
  for (int i = 0; i < n; ++i) set.particles.push_back({{double(i), 0, 0}, 0.1});
  const std::vector<double> scores = {0.5, 0.3, 0.2, 0, 0, 0, 0, 0, 0, 0};
  std::mt19937_64 rng(11);
  resample_by_score(set, scores, rng);
  std::map<double, int> copies;
  for (const Particle& p : set.particles) ++copies[p.pos.x];
  CHECK(copies[0.0] == 5);
  CHECK(copies[1.0] == 3);
  CHECK(copies[2.0] == 2);
  double wsum = 0.0;
  for (const Particle& p : set.particles) wsum += p.weight;
  CHECK(wsum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("resampling with all-zero scores is a no-op") {
  ParticleSet set = uniform_set(open_room(), 10, 12);
  const ParticleSet before = set;
  std::mt19937_64 rng(13);
  resample_by_score(set, std::vector<double>(10, 0.0), rng);
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(set.particles[i].pos == before.particles[i].pos);
}

TEST_CASE("estimate is the weighted mean") {
  ParticleSet set;
  set.particles = {{{3, 4, 0}, 1.0}};
  CHECK(estimate(set).x == Catch::Approx(3.0));
  CHECK(estimate(set).y == Catch::Approx(4.0));

  set.particles = {{{0, 0, 0}, 0.5}, {{2, 0, 0}, 0.5}};
  CHECK(estimate(set).x == Catch::Approx(1.0));
}

TEST_CASE("estimate lies in the convex hull of the particles") {
  std::mt19937_64 rng(14);
  ParticleSet set = uniform_set(open_room(), 50, 15);
  const Position e = estimate(set);
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const Particle& p : set.particles) {
    xmin = std::min(xmin, p.pos.x), xmax = std::max(xmax, p.pos.x);
    ymin = std::min(ymin, p.pos.y), ymax = std::max(ymax, p.pos.y);
  }
  CHECK(e.x >= xmin);
  CHECK(e.x <= xmax);
  CHECK(e.y >= ymin);
  CHECK(e.y <= ymax);
}

TEST_CASE("nearest_within honors the effective range") {
  CHECK_FALSE(nearest_within({2.5}, 5.0, 2.0).has_value());  // 2.5 s away, ignored
  CHECK(nearest_within({3.1}, 5.0, 2.0).value() == 0);
  CHECK(nearest_within({1.0, 4.9, 9.0}, 5.0, 2.0).value() == 1);
  CHECK_FALSE(nearest_within({}, 5.0, 2.0).has_value());
}

// --- full tracker -----------------------------------------------------------

namespace {

EventStream still_user_stream(double duration) {
  // one user standing at (10, 4) with clean periodic scans
  std::vector<Event> records;
  const double ra = -40.0 - 25.0 * std::log10(0.5);
  const double rb = -40.0 - 25.0 * std::log10(std::hypot(8.0, 14.0));
  for (double t = 2.0; t < duration; t += 5.0)
    records.push_back(WifiScan{"d1", t, {{"a", ra}, {"b", rb}}});
  return ingest(records, {"d1"}, duration);
}

}  // namespace

TEST_CASE("track_temporal is deterministic per seed") {
  const FloorMap map = demo_map();
  ScenarioConfig sc;
  sc.n_users = 2;
  sc.group_sizes = {2};
  sc.duration_s = 60.0;
  sc.seed = 3;
  sc.ap_layout = demo_ap_layout();
  const auto truth = generate_truth(sc, demo_path(sc.duration_s));
  std::mt19937_64 rng(3);
  const RadioMap rm = generate_radio_map(sc, default_wifi_ldpl(), map, 2.0, rng);
  const EventStream events = generate_events(sc, truth, default_wifi_ldpl(), default_bt_ldpl());
  const FingerprintModel model = fit(rm, 5);
  const ClusterModel clusters = kmeans(rm, 30, 3);
  FusionConfig cfg;
  cfg.particle_count = 200;
  cfg.bt_subsample = 4;
  const TrackSet a = track_temporal(events, model, clusters, map, cfg, default_bt_ldpl(), 7);
  const TrackSet b = track_temporal(events, model, clusters, map, cfg, default_bt_ldpl(), 7);
  REQUIRE(a.size() == b.size());
  for (const auto& [dev, track] : a) CHECK(track == b.at(dev));
}

TEST_CASE("wifi observations beat a blind random walk for a still user") {
  FloorMap map = open_room();
  RadioMap rm;
  // radio map over a 20x20 room with two APs
  for (double x = 1.0; x < 20.0; x += 2.0)
    for (double y = 1.0; y < 20.0; y += 2.0) {
      const double da = std::max(0.5, std::hypot(x - 10.0, y - 4.0));
      const double db = std::max(0.5, std::hypot(x - 2.0, y - 18.0));
      rm.samples.push_back({{x, y, 0},
                            {{"a", -40.0 - 25.0 * std::log10(da)},
                             {"b", -40.0 - 25.0 * std::log10(db)}}});
    }
  const FingerprintModel model = fit(rm, 3);
  const ClusterModel clusters = kmeans(rm, 20, 1);
  FusionConfig cfg;
  cfg.particle_count = 300;
  const EventStream stream = still_user_stream(60.0);
  const LdplParams ldpl = default_bt_ldpl();

  const TrackSet observed = track_temporal(stream, model, clusters, map, cfg, ldpl, 5);
  const EventStream empty = ingest({}, {"d1"}, 60.0);
  const TrackSet blind = track_temporal(empty, model, clusters, map, cfg, ldpl, 5);

  auto mean_err = [](const Track& track) {
    double sum = 0.0;
    for (const auto& [t, p] : track) sum += std::hypot(p.x - 10.0, p.y - 4.0);
    return sum / track.size();
  };
  CHECK(mean_err(observed.at("d1")) < mean_err(blind.at("d1")));
}

TEST_CASE("deleting bluetooth equals disabling bluetooth, same seed") {
  const FloorMap map = demo_map();
  ScenarioConfig sc;
  sc.n_users = 2;
  sc.group_sizes = {2};
  sc.duration_s = 40.0;
  sc.seed = 5;
  sc.ap_layout = demo_ap_layout();
  const auto truth = generate_truth(sc, demo_path(sc.duration_s));
  std::mt19937_64 rng(5);
  const RadioMap rm = generate_radio_map(sc, default_wifi_ldpl(), map, 2.0, rng);
  const EventStream events = generate_events(sc, truth, default_wifi_ldpl(), default_bt_ldpl());
  const FingerprintModel model = fit(rm, 5);
  const ClusterModel clusters = kmeans(rm, 20, 5);

  std::vector<Event> wifi_only_records;
  for (const Event& e : events.events)
    if (std::holds_alternative<WifiScan>(e)) wifi_only_records.push_back(e);
  const EventStream stripped = ingest(wifi_only_records, events.participants, events.duration_s);

  FusionConfig cfg;
  cfg.particle_count = 150;
  FusionConfig disabled = cfg;
  disabled.use_bluetooth = false;

  const TrackSet a = track_temporal(stripped, model, clusters, map, cfg, default_bt_ldpl(), 9);
  const TrackSet b = track_temporal(events, model, clusters, map, disabled, default_bt_ldpl(), 9);
  REQUIRE(a.size() == b.size());
  for (const auto& [dev, track] : a) {
    const Track& other = b.at(dev);
    REQUIRE(track.size() == other.size());
    for (std::size_t i = 0; i < track.size(); ++i) {
      CHECK(std::abs(track[i].second.x - other[i].second.x) <= 1e-12);
      CHECK(std::abs(track[i].second.y - other[i].second.y) <= 1e-12);
    }
  }
}

TEST_CASE("weights stay a probability distribution through steps") {
  const FloorMap map = demo_map();
  FusionConfig cfg;
  cfg.particle_count = 100;
  std::mt19937_64 rng(20);
  std::map<DeviceId, ParticleSet> sets;
  sets["d1"] = init_particles(map, cfg, rng, "d1", 0);

  ClusterModel clusters;
  clusters.centroids = {{10, 4, 0}, {30, 4, 0}};
  TickEvents events;
  events.wifi["d1"] = ClusterProbs{{0.6, 0.4}};
  for (int i = 0; i < 20; ++i) {
    step(sets, events, clusters, map, cfg, default_bt_ldpl(), rng, 0.5);
    double sum = 0.0;
    for (const Particle& p : sets["d1"].particles) sum += p.weight;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}
