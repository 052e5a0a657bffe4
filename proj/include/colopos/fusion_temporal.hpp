#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "colopos/events.hpp"
#include "colopos/fingerprint.hpp"
#include "colopos/fusion_nontemporal.hpp"
#include "colopos/geomap.hpp"
#include "colopos/radio.hpp"

namespace colopos {

struct Particle {
  Position pos;
  double weight = 0.0;
};

struct ParticleSet {
  DeviceId device;
  double t = 0.0;
  std::vector<Particle> particles;
};

constexpr double kStairCaptureRadius = 1.5;  // meters
constexpr double kStairTransitionProb = 0.5;

inline ParticleSet init_particles(const FloorMap& map, const FusionConfig& cfg,
                                  std::mt19937_64& rng, const DeviceId& device = {},
                                  int floor = 0) {
  const Rect& b = map.floor_bounds(floor);
  std::uniform_real_distribution<double> ux(b.xmin, b.xmax), uy(b.ymin, b.ymax);
  ParticleSet set;
  set.device = device;
  set.particles.resize(cfg.particle_count);
  const double w = 1.0 / cfg.particle_count;
  for (Particle& p : set.particles) {
    p.pos = {ux(rng), uy(rng), floor};
    p.weight = w;
  }
  return set;
}

// Random-heading, normal-speed motion with wall rejection: a move that would
// cross a wall or leave the floor bounds is redrawn up to 10 times, after
// which the particle stays put. A particle ending near a stair terminal may
// transfer to the linked floor.
inline void propagate(ParticleSet& set, double dt, const FloorMap& map,
                      const FusionConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> speed(cfg.speed_mean, cfg.speed_std);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (Particle& p : set.particles) {
    const Rect& b = map.floor_bounds(p.pos.floor);
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double v = std::max(0.0, cfg.speed_std == 0.0 ? cfg.speed_mean : speed(rng));
      const double h = heading(rng);
      Position next = p.pos;
      next.x += v * dt * std::cos(h);
      next.y += v * dt * std::sin(h);
      if (!b.contains(next.x, next.y)) continue;
      if (crosses_wall(map, p.pos, next)) continue;
      p.pos = next;
      break;
    }
    for (const Stair& s : map.stairs) {
      const Position* here = nullptr;
      const Position* there = nullptr;
      if (s.lower.floor == p.pos.floor) { here = &s.lower; there = &s.upper; }
      else if (s.upper.floor == p.pos.floor) { here = &s.upper; there = &s.lower; }
      else continue;
      if (distance2d(p.pos, *here) <= kStairCaptureRadius &&
          unit(rng) < kStairTransitionProb) {
        p.pos = *there;
        break;
      }
    }
  }
  set.t += dt;
}

// score_W: per cluster, particle distances to the centroid are min-max scaled
// over the set and weighted by the cluster probability; a particle's score is
// the sum over clusters, each term in [0, a_i]. On a multi-floor map the
// scaling runs over the particles sharing the centroid's floor; particles on
// other floors take no score from that cluster.
inline std::vector<double> score_wifi(const ParticleSet& set, const ClusterProbs& probs,
                                      const ClusterModel& clusters) {
  const std::size_t n = set.particles.size();
  std::vector<double> scores(n, 0.0);
  std::vector<double> dist(n);
  for (std::size_t c = 0; c < clusters.centroids.size(); ++c) {
    const double a = probs.probs[c];
    if (a == 0.0) continue;
    const Position& centroid = clusters.centroids[c];
    double dmin = std::numeric_limits<double>::max();
    double dmax = -std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
      const Position& p = set.particles[i].pos;
      if (p.floor != centroid.floor) {
        dist[i] = -1.0;
        continue;
      }
      const double dx = p.x - centroid.x, dy = p.y - centroid.y;
      dist[i] = std::sqrt(dx * dx + dy * dy);
      dmin = std::min(dmin, dist[i]);
      dmax = std::max(dmax, dist[i]);
    }
    if (dmax < dmin) continue;  // no particle on this cluster's floor
    const double span = dmax - dmin;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] < 0.0) continue;
      scores[i] += span == 0.0 ? a : a * (1.0 - (dist[i] - dmin) / span);
    }
  }
  return scores;
}

// score_B for every particle of set_i against the whole opposing set:
//   score_B(p_i) = sum_k wifi_scores_j[k] * exp(-(d(p_i, p_jk) - l)^2 / (2 db^2))
// restricted to same-floor particle pairs, then scaled by 1/max when
// normalization is on.
inline std::vector<double> score_bluetooth(const ParticleSet& set_i, const ParticleSet& set_j,
                                           const std::vector<double>& wifi_scores_j,
                                           double rss, const LdplParams& ldpl,
                                           const FusionConfig& cfg) {
  const double l = rss_to_distance(ldpl, rss);
  const double inv_2db2 = 1.0 / (2.0 * cfg.delta_b * cfg.delta_b);
  std::vector<double> scores(set_i.particles.size(), 0.0);
  for (std::size_t i = 0; i < set_i.particles.size(); ++i) {
    const Position& pi = set_i.particles[i].pos;
    double s = 0.0;
    for (std::size_t k = 0; k < set_j.particles.size(); ++k) {
      const Position& pj = set_j.particles[k].pos;
      if (pi.floor != pj.floor) continue;
      const double dx = pi.x - pj.x, dy = pi.y - pj.y;
      const double d = std::sqrt(dx * dx + dy * dy);
      s += wifi_scores_j[k] * std::exp(-(d - l) * (d - l) * inv_2db2);
    }
    scores[i] = s;
  }
  if (cfg.normalize_bt_score) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    if (mx > 0.0)
      for (double& s : scores) s /= mx;
  }
  return scores;
}

// Systematic resampling proportional to score; a score fraction q yields
// floor(qN) or ceil(qN) copies. Weights reset to uniform.
inline void resample_by_score(ParticleSet& set, const std::vector<double>& scores,
                              std::mt19937_64& rng) {
  const std::size_t n = set.particles.size();
  double total = 0.0;
  for (double s : scores) total += s;
  if (total <= 0.0) return;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = total / n;
  double u = unit(rng) * step;
  std::vector<Particle> next;
  next.reserve(n);
  double cum = scores[0];
  std::size_t idx = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double target = u + m * step;
    while (cum < target && idx + 1 < n) cum += scores[++idx];
    next.push_back(set.particles[idx]);
    next.back().weight = 1.0 / n;
  }
  set.particles = std::move(next);
}

inline Position estimate(const ParticleSet& set) {
  double wsum = 0.0, x = 0.0, y = 0.0;
  std::map<int, double> floor_weight;
  for (const Particle& p : set.particles) {
    wsum += p.weight;
    x += p.weight * p.pos.x;
    y += p.weight * p.pos.y;
    floor_weight[p.pos.floor] += p.weight;
  }
  int floor = set.particles.front().pos.floor;
  double best = -1.0;
  for (const auto& [f, w] : floor_weight)
    if (w > best) { best = w; floor = f; }
  return {x / wsum, y / wsum, floor};
}

// --- tick-synchronous tracker ----------------------------------------------

// Index of the event time nearest to t within the effective range, if any.
inline std::optional<std::size_t> nearest_within(const std::vector<double>& times,
                                                 double t, double effect_s) {
  std::optional<std::size_t> best;
  double best_dt = effect_s;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double d = std::abs(times[i] - t);
    if (d <= best_dt) { best_dt = d; best = i; }
  }
  return best;
}

struct TickEvents {
  // device -> cluster probabilities of its nearest effective Wi-Fi scan
  std::map<DeviceId, ClusterProbs> wifi;
  // one entry per unordered device pair with an effective sighting (nearest)
  std::vector<BtSighting> bt;
};

// One tracker update: propagate everything, score against the tick's events
// on frozen post-propagation snapshots, then resample each device that
// received a nonzero total score.
inline void step(std::map<DeviceId, ParticleSet>& sets, const TickEvents& events,
                 const ClusterModel& clusters, const FloorMap& map,
                 const FusionConfig& cfg, const LdplParams& ldpl_bt,
                 std::mt19937_64& rng, double dt) {
  for (auto& [device, set] : sets) propagate(set, dt, map, cfg, rng);

  // frozen snapshots so Bluetooth coupling is order-independent
  std::map<DeviceId, ParticleSet> snapshot = sets;

  std::map<DeviceId, std::vector<double>> wifi_scores;
  for (const auto& [device, probs] : events.wifi)
    wifi_scores[device] = score_wifi(snapshot.at(device), probs, clusters);

  std::map<DeviceId, std::vector<double>> totals;
  for (const auto& [device, scores] : wifi_scores) totals[device] = scores;

  if (cfg.use_bluetooth) {
    const int stride = std::max(1, cfg.bt_subsample);
    auto thinned = [&](const DeviceId& dev) {
      ParticleSet thin;
      thin.device = dev;
      const ParticleSet& full = snapshot.at(dev);
      std::vector<double> w;
      auto it = wifi_scores.find(dev);
      for (std::size_t k = 0; k < full.particles.size(); k += stride) {
        thin.particles.push_back(full.particles[k]);
        w.push_back(it == wifi_scores.end() ? 1.0 : it->second[k]);
      }
      return std::pair{thin, w};
    };

    for (const BtSighting& b : events.bt) {
      if (!snapshot.count(b.observer) || !snapshot.count(b.observed)) continue;
      const auto [thin_j, wj] = thinned(b.observed);
      const auto [thin_i, wi] = thinned(b.observer);
      auto add = [&](const DeviceId& dev, std::vector<double>&& scores) {
        auto& t = totals[dev];
        if (t.empty()) t = std::move(scores);
        else
          for (std::size_t i = 0; i < t.size(); ++i) t[i] += scores[i];
      };
      add(b.observer, score_bluetooth(snapshot.at(b.observer), thin_j, wj, b.rss, ldpl_bt, cfg));
      add(b.observed, score_bluetooth(snapshot.at(b.observed), thin_i, wi, b.rss, ldpl_bt, cfg));
    }
  }

  for (auto& [device, scores] : totals) resample_by_score(sets.at(device), scores, rng);
}

// Called after each tick with the current particle sets, e.g. for debug dumps.
using TickObserver = std::function<void(double, const std::map<DeviceId, ParticleSet>&)>;

inline TrackSet track_temporal(const EventStream& stream, const FingerprintModel& model,
                               const ClusterModel& clusters, const FloorMap& map,
                               const FusionConfig& cfg, const LdplParams& ldpl_bt,
                               std::uint64_t seed, const TickObserver& observe = {}) {
  std::mt19937_64 rng(seed);
  const int start_floor = map.bounds.begin()->first;

  // classify each locatable scan once; ticks reuse the cached probabilities
  struct ScanProbs {
    double t;
    ClusterProbs probs;
  };
  std::map<DeviceId, std::vector<ScanProbs>> scans;
  std::vector<BtSighting> sightings;
  for (const Event& e : stream.events) {
    if (const auto* w = std::get_if<WifiScan>(&e)) {
      try {
        scans[w->device].push_back({w->t, classify(model, clusters, *w)});
      } catch (const UnlocatableError&) {
      }
    } else {
      sightings.push_back(std::get<BtSighting>(e));
    }
  }

  std::map<DeviceId, ParticleSet> sets;
  for (const DeviceId& d : stream.participants)
    sets[d] = init_particles(map, cfg, rng, d, start_floor);

  const double end = stream.end_time();
  TrackSet tracks;
  for (double t = 0.0; t <= end + 1e-9; t += cfg.track_interval_s) {
    TickEvents events;
    for (const auto& [device, list] : scans) {
      std::vector<double> times;
      times.reserve(list.size());
      for (const ScanProbs& s : list) times.push_back(s.t);
      if (const auto idx = nearest_within(times, t, cfg.wifi_effect_s))
        events.wifi[device] = list[*idx].probs;
    }
    std::map<std::pair<DeviceId, DeviceId>, std::pair<double, const BtSighting*>> nearest;
    for (const BtSighting& b : sightings) {
      const double d = std::abs(b.t - t);
      if (d > cfg.bt_effect_s) continue;
      auto key = std::minmax(b.observer, b.observed);
      auto it = nearest.find({key.first, key.second});
      if (it == nearest.end() || d < it->second.first)
        nearest[{key.first, key.second}] = {d, &b};
    }
    for (const auto& [pair, entry] : nearest) events.bt.push_back(*entry.second);

    // the first tick scores the initial cloud essentially in place
    const double dt = t == 0.0 ? 1e-9 : cfg.track_interval_s;
    step(sets, events, clusters, map, cfg, ldpl_bt, rng, dt);
    if (observe) observe(t, sets);
    for (const auto& [device, set] : sets)
      tracks[device].emplace_back(t, estimate(set));
  }
  return tracks;
}

}  // namespace colopos
