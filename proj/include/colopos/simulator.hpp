#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "colopos/events.hpp"
#include "colopos/fingerprint.hpp"
#include "colopos/geomap.hpp"
#include "colopos/radio.hpp"

namespace colopos {

struct ScenarioConfig {
  int n_users = 2;
  std::vector<int> group_sizes = {2};  // partition of users into co-moving groups
  double group_gap_m = 20.0;
  double intra_gap_m = 2.0;
  double duration_s = 300.0;
  std::vector<std::pair<std::string, Position>> ap_layout;
  double wifi_cycle_s = 4.0;
  double wifi_jitter_frac = 0.25;
  double bt_rate_hz = 0.5;   // per ordered visible pair
  double bt_range_m = 15.0;
  double grid_step_m = 2.0;
  double floor_attenuation_db = 25.0;
  double detection_threshold_dbm = -95.0;
  std::map<DeviceId, double> rss_offset_db;       // per-device constant bias
  std::map<DeviceId, double> wifi_cycle_override; // device heterogeneity
  std::uint64_t seed = 1;

  void validate() const {
    if (n_users < 1) throw std::invalid_argument("scenario: n_users must be >= 1");
    int total = 0;
    for (int g : group_sizes) total += g;
    if (total != n_users)
      throw std::invalid_argument("scenario: group sizes must partition the users");
    if (!(duration_s > 0)) throw std::invalid_argument("scenario: duration must be > 0");
  }

  std::vector<DeviceId> devices() const {
    std::vector<DeviceId> out;
    for (int i = 1; i <= n_users; ++i) out.push_back("d" + std::to_string(i));
    return out;
  }
};

// --- bundled demo environment ----------------------------------------------
//
// Two 50 m x 8 m corridor floors joined by a stair at the east end. The
// walking route runs a single pass down each corridor, so devices trailing on
// the route stay separated along the lane.

inline FloorMap demo_map() {
  FloorMap map;
  for (int f = 0; f < 2; ++f) {
    map.bounds[f] = {0.0, 0.0, 50.0, 8.0};
    auto wall = [f](double x1, double y1, double x2, double y2) {
      return Wall{{x1, y1, f}, {x2, y2, f}};
    };
    map.walls.push_back(wall(0, 0, 50, 0));
    map.walls.push_back(wall(50, 0, 50, 8));
    map.walls.push_back(wall(50, 8, 0, 8));
    map.walls.push_back(wall(0, 8, 0, 0));
    // corridor side walls, open at both ends
    map.walls.push_back(wall(2, 2, 46, 2));
    map.walls.push_back(wall(2, 6, 46, 6));
  }
  map.stairs.push_back({{47.0, 4.0, 0}, {47.0, 4.0, 1}, 10.0});
  return map;
}

inline std::vector<std::pair<std::string, Position>> demo_ap_layout() {
  std::vector<std::pair<std::string, Position>> aps;
  int id = 1;
  for (int f = 0; f < 2; ++f)
    for (double x : {4.0, 12.0, 20.0, 28.0, 36.0, 44.0})
      for (double y : {1.0, 7.0}) {
        char name[16];
        std::snprintf(name, sizeof(name), "ap%02d", id++);
        aps.emplace_back(name, Position{x, y, f});
      }
  return aps;
}

// Route template scaled to duration_s: eastward along floor 0 from
// mid-corridor, up the stair, east-to-west along floor 1. The mid-corridor
// start leaves room behind it so trailing users can begin on the lane.
inline Trajectory demo_path(double duration_s, double stair_s = 10.0) {
  struct Leg {
    Position pos;
  };
  const std::vector<Position> route0 = {{25, 4, 0}, {46, 4, 0}, {47, 4, 0}};
  const std::vector<Position> route1 = {{47, 4, 1}, {46, 4, 1}, {3, 4, 1}};
  double walk_len = 0.0;
  for (std::size_t i = 1; i < route0.size(); ++i)
    walk_len += distance2d(route0[i - 1], route0[i]);
  for (std::size_t i = 1; i < route1.size(); ++i)
    walk_len += distance2d(route1[i - 1], route1[i]);
  if (duration_s <= stair_s)
    throw std::invalid_argument("demo_path: duration too short for the stair leg");
  const double v = walk_len / (duration_s - stair_s);

  Trajectory traj;
  double t = 0.0;
  traj.checkpoints.push_back({route0[0], t});
  for (std::size_t i = 1; i < route0.size(); ++i) {
    t += distance2d(route0[i - 1], route0[i]) / v;
    traj.checkpoints.push_back({route0[i], t});
  }
  t += stair_s;
  traj.checkpoints.push_back({route1[0], t});
  for (std::size_t i = 1; i < route1.size(); ++i) {
    t += distance2d(route1[i - 1], route1[i]) / v;
    traj.checkpoints.push_back({route1[i], t});
  }
  traj.checkpoints.back().t = duration_s;  // absorb rounding
  return traj;
}

// --- scenario generation ----------------------------------------------------

// Users trail the route template by a per-user arc offset: co-group members
// intra_gap_m apart, groups group_gap_m apart. Offsets become time shifts at
// the template's average speed; each user trajectory is resampled at 1 s.
// Before the template begins, trailing users extrapolate backwards along the
// first route segment so nobody piles up at the start point. If a map is
// given, every checkpoint is validated against its floor bounds.
inline std::map<DeviceId, Trajectory> generate_truth(const ScenarioConfig& cfg,
                                                     const Trajectory& path,
                                                     const FloorMap* map = nullptr) {
  cfg.validate();
  const double T = path.t_end() - path.t_begin();
  double path_len = 0.0;
  for (std::size_t i = 1; i < path.checkpoints.size(); ++i)
    path_len += distance2d(path.checkpoints[i - 1].pos, path.checkpoints[i].pos);
  const double v = path_len / T;

  const Checkpoint& c0 = path.checkpoints.front();
  const Checkpoint& c1 = path.checkpoints[1];
  const double seg0 = distance2d(c0.pos, c1.pos);
  const double ux = (c1.pos.x - c0.pos.x) / seg0;
  const double uy = (c1.pos.y - c0.pos.y) / seg0;

  auto at = [&](double src) {
    if (src >= path.t_begin()) return position_at(path, std::min(src, path.t_end()));
    const double back = v * (path.t_begin() - src);
    return Position{c0.pos.x - ux * back, c0.pos.y - uy * back, c0.pos.floor};
  };

  std::map<DeviceId, Trajectory> out;
  const auto devices = cfg.devices();
  int user = 0;
  for (std::size_t g = 0; g < cfg.group_sizes.size(); ++g) {
    for (int m = 0; m < cfg.group_sizes[g]; ++m, ++user) {
      const double offset_m = g * cfg.group_gap_m + m * cfg.intra_gap_m;
      if (offset_m >= path_len)
        throw std::invalid_argument("generate_truth: user offset exceeds path length");
      const double shift = offset_m / v;
      Trajectory traj;
      for (double t = 0.0; t <= cfg.duration_s + 1e-9; t += 1.0) {
        const Position p = at(t - shift);
        if (map && !map->floor_bounds(p.floor).contains(p.x, p.y))
          throw std::invalid_argument("generate_truth: user offset leaves the map");
        traj.checkpoints.push_back({p, std::min(t, cfg.duration_s)});
      }
      out[devices[user]] = std::move(traj);
    }
  }
  return out;
}

namespace detail {

inline double clamped_rss(const LdplParams& ldpl, double d, std::mt19937_64& rng) {
  return sample_rss(ldpl, std::max(d, 0.1), rng);
}

inline double ap_rss(const ScenarioConfig& cfg, const LdplParams& ldpl_wifi,
                     const Position& at, const Position& ap, std::mt19937_64& rng) {
  double rss = clamped_rss(ldpl_wifi, distance2d(at, ap), rng);
  if (at.floor != ap.floor)
    rss -= cfg.floor_attenuation_db * std::abs(at.floor - ap.floor);
  return rss;
}

}  // namespace detail

// Grid samples over each floor's bounds; readings below the detection
// threshold are omitted.
inline RadioMap generate_radio_map(const ScenarioConfig& cfg, const LdplParams& ldpl_wifi,
                                   const FloorMap& map, double grid_step_m,
                                   std::mt19937_64& rng) {
  if (cfg.ap_layout.empty())
    throw std::invalid_argument("generate_radio_map: empty AP layout");
  RadioMap out;
  for (const auto& [floor, b] : map.bounds) {
    for (double x = b.xmin + grid_step_m / 2; x < b.xmax; x += grid_step_m) {
      for (double y = b.ymin + grid_step_m / 2; y < b.ymax; y += grid_step_m) {
        RadioMapSample s;
        s.pos = {x, y, floor};
        for (const auto& [ap, pos] : cfg.ap_layout) {
          const double rss = detail::ap_rss(cfg, ldpl_wifi, s.pos, pos, rng);
          if (rss >= cfg.detection_threshold_dbm) s.readings[ap] = rss;
        }
        if (!s.readings.empty()) out.samples.push_back(std::move(s));
      }
    }
  }
  return out;
}

// Per-device Wi-Fi scan cycles with uniform jitter, plus Poisson Bluetooth
// sightings per ordered pair while the pair is on one floor and in range.
inline EventStream generate_events(const ScenarioConfig& cfg,
                                   const std::map<DeviceId, Trajectory>& truth,
                                   const LdplParams& ldpl_wifi, const LdplParams& ldpl_bt) {
  std::vector<Event> records;
  const auto devices = cfg.devices();

  for (std::size_t i = 0; i < devices.size(); ++i) {
    const DeviceId& dev = devices[i];
    const Trajectory& traj = truth.at(dev);
    std::mt19937_64 rng(cfg.seed * 1000003ULL + i);
    std::uniform_real_distribution<double> jitter(-cfg.wifi_jitter_frac,
                                                  cfg.wifi_jitter_frac);
    double cycle = cfg.wifi_cycle_s;
    if (auto it = cfg.wifi_cycle_override.find(dev); it != cfg.wifi_cycle_override.end())
      cycle = it->second;
    double offset = 0.0;
    if (auto it = cfg.rss_offset_db.find(dev); it != cfg.rss_offset_db.end())
      offset = it->second;

    double t = cycle * (1.0 + jitter(rng));
    while (t <= cfg.duration_s) {
      WifiScan scan;
      scan.device = dev;
      scan.t = std::round(t * 1000.0) / 1000.0;
      const Position at = position_at(traj, std::min(t, traj.t_end()));
      for (const auto& [ap, pos] : cfg.ap_layout) {
        const double rss =
            std::round((detail::ap_rss(cfg, ldpl_wifi, at, pos, rng) + offset) * 10.0) / 10.0;
        if (rss >= cfg.detection_threshold_dbm) scan.readings[ap] = rss;
      }
      if (!scan.readings.empty()) records.emplace_back(std::move(scan));
      t += cycle * (1.0 + jitter(rng));
    }
  }

  for (std::size_t i = 0; i < devices.size(); ++i) {
    for (std::size_t j = 0; j < devices.size(); ++j) {
      if (i == j) continue;
      std::mt19937_64 rng(cfg.seed * 2000003ULL + i * 64 + j);
      std::exponential_distribution<double> gap(cfg.bt_rate_hz);
      const Trajectory& ti = truth.at(devices[i]);
      const Trajectory& tj = truth.at(devices[j]);
      double t = gap(rng);
      while (t <= cfg.duration_s) {
        const Position pi = position_at(ti, std::min(t, ti.t_end()));
        const Position pj = position_at(tj, std::min(t, tj.t_end()));
        if (pi.floor == pj.floor && distance2d(pi, pj) <= cfg.bt_range_m) {
          BtSighting b;
          b.observer = devices[i];
          b.observed = devices[j];
          b.t = std::round(t * 1000.0) / 1000.0;
          b.rss = std::round(detail::clamped_rss(ldpl_bt, distance2d(pi, pj), rng) * 10.0) / 10.0;
          records.push_back(b);
        }
        t += gap(rng);
      }
    }
  }

  std::set<DeviceId> participants(devices.begin(), devices.end());
  return ingest(records, participants, cfg.duration_s);
}

}  // namespace colopos
