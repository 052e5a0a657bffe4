#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "colopos/events.hpp"
#include "colopos/fingerprint.hpp"
#include "colopos/geomap.hpp"
#include "colopos/radio.hpp"

namespace colopos {

struct FusionConfig {
  double delta_w = 4.0;        // Wi-Fi position std-dev, meters
  double delta_b = 2.0;        // Bluetooth range std-dev, meters
  double window_s = 10.0;      // sliding window length
  double wifi_effect_s = 10.0; // Wi-Fi scan effective range (temporal)
  double bt_effect_s = 2.0;    // Bluetooth sighting effective range (temporal)
  int particle_count = 1000;
  double speed_mean = 1.0;     // m/s
  double speed_std = 0.3;      // m/s
  double track_interval_s = 0.5;
  bool use_bluetooth = true;       // disable to drop all Bluetooth scoring
  bool normalize_bt_score = true;  // scale score_B so the best particle gets 1
  int bt_subsample = 1;            // stride over the opposing set in tracking
  bool halved_wifi_term = false;   // alternative r^2/(2*delta_w^2) reduced form
};

struct PairCorrection {
  double r_star = 0.0;
  Position corrected_i;
  Position corrected_j;
};

// Pairwise mismatch between two Wi-Fi position estimates and one
// Bluetooth-derived range l; zero iff both positions sit on their estimates
// and their separation equals l.
inline double g_full(double xi, double yi, double xj, double yj,
                     const Position& est_i, const Position& est_j,
                     double l, const FusionConfig& cfg) {
  const double wifi_sq = (xi - est_i.x) * (xi - est_i.x) + (yi - est_i.y) * (yi - est_i.y) +
                         (xj - est_j.x) * (xj - est_j.x) + (yj - est_j.y) * (yj - est_j.y);
  const double d = std::hypot(xi - xj, yi - yj);
  return wifi_sq / (2.0 * cfg.delta_w * cfg.delta_w) +
         (d - l) * (d - l) / (2.0 * cfg.delta_b * cfg.delta_b);
}

// argmin_r of g(r) = r^2/dw^2 + (d_hat - 2r - l)^2 / (2 db^2):
//   r* = dw^2 (d_hat - l) / (2 dw^2 + db^2)
// With the halved Wi-Fi term the same derivation gives
//   r* = 2 dw^2 (d_hat - l) / (4 dw^2 + db^2).
inline double minimize_g_reduced(double d_hat, double l, const FusionConfig& cfg) {
  const double dw2 = cfg.delta_w * cfg.delta_w;
  const double db2 = cfg.delta_b * cfg.delta_b;
  if (cfg.halved_wifi_term) return 2.0 * dw2 * (d_hat - l) / (4.0 * dw2 + db2);
  return dw2 * (d_hat - l) / (2.0 * dw2 + db2);
}

inline double g_reduced(double r, double d_hat, double l, const FusionConfig& cfg) {
  const double dw2 = cfg.delta_w * cfg.delta_w;
  const double db2 = cfg.delta_b * cfg.delta_b;
  const double wifi_div = cfg.halved_wifi_term ? 2.0 * dw2 : dw2;
  const double res = d_hat - 2.0 * r - l;
  return r * r / wifi_div + res * res / (2.0 * db2);
}

// Moves each estimate r* along the connecting line toward the other
// (r* < 0 pushes apart). A coincident pair has no direction; it is split
// along the x-axis.
inline PairCorrection fuse_pair(const Position& est_i, const Position& est_j,
                                double l, const FusionConfig& cfg) {
  PairCorrection out;
  out.corrected_i = est_i;
  out.corrected_j = est_j;
  if (est_i.floor != est_j.floor) return out;  // skipped, r_star = 0

  const double d_hat = distance2d(est_i, est_j);
  const double r = minimize_g_reduced(d_hat, l, cfg);
  out.r_star = r;
  double ux, uy;
  if (d_hat > 0) {
    ux = (est_j.x - est_i.x) / d_hat;
    uy = (est_j.y - est_i.y) / d_hat;
  } else {
    ux = 1.0;
    uy = 0.0;
  }
  out.corrected_i.x = est_i.x + r * ux;
  out.corrected_i.y = est_i.y + r * uy;
  out.corrected_j.x = est_j.x - r * ux;
  out.corrected_j.y = est_j.y - r * uy;
  return out;
}

using Track = std::vector<std::pair<double, Position>>;
using TrackSet = std::map<DeviceId, Track>;

struct NontemporalStats {
  std::size_t unlocatable_scans = 0;
  std::size_t skipped_pairs = 0;  // cross-floor or unlocated endpoint
};

// Windowed Wi-Fi estimation plus pairwise Bluetooth correction. Per window:
// the latest scan per device gives its estimate; every sighting between two
// located devices produces one fuse_pair correction; a device with multiple
// corrections gets their arithmetic mean. One output per located device per
// window, stamped at the window midpoint.
inline TrackSet track_nontemporal(const EventStream& stream, const FingerprintModel& model,
                                  const FusionConfig& cfg, const LdplParams& ldpl,
                                  NontemporalStats* stats = nullptr) {
  TrackSet tracks;
  NontemporalStats local;
  const double end = stream.end_time();
  for (double start = 0.0; start < end; start += cfg.window_s) {
    const auto win = window_events(stream, {start, cfg.window_s});

    std::map<DeviceId, Position> estimates;
    for (const auto& [device, scans] : win.wifi_by_device) {
      try {
        estimates[device] = estimate_position(model, scans.back());
      } catch (const UnlocatableError&) {
        ++local.unlocatable_scans;
      }
    }

    std::map<DeviceId, std::vector<Position>> corrections;
    if (cfg.use_bluetooth) {
      for (const BtSighting& b : win.bt_pairs) {
        auto it_i = estimates.find(b.observer);
        auto it_j = estimates.find(b.observed);
        if (it_i == estimates.end() || it_j == estimates.end()) {
          ++local.skipped_pairs;
          continue;
        }
        if (it_i->second.floor != it_j->second.floor) {
          ++local.skipped_pairs;
          continue;
        }
        const double l = rss_to_distance(ldpl, b.rss);
        const PairCorrection c = fuse_pair(it_i->second, it_j->second, l, cfg);
        corrections[b.observer].push_back(c.corrected_i);
        corrections[b.observed].push_back(c.corrected_j);
      }
    }

    const double t_mid = start + cfg.window_s / 2.0;
    for (const auto& [device, est] : estimates) {
      Position out = est;
      auto it = corrections.find(device);
      if (it != corrections.end()) {
        double x = 0.0, y = 0.0;
        for (const Position& p : it->second) { x += p.x; y += p.y; }
        out.x = x / it->second.size();
        out.y = y / it->second.size();
      }
      tracks[device].emplace_back(t_mid, out);
    }
  }
  if (stats) *stats = local;
  return tracks;
}

// The Wi-Fi-only reference: identical windowing, no correction step.
inline TrackSet track_wifi_only(const EventStream& stream, const FingerprintModel& model,
                                const FusionConfig& cfg) {
  TrackSet tracks;
  const double end = stream.end_time();
  for (double start = 0.0; start < end; start += cfg.window_s) {
    const auto win = window_events(stream, {start, cfg.window_s});
    const double t_mid = start + cfg.window_s / 2.0;
    for (const auto& [device, scans] : win.wifi_by_device) {
      try {
        tracks[device].emplace_back(t_mid, estimate_position(model, scans.back()));
      } catch (const UnlocatableError&) {
      }
    }
  }
  return tracks;
}

}  // namespace colopos
