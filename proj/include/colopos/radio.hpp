#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

namespace colopos {

// Log-Distance Path Loss parameters. sigma_noise is the shadowing std-dev and
// is only used when simulating readings.
struct LdplParams {
  double l0 = 1.0;       // reference distance, meters
  double rss_l0 = -59.0; // dBm at l0
  double n = 2.0;        // path loss exponent
  double sigma_noise = 4.0;

  void validate() const {
    if (!(l0 > 0)) throw std::invalid_argument("LdplParams: l0 must be > 0");
    if (!(n > 0)) throw std::invalid_argument("LdplParams: n must be > 0");
    if (sigma_noise < 0) throw std::invalid_argument("LdplParams: sigma_noise < 0");
  }
};

inline LdplParams default_bt_ldpl() { return {1.0, -59.0, 2.0, 4.0}; }
inline LdplParams default_wifi_ldpl() { return {1.0, -40.0, 3.0, 5.0}; }

inline double rss_to_distance(const LdplParams& params, double rss) {
  return params.l0 * std::pow(10.0, (params.rss_l0 - rss) / (10.0 * params.n));
}

inline double distance_to_rss(const LdplParams& params, double d) {
  if (!(d > 0)) throw std::invalid_argument("distance_to_rss: d must be > 0");
  return params.rss_l0 - 10.0 * params.n * std::log10(d / params.l0);
}

inline double sample_rss(const LdplParams& params, double d, std::mt19937_64& rng) {
  const double rss = distance_to_rss(params, d);
  if (params.sigma_noise == 0.0) return rss;
  std::normal_distribution<double> noise(0.0, params.sigma_noise);
  return rss + noise(rng);
}

}  // namespace colopos
