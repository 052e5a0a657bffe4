#pragma once

#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "colopos/fusion_nontemporal.hpp"
#include "colopos/radio.hpp"
#include "colopos/simulator.hpp"

namespace colopos {

// Minimal INI reader: [section] headers, key = value lines, '#' comments.
class IniFile {
 public:
  static IniFile parse(std::istream& is) {
    IniFile ini;
    std::string line, section;
    while (std::getline(is, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: expected key = value: " + line);
      ini.values_[section + "/" + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return ini;
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "/" + key) > 0;
  }

  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const {
    auto it = values_.find(section + "/" + key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_num(const std::string& section, const std::string& key, double fallback) const {
    auto it = values_.find(section + "/" + key);
    if (it == values_.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad number for " + section + "." + key);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto it = values_.find(section + "/" + key);
    if (it == values_.end()) return fallback;
    return it->second == "true" || it->second == "1" || it->second == "yes";
  }

  std::vector<double> get_list(const std::string& section, const std::string& key,
                               std::vector<double> fallback) const {
    auto it = values_.find(section + "/" + key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline LdplParams load_ldpl(const IniFile& ini, const std::string& section,
                            const LdplParams& defaults) {
  LdplParams p = defaults;
  p.l0 = ini.get_num(section, "l0", p.l0);
  p.rss_l0 = ini.get_num(section, "rss_l0", p.rss_l0);
  p.n = ini.get_num(section, "n", p.n);
  p.sigma_noise = ini.get_num(section, "sigma_noise", p.sigma_noise);
  p.validate();
  return p;
}

inline FusionConfig load_fusion(const IniFile& ini) {
  FusionConfig cfg;
  cfg.delta_w = ini.get_num("fusion", "delta_w", cfg.delta_w);
  cfg.delta_b = ini.get_num("fusion", "delta_b", cfg.delta_b);
  cfg.window_s = ini.get_num("fusion", "window_s", cfg.window_s);
  cfg.wifi_effect_s = ini.get_num("fusion", "wifi_effect_s", cfg.wifi_effect_s);
  cfg.bt_effect_s = ini.get_num("fusion", "bt_effect_s", cfg.bt_effect_s);
  cfg.particle_count = static_cast<int>(ini.get_num("fusion", "particle_count", cfg.particle_count));
  cfg.speed_mean = ini.get_num("fusion", "speed_mean", cfg.speed_mean);
  cfg.speed_std = ini.get_num("fusion", "speed_std", cfg.speed_std);
  cfg.track_interval_s = ini.get_num("fusion", "track_interval_s", cfg.track_interval_s);
  cfg.use_bluetooth = ini.get_bool("fusion", "use_bluetooth", cfg.use_bluetooth);
  cfg.normalize_bt_score = ini.get_bool("fusion", "normalize_bt_score", cfg.normalize_bt_score);
  cfg.bt_subsample = static_cast<int>(ini.get_num("fusion", "bt_subsample", cfg.bt_subsample));
  cfg.halved_wifi_term = ini.get_bool("fusion", "halved_wifi_term", cfg.halved_wifi_term);
  if (!(cfg.window_s >= cfg.track_interval_s))
    throw std::runtime_error("config: window_s must be >= track_interval_s");
  return cfg;
}

inline ScenarioConfig load_scenario(const IniFile& ini) {
  ScenarioConfig cfg;
  cfg.n_users = static_cast<int>(ini.get_num("scenario", "n_users", cfg.n_users));
  std::vector<double> groups;
  for (int g : cfg.group_sizes) groups.push_back(g);
  groups = ini.get_list("scenario", "group_sizes", groups);
  cfg.group_sizes.clear();
  for (double g : groups) cfg.group_sizes.push_back(static_cast<int>(g));
  cfg.group_gap_m = ini.get_num("scenario", "group_gap_m", cfg.group_gap_m);
  cfg.intra_gap_m = ini.get_num("scenario", "intra_gap_m", cfg.intra_gap_m);
  cfg.duration_s = ini.get_num("scenario", "duration_s", cfg.duration_s);
  cfg.wifi_cycle_s = ini.get_num("scenario", "wifi_cycle_s", cfg.wifi_cycle_s);
  cfg.wifi_jitter_frac = ini.get_num("scenario", "wifi_jitter_frac", cfg.wifi_jitter_frac);
  cfg.bt_rate_hz = ini.get_num("scenario", "bt_rate_hz", cfg.bt_rate_hz);
  cfg.bt_range_m = ini.get_num("scenario", "bt_range_m", cfg.bt_range_m);
  cfg.grid_step_m = ini.get_num("scenario", "grid_step_m", cfg.grid_step_m);
  cfg.floor_attenuation_db =
      ini.get_num("scenario", "floor_attenuation_db", cfg.floor_attenuation_db);
  cfg.detection_threshold_dbm =
      ini.get_num("scenario", "detection_threshold_dbm", cfg.detection_threshold_dbm);
  for (const DeviceId& d : cfg.devices()) {
    if (ini.has("scenario", "rss_offset_" + d))
      cfg.rss_offset_db[d] = ini.get_num("scenario", "rss_offset_" + d, 0.0);
    if (ini.has("scenario", "wifi_cycle_" + d))
      cfg.wifi_cycle_override[d] = ini.get_num("scenario", "wifi_cycle_" + d, cfg.wifi_cycle_s);
  }
  cfg.validate();
  return cfg;
}

}  // namespace colopos
