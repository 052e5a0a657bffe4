#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "colopos/config.hpp"
#include "colopos/events.hpp"
#include "colopos/fingerprint.hpp"
#include "colopos/fusion_nontemporal.hpp"
#include "colopos/fusion_temporal.hpp"
#include "colopos/geomap.hpp"
#include "colopos/harness.hpp"
#include "colopos/radio.hpp"
#include "colopos/simulator.hpp"

namespace colopos {

// Trained model bundle: the fingerprint estimator plus its cluster classifier.
struct TrainedModel {
  FingerprintModel fingerprint;
  ClusterModel clusters;
};

inline nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["k"] = model.fingerprint.k;
  j["missing_rss"] = model.fingerprint.missing_rss;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : model.fingerprint.map.samples) {
    nlohmann::json js;
    js["pos"] = {s.pos.x, s.pos.y, s.pos.floor};
    js["readings"] = s.readings;
    j["samples"].push_back(std::move(js));
  }
  j["clusters"] = clusters_to_json(model.clusters);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel model;
  RadioMap map;
  for (const auto& js : j.at("samples")) {
    RadioMapSample s;
    s.pos = {js.at("pos").at(0).get<double>(), js.at("pos").at(1).get<double>(),
             js.at("pos").at(2).get<int>()};
    for (const auto& [ap, rss] : js.at("readings").items())
      s.readings[ap] = rss.get<double>();
    map.samples.push_back(std::move(s));
  }
  model.fingerprint = fit(map, j.at("k").get<int>(), j.at("missing_rss").get<double>());
  model.clusters = clusters_from_json(j.at("clusters"));
  return model;
}

// One simulated scenario end to end: truth, radio map, events, trained model.
struct Scenario {
  std::map<DeviceId, Trajectory> truth;
  FloorMap map;
  RadioMap radio_map;
  EventStream events;
  TrainedModel model;
};

inline Scenario build_scenario(ScenarioConfig cfg, const LdplParams& ldpl_wifi,
                               const LdplParams& ldpl_bt, std::uint64_t seed,
                               int knn_k = 5, std::size_t clusters_k = 30) {
  cfg.seed = seed;
  if (cfg.ap_layout.empty()) cfg.ap_layout = demo_ap_layout();
  Scenario s;
  s.map = demo_map();
  s.truth = generate_truth(cfg, demo_path(cfg.duration_s), &s.map);
  std::mt19937_64 rng(seed * 7919ULL + 17);
  s.radio_map = generate_radio_map(cfg, ldpl_wifi, s.map, cfg.grid_step_m, rng);
  s.events = generate_events(cfg, s.truth, ldpl_wifi, ldpl_bt);
  s.model.fingerprint = fit(s.radio_map, knn_k);
  s.model.clusters = kmeans(s.radio_map, clusters_k, seed);
  return s;
}

struct ModeTracks {
  TrackSet wifi_only;
  TrackSet nontemporal;
  TrackSet temporal;
};

inline ModeTracks run_all_modes(const Scenario& s, const FusionConfig& cfg,
                                const LdplParams& ldpl_bt, std::uint64_t seed) {
  ModeTracks out;
  out.wifi_only = track_wifi_only(s.events, s.model.fingerprint, cfg);
  out.nontemporal = track_nontemporal(s.events, s.model.fingerprint, cfg, ldpl_bt);
  out.temporal = track_temporal(s.events, s.model.fingerprint, s.model.clusters,
                                s.map, cfg, ldpl_bt, seed);
  return out;
}

}  // namespace colopos
