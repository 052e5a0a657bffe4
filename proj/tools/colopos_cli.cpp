// Command-line front end: simulate -> train -> track -> eval -> report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colopos/pipeline.hpp"

namespace fs = std::filesystem;
using namespace colopos;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("cannot open file: " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw CLI::ValidationError("cannot write file: " + path);
  return os;
}

IniFile load_ini(const std::string& path) {
  auto is = open_in(path);
  return IniFile::parse(is);
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_dir) {
  const IniFile ini = load_ini(config_path);
  ScenarioConfig scenario = load_scenario(ini);
  const LdplParams ldpl_wifi = load_ldpl(ini, "ldpl.wifi", default_wifi_ldpl());
  const LdplParams ldpl_bt = load_ldpl(ini, "ldpl.bluetooth", default_bt_ldpl());

  scenario.seed = seed;
  if (scenario.ap_layout.empty()) scenario.ap_layout = demo_ap_layout();
  const FloorMap map = demo_map();
  const auto truth = generate_truth(scenario, demo_path(scenario.duration_s), &map);
  std::mt19937_64 rng(seed * 7919ULL + 17);
  const RadioMap radio_map =
      generate_radio_map(scenario, ldpl_wifi, map, scenario.grid_step_m, rng);
  const EventStream events = generate_events(scenario, truth, ldpl_wifi, ldpl_bt);

  fs::create_directories(out_dir);
  {
    auto os = open_out(out_dir + "/events.jsonl");
    write_jsonl(os, events);
  }
  {
    auto os = open_out(out_dir + "/map.json");
    os << map_to_json(map).dump(2) << "\n";
  }
  {
    auto os = open_out(out_dir + "/radiomap.csv");
    write_radio_map_csv(os, radio_map);
  }
  {
    nlohmann::json j;
    for (const auto& [device, traj] : truth) j["devices"][device] = trajectory_to_json(traj);
    auto os = open_out(out_dir + "/truth.json");
    os << j.dump(2) << "\n";
  }
  std::cerr << "simulate: " << events.events.size() << " events for "
            << scenario.n_users << " users -> " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& radio_map_path, int k, std::size_t clusters_k,
              std::uint64_t seed, const std::string& out_path) {
  auto is = open_in(radio_map_path);
  const RadioMap radio_map = read_radio_map_csv(is);
  TrainedModel model;
  model.fingerprint = fit(radio_map, k);
  model.clusters = kmeans(radio_map, clusters_k, seed);
  auto os = open_out(out_path);
  os << model_to_json(model).dump() << "\n";
  std::cerr << "train: " << radio_map.samples.size() << " samples, "
            << model.clusters.centroids.size() << " clusters -> " << out_path << "\n";
  return 0;
}

int cmd_track(const std::string& mode, const std::string& events_path,
              const std::string& model_path, const std::string& map_path,
              const std::string& config_path, std::uint64_t seed,
              const std::string& out_path, const std::string& dump_particles) {
  auto eis = open_in(events_path);
  const EventStream events = read_jsonl(eis);
  auto mis = open_in(model_path);
  const TrainedModel model = model_from_json(nlohmann::json::parse(mis));

  FusionConfig cfg;
  LdplParams ldpl_bt = default_bt_ldpl();
  if (!config_path.empty()) {
    const IniFile ini = load_ini(config_path);
    cfg = load_fusion(ini);
    ldpl_bt = load_ldpl(ini, "ldpl.bluetooth", ldpl_bt);
  }

  TrackSet tracks;
  if (mode == "wifi") {
    tracks = track_wifi_only(events, model.fingerprint, cfg);
  } else if (mode == "nontemporal") {
    tracks = track_nontemporal(events, model.fingerprint, cfg, ldpl_bt);
  } else if (mode == "temporal") {
    auto mjs = open_in(map_path);
    const FloorMap map = map_from_json(nlohmann::json::parse(mjs));
    std::ofstream dump;
    TickObserver observe;
    if (!dump_particles.empty()) {
      dump = open_out(dump_particles);
      observe = [&dump](double t, const std::map<DeviceId, ParticleSet>& sets) {
        for (const auto& [device, set] : sets) {
          nlohmann::json j;
          j["t"] = t;
          j["device"] = device;
          j["particles"] = nlohmann::json::array();
          for (const Particle& p : set.particles)
            j["particles"].push_back({p.pos.x, p.pos.y, p.pos.floor});
          dump << j.dump() << "\n";
        }
      };
    }
    tracks = track_temporal(events, model.fingerprint, model.clusters, map, cfg,
                            ldpl_bt, seed, observe);
  } else {
    throw CLI::ValidationError("unknown mode: " + mode);
  }

  auto os = open_out(out_path);
  write_tracks_csv(os, tracks);
  std::cerr << "track --mode " << mode << ": " << tracks.size() << " devices -> "
            << out_path << "\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& track_paths,
             const std::vector<std::string>& names, const std::string& truth_path,
             const std::string& out_path) {
  auto tis = open_in(truth_path);
  const nlohmann::json tj = nlohmann::json::parse(tis);
  std::map<DeviceId, Trajectory> truth;
  for (const auto& [device, traj] : tj.at("devices").items())
    truth[device] = trajectory_from_json(traj);

  std::vector<std::pair<std::string, ErrorReport>> reports;
  for (std::size_t i = 0; i < track_paths.size(); ++i) {
    auto is = open_in(track_paths[i]);
    const TrackSet tracks = read_tracks_csv(is);
    const std::string name = i < names.size() ? names[i] : fs::path(track_paths[i]).stem().string();
    reports.emplace_back(name, evaluate(tracks, truth));
  }

  nlohmann::json out;
  for (const auto& [name, report] : reports) out["reports"][name] = report_to_json(report);
  auto os = open_out(out_path);
  os << out.dump(2) << "\n";
  std::cout << compare(reports);
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& name, bool cdf,
               const std::string& out_path) {
  auto is = open_in(report_path);
  const nlohmann::json j = nlohmann::json::parse(is);
  const auto& reports = j.at("reports");
  const std::string key = name.empty() ? reports.begin().key() : name;
  const ErrorReport report = report_from_json(reports.at(key));
  if (cdf) {
    auto os = open_out(out_path);
    write_cdf_csv(os, report);
  }
  std::cout << compare({{key, report}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative Wi-Fi + Bluetooth indoor positioning"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_path, radio_map_path, mode, events_path;
  std::string model_path, map_path, truth_path, report_path, report_name, dump_particles;
  std::vector<std::string> track_paths, names;
  std::uint64_t seed = 1;
  int k = 5;
  std::size_t clusters_k = 30;
  bool cdf = false;

  auto* sim = app.add_subcommand("simulate", "Generate a scenario: events, truth, map, radio map");
  sim->add_option("--config", config_path, "scenario INI file")->required();
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out-dir", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "Fit the fingerprint model and clusters");
  train->add_option("--radio-map", radio_map_path, "radio map CSV")->required();
  train->add_option("--k", k, "neighbor count");
  train->add_option("--clusters", clusters_k, "cluster count K");
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--out", out_path, "model JSON output")->required();

  auto* track = app.add_subcommand("track", "Run a tracking mode over an event log");
  track->add_option("--mode", mode, "wifi|nontemporal|temporal")->required();
  track->add_option("--events", events_path, "events JSONL")->required();
  track->add_option("--model", model_path, "trained model JSON")->required();
  track->add_option("--map", map_path, "floor map JSON (temporal mode)");
  track->add_option("--config", config_path, "fusion INI file");
  track->add_option("--seed", seed, "RNG seed");
  track->add_option("--out", out_path, "track CSV output")->required();
  track->add_option("--dump-particles", dump_particles, "per-tick particle dump JSONL");

  auto* eval = app.add_subcommand("eval", "Compute error statistics against ground truth");
  eval->add_option("--tracks", track_paths, "track CSV files")->required()->expected(-1);
  eval->add_option("--names", names, "report names, aligned with --tracks");
  eval->add_option("--truth", truth_path, "ground-truth trajectories JSON")->required();
  eval->add_option("--out", out_path, "report JSON output")->required();

  auto* rep = app.add_subcommand("report", "Render a stored report");
  rep->add_option("--report", report_path, "report JSON from eval")->required();
  rep->add_option("--name", report_name, "which report to render");
  rep->add_flag("--cdf", cdf, "write the CDF as CSV");
  rep->add_option("--out", out_path, "CDF CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, seed, out_dir);
    if (train->parsed()) return cmd_train(radio_map_path, k, clusters_k, seed, out_path);
    if (track->parsed())
      return cmd_track(mode, events_path, model_path, map_path, config_path, seed,
                       out_path, dump_particles);
    if (eval->parsed()) return cmd_eval(track_paths, names, truth_path, out_path);
    if (rep->parsed()) return cmd_report(report_path, report_name, cdf, out_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
