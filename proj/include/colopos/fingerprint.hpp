#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colopos/events.hpp"
#include "colopos/geomap.hpp"

namespace colopos {

struct RadioMapSample {
  Position pos;
  std::map<std::string, double> readings;  // AP id -> dBm
};

struct RadioMap {
  std::vector<RadioMapSample> samples;
};

class UnlocatableError : public std::runtime_error {
 public:
  UnlocatableError() : std::runtime_error("scan shares no access point with the radio map") {}
};

// Weighted-KNN position estimator over the retained radio map. The regressor
// is deliberately simple and deterministic; anything matching this interface
// (estimate + per-neighbor weights) can stand in for it.
struct FingerprintModel {
  RadioMap map;
  int k = 5;
  double missing_rss = -100.0;
};

inline FingerprintModel fit(const RadioMap& radio_map, int k = 5, double missing_rss = -100.0) {
  if (radio_map.samples.empty()) throw std::invalid_argument("fit: empty radio map");
  if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
  for (const auto& s : radio_map.samples)
    if (s.readings.empty()) throw std::invalid_argument("fit: sample with no readings");
  double min_rss = 0.0;
  for (const auto& s : radio_map.samples)
    for (const auto& [ap, rss] : s.readings) min_rss = std::min(min_rss, rss);
  if (missing_rss > min_rss)
    throw std::invalid_argument("fit: missing_rss above weakest observed reading");
  return {radio_map, k, missing_rss};
}

struct Neighbor {
  std::size_t sample;
  double weight;
};

// RSS-space Euclidean distance over the union of APs of scan and sample,
// absent readings filled with missing_rss.
inline double rss_distance(const std::map<std::string, double>& a,
                           const std::map<std::string, double>& b,
                           double missing_rss) {
  double sq = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    double da, db;
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      da = ia->second, db = missing_rss;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      da = missing_rss, db = ib->second;
      ++ib;
    } else {
      da = ia->second, db = ib->second;
      ++ia, ++ib;
    }
    sq += (da - db) * (da - db);
  }
  return std::sqrt(sq);
}

inline std::vector<Neighbor> k_nearest(const FingerprintModel& model, const WifiScan& scan) {
  bool shared = false;
  for (const auto& s : model.map.samples) {
    for (const auto& [ap, rss] : scan.readings)
      if (s.readings.count(ap)) { shared = true; break; }
    if (shared) break;
  }
  if (!shared) throw UnlocatableError();

  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(model.map.samples.size());
  for (std::size_t i = 0; i < model.map.samples.size(); ++i)
    dists.emplace_back(rss_distance(scan.readings, model.map.samples[i].readings,
                                    model.missing_rss), i);
  const std::size_t k = std::min<std::size_t>(model.k, dists.size());
  std::partial_sort(dists.begin(), dists.begin() + k, dists.end());

  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back({dists[i].second, 1.0 / (1e-6 + dists[i].first)});
  return out;
}

inline Position estimate_position(const FingerprintModel& model, const WifiScan& scan) {
  const auto neighbors = k_nearest(model, scan);

  double wsum = 0.0, x = 0.0, y = 0.0;
  std::map<int, int> floor_votes;
  for (const Neighbor& n : neighbors) {
    const Position& p = model.map.samples[n.sample].pos;
    wsum += n.weight;
    x += n.weight * p.x;
    y += n.weight * p.y;
    ++floor_votes[p.floor];
  }

  int best_floor = model.map.samples[neighbors.front().sample].pos.floor;
  int best_votes = 0;
  bool tie = false;
  for (const auto& [floor, votes] : floor_votes) {
    if (votes > best_votes) {
      best_votes = votes;
      best_floor = floor;
      tie = false;
    } else if (votes == best_votes) {
      tie = true;
    }
  }
  if (tie) best_floor = model.map.samples[neighbors.front().sample].pos.floor;

  return {x / wsum, y / wsum, best_floor};
}

// --- K-means over training positions ---------------------------------------

struct ClusterModel {
  std::vector<Position> centroids;
  std::vector<std::size_t> assignment;  // sample index -> cluster index
};

struct ClusterProbs {
  std::vector<double> probs;
};

namespace detail {

struct Point2 {
  double x, y;
  std::size_t sample;
};

inline std::vector<std::size_t> kmeanspp_seed(const std::vector<Point2>& pts,
                                              std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> centers;
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  centers.push_back(pick(rng));
  std::vector<double> d2(pts.size(), std::numeric_limits<double>::max());
  while (centers.size() < k) {
    const Point2& c = pts[centers.back()];
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double dx = pts[i].x - c.x, dy = pts[i].y - c.y;
      d2[i] = std::min(d2[i], dx * dx + dy * dy);
      total += d2[i];
    }
    if (total == 0.0) {
      centers.push_back(pick(rng));
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng), acc = 0.0;
    std::size_t chosen = pts.size() - 1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      acc += d2[i];
      if (acc >= target) { chosen = i; break; }
    }
    centers.push_back(chosen);
  }
  return centers;
}

// Lloyd's iterations on one floor's points; returns centroids + per-point labels.
inline void kmeans_floor(const std::vector<Point2>& pts, std::size_t k, std::mt19937_64& rng,
                         std::vector<std::pair<double, double>>& centroids,
                         std::vector<std::size_t>& labels) {
  const auto seeds = kmeanspp_seed(pts, k, rng);
  centroids.clear();
  for (std::size_t s : seeds) centroids.emplace_back(pts[s].x, pts[s].y);
  labels.assign(pts.size(), 0);

  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double dx = pts[i].x - centroids[c].first;
        const double dy = pts[i].y - centroids[c].second;
        const double d = dx * dx + dy * dy;
        if (d < best) { best = d; arg = c; }
      }
      if (labels[i] != arg) { labels[i] = arg; changed = true; }
    }

    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sx[labels[i]] += pts[i].x;
      sy[labels[i]] += pts[i].y;
      ++count[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // re-seed an empty cluster on the point farthest from its centroid
        double worst = -1.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double dx = pts[i].x - centroids[labels[i]].first;
          const double dy = pts[i].y - centroids[labels[i]].second;
          const double d = dx * dx + dy * dy;
          if (d > worst) { worst = d; arg = i; }
        }
        centroids[c] = {pts[arg].x, pts[arg].y};
        labels[arg] = c;
        changed = true;
        continue;
      }
      centroids[c] = {sx[c] / count[c], sy[c] / count[c]};
    }
    if (!changed) break;
  }

  // final means so the centroid invariant holds exactly
  std::vector<double> sx(k, 0.0), sy(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sx[labels[i]] += pts[i].x;
    sy[labels[i]] += pts[i].y;
    ++count[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (count[c] > 0) centroids[c] = {sx[c] / count[c], sy[c] / count[c]};
}

}  // namespace detail

// Clusters are computed per floor and concatenated; K is split across floors
// proportionally to sample counts.
inline ClusterModel kmeans(const RadioMap& radio_map, std::size_t K, std::uint64_t seed) {
  if (radio_map.samples.empty()) throw std::invalid_argument("kmeans: empty radio map");
  std::set<std::tuple<double, double, int>> distinct;
  for (const auto& s : radio_map.samples)
    distinct.insert({s.pos.x, s.pos.y, s.pos.floor});
  if (K < 1 || K > distinct.size())
    throw std::invalid_argument("kmeans: K must be in [1, distinct positions]");

  std::map<int, std::vector<detail::Point2>> by_floor;
  for (std::size_t i = 0; i < radio_map.samples.size(); ++i) {
    const Position& p = radio_map.samples[i].pos;
    by_floor[p.floor].push_back({p.x, p.y, i});
  }

  std::map<int, std::size_t> distinct_per_floor;
  for (const auto& [x, y, f] : distinct) ++distinct_per_floor[f];

  // proportional split, at least one per floor, capped by distinct positions
  std::map<int, std::size_t> k_per_floor;
  std::size_t assigned = 0;
  for (const auto& [floor, pts] : by_floor) {
    std::size_t kf = std::max<std::size_t>(
        1, K * pts.size() / radio_map.samples.size());
    kf = std::min(kf, distinct_per_floor[floor]);
    k_per_floor[floor] = kf;
    assigned += kf;
  }
  while (assigned < K) {
    bool grew = false;
    for (auto& [floor, kf] : k_per_floor) {
      if (assigned == K) break;
      if (kf < distinct_per_floor[floor]) { ++kf; ++assigned; grew = true; }
    }
    if (!grew) break;
  }
  while (assigned > K) {
    for (auto it = k_per_floor.rbegin(); it != k_per_floor.rend() && assigned > K; ++it)
      if (it->second > 1) { --it->second; --assigned; }
  }

  std::mt19937_64 rng(seed);
  ClusterModel model;
  model.assignment.assign(radio_map.samples.size(), 0);
  for (const auto& [floor, pts] : by_floor) {
    std::vector<std::pair<double, double>> centroids;
    std::vector<std::size_t> labels;
    detail::kmeans_floor(pts, k_per_floor[floor], rng, centroids, labels);
    const std::size_t base = model.centroids.size();
    for (const auto& [cx, cy] : centroids)
      model.centroids.push_back({cx, cy, floor});
    for (std::size_t i = 0; i < pts.size(); ++i)
      model.assignment[pts[i].sample] = base + labels[i];
  }
  return model;
}

// Probability per cluster from the same neighbors and weights as
// estimate_position.
inline ClusterProbs classify(const FingerprintModel& model, const ClusterModel& clusters,
                             const WifiScan& scan) {
  const auto neighbors = k_nearest(model, scan);
  ClusterProbs out;
  out.probs.assign(clusters.centroids.size(), 0.0);
  double total = 0.0;
  for (const Neighbor& n : neighbors) {
    out.probs[clusters.assignment[n.sample]] += n.weight;
    total += n.weight;
  }
  for (double& p : out.probs) p /= total;
  return out;
}

// --- serialization ----------------------------------------------------------

// Radio map CSV: sample,x,y,floor,ap_id,rss (one reading per row)
inline void write_radio_map_csv(std::ostream& os, const RadioMap& map) {
  os << "sample,x,y,floor,ap_id,rss\n";
  char buf[160];
  for (std::size_t i = 0; i < map.samples.size(); ++i) {
    const auto& s = map.samples[i];
    for (const auto& [ap, rss] : s.readings) {
      std::snprintf(buf, sizeof(buf), "%zu,%.3f,%.3f,%d,%s,%.1f\n",
                    i, s.pos.x, s.pos.y, s.pos.floor, ap.c_str(), rss);
      os << buf;
    }
  }
}

inline RadioMap read_radio_map_csv(std::istream& is) {
  RadioMap map;
  std::string line;
  std::getline(is, line);  // header
  std::map<std::size_t, std::size_t> index;  // file sample id -> vector index
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t sample;
    double x, y, rss;
    int floor;
    char ap[64];
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%d,%63[^,],%lf",
                    &sample, &x, &y, &floor, ap, &rss) != 6)
      throw std::runtime_error("radio map csv: bad row: " + line);
    auto it = index.find(sample);
    if (it == index.end()) {
      index[sample] = map.samples.size();
      map.samples.push_back({{x, y, floor}, {}});
      it = index.find(sample);
    }
    map.samples[it->second].readings[ap] = rss;
  }
  return map;
}

inline nlohmann::json clusters_to_json(const ClusterModel& model) {
  nlohmann::json j;
  j["centroids"] = nlohmann::json::array();
  for (const Position& c : model.centroids)
    j["centroids"].push_back({c.x, c.y, c.floor});
  j["assignment"] = model.assignment;
  return j;
}

inline ClusterModel clusters_from_json(const nlohmann::json& j) {
  ClusterModel model;
  for (const auto& c : j.at("centroids"))
    model.centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>(),
                               c.at(2).get<int>()});
  model.assignment = j.at("assignment").get<std::vector<std::size_t>>();
  return model;
}

}  // namespace colopos
