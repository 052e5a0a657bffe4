#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colopos/events.hpp"
#include "colopos/fusion_nontemporal.hpp"
#include "colopos/geomap.hpp"

namespace colopos {

constexpr double kFloorMismatchPenalty = 10.0;  // meters
constexpr double kCdfBin = 0.1;                 // meters

struct ErrorStats {
  double mean = 0.0;
  double stddev = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  std::size_t n = 0;
};

struct ErrorReport {
  std::map<DeviceId, ErrorStats> per_device;
  ErrorStats overall;
  std::vector<std::pair<double, double>> cdf;  // (error_m, cumulative fraction)
};

namespace detail {

// nearest-rank percentile on a sorted sample
inline double percentile(const std::vector<double>& sorted, double q) {
  const std::size_t rank = static_cast<std::size_t>(std::ceil(q * sorted.size()));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

inline ErrorStats stats_of(std::vector<double> errors) {
  ErrorStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.mean = sum / errors.size();
  double sq = 0.0;
  for (double e : errors) sq += (e - s.mean) * (e - s.mean);
  s.stddev = std::sqrt(sq / errors.size());
  std::sort(errors.begin(), errors.end());
  s.p50 = percentile(errors, 0.50);
  s.p75 = percentile(errors, 0.75);
  s.p90 = percentile(errors, 0.90);
  return s;
}

}  // namespace detail

// Distance error against interpolated ground truth at every track output; a
// floor mismatch counts as a fixed 10 m penalty.
inline ErrorReport evaluate(const TrackSet& tracks,
                            const std::map<DeviceId, Trajectory>& truth) {
  ErrorReport report;
  std::vector<double> pooled;
  for (const auto& [device, track] : tracks) {
    auto it = truth.find(device);
    if (it == truth.end())
      throw std::invalid_argument("evaluate: no ground truth for device " + device);
    std::vector<double> errors;
    errors.reserve(track.size());
    for (const auto& [t, pos] : track) {
      const Position gt = position_at(it->second, t);
      const double e = pos.floor == gt.floor ? distance2d(pos, gt) : kFloorMismatchPenalty;
      errors.push_back(e);
      pooled.push_back(e);
    }
    report.per_device[device] = detail::stats_of(std::move(errors));
  }
  report.overall = detail::stats_of(pooled);

  if (!pooled.empty()) {
    std::sort(pooled.begin(), pooled.end());
    const double top = pooled.back();
    const std::size_t bins = static_cast<std::size_t>(std::floor(top / kCdfBin)) + 1;
    std::size_t idx = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double edge = (b + 1) * kCdfBin;
      while (idx < pooled.size() && pooled[idx] <= edge) ++idx;
      report.cdf.emplace_back(edge, static_cast<double>(idx) / pooled.size());
    }
    if (report.cdf.empty() || report.cdf.back().second < 1.0)
      report.cdf.emplace_back(top, 1.0);
  }
  return report;
}

// Aligned comparison, Table-2 style: one column per report, relative mean
// reduction against the first (baseline) column.
inline std::string compare(const std::vector<std::pair<std::string, ErrorReport>>& reports) {
  if (reports.empty()) throw std::invalid_argument("compare: no reports");
  std::ostringstream os;
  char buf[256];

  os << "device";
  for (const auto& [name, r] : reports) os << " | " << name;
  if (reports.size() > 1) os << " | reduction vs " << reports.front().first;
  os << "\n";

  auto row = [&](const std::string& label, auto pick) {
    os << label;
    for (const auto& [name, r] : reports) {
      const ErrorStats s = pick(r);
      std::snprintf(buf, sizeof(buf), " | %.2fm +/- %.2fm", s.mean, s.stddev);
      os << buf;
    }
    if (reports.size() > 1) {
      const double base = pick(reports.front().second).mean;
      const double last = pick(reports.back().second).mean;
      const double red = base > 0 ? (base - last) / base * 100.0 : 0.0;
      std::snprintf(buf, sizeof(buf), " | %.1f%%", red);
      os << buf;
    }
    os << "\n";
  };

  std::vector<DeviceId> devices;
  for (const auto& [d, s] : reports.front().second.per_device) devices.push_back(d);
  for (const DeviceId& d : devices)
    row(d, [&](const ErrorReport& r) {
      auto it = r.per_device.find(d);
      return it == r.per_device.end() ? ErrorStats{} : it->second;
    });
  row("overall", [](const ErrorReport& r) { return r.overall; });
  return os.str();
}

// --- file formats -----------------------------------------------------------

// Track CSV: device,t,x,y,floor
inline void write_tracks_csv(std::ostream& os, const TrackSet& tracks) {
  os << "device,t,x,y,floor\n";
  char buf[160];
  for (const auto& [device, track] : tracks) {
    for (const auto& [t, pos] : track) {
      std::snprintf(buf, sizeof(buf), "%s,%.3f,%.6f,%.6f,%d\n",
                    device.c_str(), t, pos.x, pos.y, pos.floor);
      os << buf;
    }
  }
}

inline TrackSet read_tracks_csv(std::istream& is) {
  TrackSet tracks;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    char device[64];
    double t, x, y;
    int floor;
    if (std::sscanf(line.c_str(), "%63[^,],%lf,%lf,%lf,%d", device, &t, &x, &y, &floor) != 5)
      throw std::runtime_error("tracks csv: bad row: " + line);
    tracks[device].emplace_back(t, Position{x, y, floor});
  }
  return tracks;
}

inline nlohmann::json report_to_json(const ErrorReport& report) {
  nlohmann::json j;
  auto stats = [](const ErrorStats& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}, {"p50", s.p50},
                          {"p75", s.p75},  {"p90", s.p90},    {"n", s.n}};
  };
  j["per_device"] = nlohmann::json::object();
  for (const auto& [device, s] : report.per_device) j["per_device"][device] = stats(s);
  j["overall"] = stats(report.overall);
  j["cdf"] = nlohmann::json::array();
  for (const auto& [e, f] : report.cdf) j["cdf"].push_back({e, f});
  return j;
}

inline ErrorReport report_from_json(const nlohmann::json& j) {
  ErrorReport report;
  auto stats = [](const nlohmann::json& s) {
    ErrorStats out;
    out.mean = s.at("mean").get<double>();
    out.stddev = s.at("std").get<double>();
    out.p50 = s.at("p50").get<double>();
    out.p75 = s.at("p75").get<double>();
    out.p90 = s.at("p90").get<double>();
    out.n = s.at("n").get<std::size_t>();
    return out;
  };
  for (const auto& [device, s] : j.at("per_device").items())
    report.per_device[device] = stats(s);
  report.overall = stats(j.at("overall"));
  for (const auto& p : j.at("cdf"))
    report.cdf.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return report;
}

inline void write_cdf_csv(std::ostream& os, const ErrorReport& report) {
  os << "error_m,fraction\n";
  char buf[64];
  for (const auto& [e, f] : report.cdf) {
    std::snprintf(buf, sizeof(buf), "%.3f,%.6f\n", e, f);
    os << buf;
  }
}

}  // namespace colopos
