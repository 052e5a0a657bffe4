#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace colopos {

using DeviceId = std::string;

struct WifiScan {
  DeviceId device;
  double t = 0.0;
  std::map<std::string, double> readings;  // AP id -> dBm
};

struct BtSighting {
  DeviceId observer;
  DeviceId observed;
  double t = 0.0;
  double rss = 0.0;
};

using Event = std::variant<WifiScan, BtSighting>;

inline double event_time(const Event& e) {
  return std::visit([](const auto& ev) { return ev.t; }, e);
}

struct EventStream {
  std::vector<Event> events;
  std::set<DeviceId> participants;
  double duration_s = 0.0;
  std::size_t dropped = 0;  // non-participant records removed at ingest

  double end_time() const {
    if (duration_s > 0) return duration_s;
    return events.empty() ? 0.0 : event_time(events.back());
  }
};

struct TimeWindow {
  double start = 0.0;
  double length = 0.0;
};

class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t index, const std::string& what)
      : std::runtime_error("record " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Sorts by timestamp (stable), validates fields, and drops records involving
// devices outside the participant set.
inline EventStream ingest(const std::vector<Event>& records,
                          const std::set<DeviceId>& participants,
                          double duration_s = 0.0) {
  EventStream out;
  out.participants = participants;
  out.duration_s = duration_s;

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (const auto* w = std::get_if<WifiScan>(&records[i])) {
      if (w->device.empty()) throw IngestError(i, "empty device id");
      if (!std::isfinite(w->t)) throw IngestError(i, "non-finite timestamp");
      if (w->readings.empty()) throw IngestError(i, "wifi scan with no readings");
      for (const auto& [ap, rss] : w->readings) {
        if (ap.empty()) throw IngestError(i, "empty access-point id");
        if (!std::isfinite(rss)) throw IngestError(i, "non-finite rss");
      }
      if (!participants.count(w->device)) {
        ++out.dropped;
        continue;
      }
      out.events.push_back(records[i]);
    } else {
      const auto& b = std::get<BtSighting>(records[i]);
      if (b.observer.empty() || b.observed.empty())
        throw IngestError(i, "empty device id");
      if (b.observer == b.observed) throw IngestError(i, "self-sighting");
      if (!std::isfinite(b.t) || !std::isfinite(b.rss))
        throw IngestError(i, "non-finite field");
      if (!participants.count(b.observer) || !participants.count(b.observed)) {
        ++out.dropped;
        continue;
      }
      out.events.push_back(records[i]);
    }
  }

  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const Event& a, const Event& b) {
                     return event_time(a) < event_time(b);
                   });
  return out;
}

struct WindowedEvents {
  std::map<DeviceId, std::vector<WifiScan>> wifi_by_device;
  std::vector<BtSighting> bt_pairs;
};

// Half-open [start, start + length): adjacent windows partition the stream.
inline WindowedEvents window_events(const EventStream& stream, const TimeWindow& window) {
  if (!(window.length > 0)) throw std::invalid_argument("window length must be > 0");
  WindowedEvents out;
  const double hi = window.start + window.length;
  for (const Event& e : stream.events) {
    const double t = event_time(e);
    if (t < window.start || t >= hi) continue;
    if (const auto* w = std::get_if<WifiScan>(&e))
      out.wifi_by_device[w->device].push_back(*w);
    else
      out.bt_pairs.push_back(std::get<BtSighting>(e));
  }
  return out;
}

// --- JSONL wire format ------------------------------------------------------
//
// {"type":"session","participants":["d1","d2"],"duration_s":300.000}
// {"type":"wifi","device":"d1","t":12.310,"readings":{"ap01":-57.0}}
// {"type":"bt","observer":"d1","observed":"d2","t":12.900,"rss":-68.0}
//
// Timestamps are written at millisecond resolution and RSS at 0.1 dBm, so a
// write/read cycle is bit-exact.

namespace detail {

inline std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace detail

inline void write_jsonl(std::ostream& os, const EventStream& stream) {
  os << "{\"type\":\"session\",\"participants\":[";
  bool first = true;
  for (const DeviceId& d : stream.participants) {
    if (!first) os << ',';
    os << '"' << d << '"';
    first = false;
  }
  os << "],\"duration_s\":" << detail::fmt(stream.duration_s, "%.3f") << "}\n";

  for (const Event& e : stream.events) {
    if (const auto* w = std::get_if<WifiScan>(&e)) {
      os << "{\"type\":\"wifi\",\"device\":\"" << w->device << "\",\"t\":"
         << detail::fmt(w->t, "%.3f") << ",\"readings\":{";
      first = true;
      for (const auto& [ap, rss] : w->readings) {
        if (!first) os << ',';
        os << '"' << ap << "\":" << detail::fmt(rss, "%.1f");
        first = false;
      }
      os << "}}\n";
    } else {
      const auto& b = std::get<BtSighting>(e);
      os << "{\"type\":\"bt\",\"observer\":\"" << b.observer << "\",\"observed\":\""
         << b.observed << "\",\"t\":" << detail::fmt(b.t, "%.3f") << ",\"rss\":"
         << detail::fmt(b.rss, "%.1f") << "}\n";
    }
  }
}

inline EventStream read_jsonl(std::istream& is) {
  std::vector<Event> records;
  std::set<DeviceId> participants;
  double duration_s = 0.0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(lineno, std::string("bad json: ") + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "session") {
        for (const auto& d : j.at("participants"))
          participants.insert(d.get<std::string>());
        duration_s = j.value("duration_s", 0.0);
      } else if (type == "wifi") {
        WifiScan w;
        w.device = j.at("device").get<std::string>();
        w.t = j.at("t").get<double>();
        for (const auto& [ap, rss] : j.at("readings").items())
          w.readings[ap] = rss.get<double>();
        records.emplace_back(std::move(w));
      } else if (type == "bt") {
        BtSighting b;
        b.observer = j.at("observer").get<std::string>();
        b.observed = j.at("observed").get<std::string>();
        b.t = j.at("t").get<double>();
        b.rss = j.at("rss").get<double>();
        records.emplace_back(b);
      } else {
        throw IngestError(lineno, "unknown event type: " + type);
      }
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(lineno, std::string("missing field: ") + e.what());
    }
  }
  return ingest(records, participants, duration_s);
}

}  // namespace colopos
