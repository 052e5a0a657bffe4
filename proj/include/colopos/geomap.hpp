#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace colopos {

struct Position {
  double x = 0.0;
  double y = 0.0;
  int floor = 0;

  bool operator==(const Position&) const = default;
};

inline double distance2d(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Wall {
  Position a;
  Position b;
};

struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
};

// Stairs join two floors at fixed terminals; walking the link takes duration_s.
struct Stair {
  Position lower;
  Position upper;
  double duration_s = 10.0;
};

struct FloorMap {
  std::vector<Wall> walls;
  std::map<int, Rect> bounds;
  std::vector<Stair> stairs;

  const Rect& floor_bounds(int floor) const {
    auto it = bounds.find(floor);
    if (it == bounds.end())
      throw std::runtime_error("no bounds for floor " + std::to_string(floor));
    return it->second;
  }
};

struct Checkpoint {
  Position pos;
  double t = 0.0;
};

struct Trajectory {
  std::vector<Checkpoint> checkpoints;

  double t_begin() const { return checkpoints.front().t; }
  double t_end() const { return checkpoints.back().t; }
};

namespace detail {

inline double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

inline bool on_segment(double px, double py, double qx, double qy, double rx, double ry) {
  return std::min(px, qx) <= rx && rx <= std::max(px, qx) &&
         std::min(py, qy) <= ry && ry <= std::max(py, qy);
}

}  // namespace detail

// Closed-segment intersection; touching endpoints count.
inline bool segments_intersect(const Position& p1, const Position& p2,
                               const Position& q1, const Position& q2) {
  const double d1 = detail::cross(q1.x, q1.y, q2.x, q2.y, p1.x, p1.y);
  const double d2 = detail::cross(q1.x, q1.y, q2.x, q2.y, p2.x, p2.y);
  const double d3 = detail::cross(p1.x, p1.y, p2.x, p2.y, q1.x, q1.y);
  const double d4 = detail::cross(p1.x, p1.y, p2.x, p2.y, q2.x, q2.y);

  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;

  if (d1 == 0 && detail::on_segment(q1.x, q1.y, q2.x, q2.y, p1.x, p1.y)) return true;
  if (d2 == 0 && detail::on_segment(q1.x, q1.y, q2.x, q2.y, p2.x, p2.y)) return true;
  if (d3 == 0 && detail::on_segment(p1.x, p1.y, p2.x, p2.y, q1.x, q1.y)) return true;
  if (d4 == 0 && detail::on_segment(p1.x, p1.y, p2.x, p2.y, q2.x, q2.y)) return true;
  return false;
}

inline bool crosses_wall(const FloorMap& map, const Position& from, const Position& to) {
  if (from.floor != to.floor)
    throw std::invalid_argument("crosses_wall: endpoints on different floors");
  for (const Wall& w : map.walls) {
    if (w.a.floor != from.floor) continue;
    if (segments_intersect(from, to, w.a, w.b)) return true;
  }
  return false;
}

// Linear interpolation between the bracketing checkpoints. The floor is taken
// from the earlier checkpoint until t reaches the later one.
inline Position position_at(const Trajectory& traj, double t) {
  const auto& cps = traj.checkpoints;
  if (cps.size() < 2) throw std::invalid_argument("trajectory needs >= 2 checkpoints");
  if (t < cps.front().t || t > cps.back().t)
    throw std::out_of_range("position_at: t outside trajectory range");

  auto it = std::upper_bound(cps.begin(), cps.end(), t,
                             [](double v, const Checkpoint& c) { return v < c.t; });
  if (it == cps.end()) return cps.back().pos;
  if (it == cps.begin()) return cps.front().pos;
  const Checkpoint& hi = *it;
  const Checkpoint& lo = *(it - 1);
  if (t == hi.t) return hi.pos;

  const double u = (t - lo.t) / (hi.t - lo.t);
  Position p;
  p.x = lo.pos.x + u * (hi.pos.x - lo.pos.x);
  p.y = lo.pos.y + u * (hi.pos.y - lo.pos.y);
  p.floor = lo.pos.floor;
  return p;
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json map_to_json(const FloorMap& map) {
  nlohmann::json j;
  j["walls"] = nlohmann::json::array();
  for (const Wall& w : map.walls)
    j["walls"].push_back({w.a.x, w.a.y, w.b.x, w.b.y, w.a.floor});
  j["bounds"] = nlohmann::json::object();
  for (const auto& [floor, r] : map.bounds)
    j["bounds"][std::to_string(floor)] = {r.xmin, r.ymin, r.xmax, r.ymax};
  j["stairs"] = nlohmann::json::array();
  for (const Stair& s : map.stairs)
    j["stairs"].push_back({s.lower.x, s.lower.y, s.lower.floor,
                           s.upper.x, s.upper.y, s.upper.floor, s.duration_s});
  return j;
}

inline FloorMap map_from_json(const nlohmann::json& j) {
  FloorMap map;
  for (const auto& w : j.at("walls")) {
    Wall wall;
    wall.a = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(4).get<int>()};
    wall.b = {w.at(2).get<double>(), w.at(3).get<double>(), w.at(4).get<int>()};
    map.walls.push_back(wall);
  }
  for (const auto& [key, r] : j.at("bounds").items()) {
    map.bounds[std::stoi(key)] = {r.at(0).get<double>(), r.at(1).get<double>(),
                                  r.at(2).get<double>(), r.at(3).get<double>()};
  }
  for (const auto& s : j.at("stairs")) {
    Stair st;
    st.lower = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<int>()};
    st.upper = {s.at(3).get<double>(), s.at(4).get<double>(), s.at(5).get<int>()};
    if (s.size() > 6) st.duration_s = s.at(6).get<double>();
    map.stairs.push_back(st);
  }
  return map;
}

inline nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json j;
  j["checkpoints"] = nlohmann::json::array();
  for (const Checkpoint& c : traj.checkpoints)
    j["checkpoints"].push_back({c.pos.x, c.pos.y, c.pos.floor, c.t});
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory traj;
  for (const auto& c : j.at("checkpoints")) {
    Checkpoint cp;
    cp.pos = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<int>()};
    cp.t = c.at(3).get<double>();
    traj.checkpoints.push_back(cp);
  }
  return traj;
}

}  // namespace colopos
