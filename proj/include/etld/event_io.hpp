#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "etld/errors.hpp"

namespace etld {

struct SensorGeometry {
  int width = 240;
  int height = 180;
};

// One asynchronous sensor event. Timestamps are integer microseconds.
struct Event {
  std::int64_t t = 0;  // microseconds
  int x = 0;
  int y = 0;
  int p = 0;  // polarity, parsed but unused downstream

  bool operator==(const Event&) const = default;
};

// Axis-aligned bounding box, fully inside the sensor.
struct Roi {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  bool operator==(const Roi&) const = default;

  bool contains(int px, int py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
};

inline void validate_roi(const Roi& r, const SensorGeometry& g) {
  if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > g.width ||
      r.y + r.h > g.height) {
    throw DataError("roi outside sensor bounds: " + std::to_string(r.x) + "," +
                    std::to_string(r.y) + "," + std::to_string(r.w) + "," +
                    std::to_string(r.h));
  }
}

struct AnnotationEntry {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  Roi roi;
};

// Sorted, non-overlapping intervals of ground truth.
struct AnnotationTrack {
  std::vector<AnnotationEntry> entries;

  // Entry whose interval contains t, if any.
  std::optional<AnnotationEntry> at(std::int64_t t) const {
    auto it = std::upper_bound(
        entries.begin(), entries.end(), t,
        [](std::int64_t v, const AnnotationEntry& e) { return v < e.t_start; });
    if (it == entries.begin()) return std::nullopt;
    --it;
    if (t >= it->t_start && t < it->t_end) return *it;
    return std::nullopt;
  }
};

// Canonical text format: "t_seconds x y p", one event per line.
inline Event parse_event_line(const std::string& line, const SensorGeometry& geom,
                              std::size_t line_no = 0) {
  std::istringstream iss(line);
  double t_sec;
  long x, y, p;
  if (!(iss >> t_sec >> x >> y >> p)) {
    throw DataError("malformed event at line " + std::to_string(line_no) + ": '" +
                    line + "'");
  }
  std::string extra;
  if (iss >> extra) {
    throw DataError("trailing token at line " + std::to_string(line_no) + ": '" +
                    extra + "'");
  }
  if (t_sec < 0) {
    throw DataError("negative timestamp at line " + std::to_string(line_no));
  }
  if (x < 0 || x >= geom.width || y < 0 || y >= geom.height) {
    throw DataError("event coordinates out of sensor bounds at line " +
                    std::to_string(line_no));
  }
  if (p != 0 && p != 1) {
    throw DataError("polarity must be 0 or 1 at line " + std::to_string(line_no));
  }
  Event e;
  e.t = static_cast<std::int64_t>(std::llround(t_sec * 1e6));
  e.x = static_cast<int>(x);
  e.y = static_cast<int>(y);
  e.p = static_cast<int>(p);
  return e;
}

inline std::vector<Event> load_events(const std::string& path,
                                      const SensorGeometry& geom) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event file: " + path);
  std::vector<Event> out;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t last_t = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Event e = parse_event_line(line, geom, line_no);
    if (e.t < last_t) {
      throw DataError("timestamps decrease at line " + std::to_string(line_no));
    }
    last_t = e.t;
    out.push_back(e);
  }
  return out;
}

inline void write_events(const std::string& path, const std::vector<Event>& evs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write event file: " + path);
  char buf[64];
  for (const Event& e : evs) {
    std::snprintf(buf, sizeof(buf), "%.6f %d %d %d\n", e.t * 1e-6, e.x, e.y, e.p);
    out << buf;
  }
}

// CSV "t_start_us,t_end_us,x,y,w,h"; header line required.
inline AnnotationTrack load_annotations(const std::string& path,
                                        const SensorGeometry& geom) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file: " + path);
  AnnotationTrack track;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.find("t_start_us") != std::string::npos) continue;
    AnnotationEntry e;
    char comma;
    std::istringstream iss(line);
    if (!(iss >> e.t_start >> comma >> e.t_end >> comma >> e.roi.x >> comma >>
          e.roi.y >> comma >> e.roi.w >> comma >> e.roi.h)) {
      throw DataError("malformed annotation at line " + std::to_string(line_no));
    }
    if (e.t_end <= e.t_start) {
      throw DataError("empty interval at line " + std::to_string(line_no));
    }
    validate_roi(e.roi, geom);
    track.entries.push_back(e);
  }
  std::sort(track.entries.begin(), track.entries.end(),
            [](const AnnotationEntry& a, const AnnotationEntry& b) {
              return a.t_start < b.t_start;
            });
  for (std::size_t i = 1; i < track.entries.size(); ++i) {
    if (track.entries[i].t_start < track.entries[i - 1].t_end) {
      throw DataError("overlapping annotation intervals");
    }
  }
  return track;
}

inline void write_annotations(const std::string& path, const AnnotationTrack& track) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotation file: " + path);
  out << "t_start_us,t_end_us,x,y,w,h\n";
  for (const AnnotationEntry& e : track.entries) {
    out << e.t_start << ',' << e.t_end << ',' << e.roi.x << ',' << e.roi.y << ','
        << e.roi.w << ',' << e.roi.h << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic sequences: events fire at edge pixels of a moving textured
// rectangle over static background clutter, with optional camera drift and
// occlusion windows.

struct OcclusionWindow {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
};

struct SynthConfig {
  SensorGeometry geom;
  int object_w = 40;
  int object_h = 30;
  double object_x0 = 40;  // initial top-left, pixels
  double object_y0 = 40;
  int texture_spacing = 0;  // interior grid lines every N px; 0 = outline only
  double object_vx = 0;     // px/s
  double object_vy = 0;
  double clutter_density = 0;  // edge segments per 1000 px^2
  double drift_vx = 0;         // camera drift, px/s (moves background)
  double drift_vy = 0;
  double event_rate = 100;  // events per edge pixel per second
  std::vector<OcclusionWindow> occlusions;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool occluded(const SynthConfig& cfg, std::int64_t t) {
  for (const auto& o : cfg.occlusions)
    if (t >= o.t_start && t < o.t_end) return true;
  return false;
}

// Edge-pixel offsets of the object mask relative to its top-left corner.
inline std::vector<std::pair<int, int>> object_mask(const SynthConfig& cfg) {
  std::vector<std::pair<int, int>> px;
  const int w = cfg.object_w, h = cfg.object_h;
  for (int x = 0; x < w; ++x) {
    px.emplace_back(x, 0);
    px.emplace_back(x, h - 1);
  }
  for (int y = 1; y < h - 1; ++y) {
    px.emplace_back(0, y);
    px.emplace_back(w - 1, y);
  }
  if (cfg.texture_spacing > 0) {
    for (int x = cfg.texture_spacing; x < w - 1; x += cfg.texture_spacing)
      for (int y = 1; y < h - 1; ++y) px.emplace_back(x, y);
    for (int y = cfg.texture_spacing; y < h - 1; y += cfg.texture_spacing)
      for (int x = 1; x < w - 1; ++x)
        if (x % cfg.texture_spacing != 0) px.emplace_back(x, y);
  }
  return px;
}

// Static clutter: short random segments scattered over the sensor.
inline std::vector<std::pair<int, int>> clutter_mask(const SynthConfig& cfg,
                                                     std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> px;
  const double area_k = cfg.geom.width * cfg.geom.height / 1000.0;
  const int n_segments = static_cast<int>(std::lround(cfg.clutter_density * area_k));
  std::uniform_int_distribution<int> ux(0, cfg.geom.width - 1);
  std::uniform_int_distribution<int> uy(0, cfg.geom.height - 1);
  std::uniform_int_distribution<int> ulen(4, 12);
  std::uniform_int_distribution<int> udir(0, 3);
  static constexpr int dx4[4] = {1, 0, 1, 1};
  static constexpr int dy4[4] = {0, 1, 1, -1};
  for (int s = 0; s < n_segments; ++s) {
    int x = ux(rng), y = uy(rng), len = ulen(rng), d = udir(rng);
    for (int i = 0; i < len; ++i) {
      int cx = x + i * dx4[d], cy = y + i * dy4[d];
      if (cx >= 0 && cx < cfg.geom.width && cy >= 0 && cy < cfg.geom.height)
        px.emplace_back(cx, cy);
    }
  }
  return px;
}

}  // namespace detail

// Deterministic for a fixed seed. Ground truth every 10 ms; during occlusion
// windows the object emits nothing but stays annotated.
inline std::pair<std::vector<Event>, AnnotationTrack> synthesize_sequence(
    const SynthConfig& cfg, std::int64_t duration_us) {
  if (duration_us <= 0) throw DataError("synth duration must be positive");
  if (cfg.object_w < 1 || cfg.object_h < 1)
    throw DataError("zero-area synthetic object");
  if (cfg.event_rate < 0 || cfg.clutter_density < 0)
    throw DataError("synth rates must be non-negative");

  std::mt19937_64 rng(cfg.seed);
  const auto obj_px = detail::object_mask(cfg);
  const auto bg_px = detail::clutter_mask(cfg, rng);

  constexpr std::int64_t kStepUs = 1000;  // 1 ms simulation step
  const double dt = kStepUs * 1e-6;
  std::poisson_distribution<int> pois(cfg.event_rate * dt);
  std::uniform_int_distribution<std::int64_t> jitter(0, kStepUs - 1);
  std::bernoulli_distribution coin(0.5);

  std::vector<Event> events;
  std::vector<Event> step_events;
  for (std::int64_t t0 = 0; t0 < duration_us; t0 += kStepUs) {
    step_events.clear();
    const double ts = t0 * 1e-6;
    const double ox = cfg.object_x0 + cfg.object_vx * ts;
    const double oy = cfg.object_y0 + cfg.object_vy * ts;
    const double bx = cfg.drift_vx * ts;
    const double by = cfg.drift_vy * ts;
    const bool obj_hidden = detail::occluded(cfg, t0);

    auto emit = [&](int x, int y) {
      if (x < 0 || x >= cfg.geom.width || y < 0 || y >= cfg.geom.height) return;
      int n = pois(rng);
      for (int i = 0; i < n; ++i)
        step_events.push_back(Event{t0 + jitter(rng), x, y, coin(rng) ? 1 : 0});
    };
    if (!obj_hidden) {
      const int ix = static_cast<int>(std::lround(ox));
      const int iy = static_cast<int>(std::lround(oy));
      for (auto [dx, dy] : obj_px) emit(ix + dx, iy + dy);
    }
    const int ibx = static_cast<int>(std::lround(bx));
    const int iby = static_cast<int>(std::lround(by));
    for (auto [x, y] : bg_px) emit(x + ibx, y + iby);

    std::sort(step_events.begin(), step_events.end(),
              [](const Event& a, const Event& b) {
                return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
              });
    events.insert(events.end(), step_events.begin(), step_events.end());
  }

  AnnotationTrack track;
  constexpr std::int64_t kAnnotUs = 10000;
  for (std::int64_t t0 = 0; t0 + kAnnotUs <= duration_us; t0 += kAnnotUs) {
    const double tm = (t0 + kAnnotUs / 2) * 1e-6;
    Roi r;
    r.x = static_cast<int>(std::lround(cfg.object_x0 + cfg.object_vx * tm));
    r.y = static_cast<int>(std::lround(cfg.object_y0 + cfg.object_vy * tm));
    r.w = cfg.object_w;
    r.h = cfg.object_h;
    r.x = std::clamp(r.x, 0, cfg.geom.width - r.w);
    r.y = std::clamp(r.y, 0, cfg.geom.height - r.h);
    track.entries.push_back({t0, t0 + kAnnotUs, r});
  }
  return {std::move(events), std::move(track)};
}

// Flat key=value text file covering all SynthConfig fields.
inline SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synth config: " + path);
  SynthConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed config line " + std::to_string(line_no));
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    try {
      if (key == "sensor_width") cfg.geom.width = std::stoi(val);
      else if (key == "sensor_height") cfg.geom.height = std::stoi(val);
      else if (key == "object_w") cfg.object_w = std::stoi(val);
      else if (key == "object_h") cfg.object_h = std::stoi(val);
      else if (key == "object_x0") cfg.object_x0 = std::stod(val);
      else if (key == "object_y0") cfg.object_y0 = std::stod(val);
      else if (key == "texture_spacing") cfg.texture_spacing = std::stoi(val);
      else if (key == "object_vx") cfg.object_vx = std::stod(val);
      else if (key == "object_vy") cfg.object_vy = std::stod(val);
      else if (key == "clutter_density") cfg.clutter_density = std::stod(val);
      else if (key == "drift_vx") cfg.drift_vx = std::stod(val);
      else if (key == "drift_vy") cfg.drift_vy = std::stod(val);
      else if (key == "event_rate") cfg.event_rate = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "occlusion") {
        auto dash = val.find('-');
        if (dash == std::string::npos) throw DataError("occlusion needs t0-t1");
        cfg.occlusions.push_back(
            {std::stoll(val.substr(0, dash)), std::stoll(val.substr(dash + 1))});
      } else {
        throw DataError("unknown synth config key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw DataError("bad value at config line " + std::to_string(line_no));
    }
  }
  std::sort(cfg.occlusions.begin(), cfg.occlusions.end(),
            [](const OcclusionWindow& a, const OcclusionWindow& b) {
              return a.t_start < b.t_start;
            });
  return cfg;
}

}  // namespace etld
