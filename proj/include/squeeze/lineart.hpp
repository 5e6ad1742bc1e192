#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/curves.hpp"
#include "squeeze/liquid_sim.hpp"
#include "squeeze/pipeline.hpp"
#include "squeeze/stroke_eval.hpp"

namespace squeeze::lineart {

struct Polyline {
  std::string liquid;
  double thickness_mm = 10.0;
  std::vector<std::array<double, 2>> points_cm;
  double arclength_cm = 0.0;

  std::array<double, 2> point_at_arclength(double s) const;
};

struct Drawing {
  std::vector<Polyline> polylines;
  int collapsed_duplicate_points = 0;
};

// JSON schema: {"polylines":[{"liquid":"id","thickness_mm":x,"points":[[x,y],...]}]}
Drawing parse_drawing(const std::string& json_text);
Drawing load_drawing(const std::filesystem::path& file);

struct LiquidCurves {
  curves::Curve flow;
  curves::Curve stacking;
};

// One squeeze cycle per stroke; polylines longer than a cycle's drawable
// arclength are split at the budget boundary and continued in a fresh cycle.
struct StrokePlan {
  int polyline_index = 0;
  int cycle_index = 0;             // global squeeze-cycle counter
  double squeeze_start_s = 0.0;    // absolute timeline
  double window_start_s = 0.0;     // within the squeeze
  double window_end_s = 0.0;
  double arclength_start_cm = 0.0;  // along the polyline
  double arclength_end_cm = 0.0;
  pipeline::SpeedProfile profile;
  struct Waypoint {
    double t_s;  // within the squeeze
    std::array<double, 2> p_cm;
    double v_cm_s;
  };
  std::vector<Waypoint> waypoints;  // includes polyline vertices
};

struct Trajectory {
  std::vector<StrokePlan> strokes;
};

Trajectory plan_trajectory(const Drawing& drawing,
                           const std::map<std::string, LiquidCurves>& curves_by_liquid,
                           const Config& cfg);

struct RenderedStroke {
  int polyline_index = 0;
  stroke_eval::StrokeResult stroke;
};

struct RenderResult {
  std::string svg;
  std::vector<RenderedStroke> strokes;
  int path_count = 0;  // variable-width cell runs emitted
};

// Executes every stroke against simulator truth and emits variable-width SVG
// paths (one per constant-width cell run), one group per liquid, plus the
// target drawing overlay.
RenderResult render_result(const Trajectory& trajectory, const Drawing& drawing,
                           const std::map<std::string, sim::LiquidSpec>& liquids,
                           double fill_ml, std::int64_t seed, const Config& cfg);

}  // namespace squeeze::lineart
