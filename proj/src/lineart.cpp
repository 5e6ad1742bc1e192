#include "squeeze/lineart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/rng.hpp"

namespace squeeze::lineart {

namespace {

constexpr std::uint64_t kDrawStream = 0x44524157ull;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

double segment_length(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(b[0] - a[0], b[1] - a[1]);
}

}  // namespace

std::array<double, 2> Polyline::point_at_arclength(double s) const {
  if (points_cm.size() < 2) throw std::logic_error("point_at_arclength: degenerate polyline");
  if (s <= 0.0) return points_cm.front();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < points_cm.size(); ++i) {
    const double len = segment_length(points_cm[i], points_cm[i + 1]);
    if (s <= acc + len || i + 2 == points_cm.size()) {
      const double u = len > 0.0 ? std::min(1.0, (s - acc) / len) : 0.0;
      return {points_cm[i][0] + u * (points_cm[i + 1][0] - points_cm[i][0]),
              points_cm[i][1] + u * (points_cm[i + 1][1] - points_cm[i][1])};
    }
    acc += len;
  }
  return points_cm.back();
}

Drawing parse_drawing(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("drawing: malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("polylines") || !j.at("polylines").is_array())
    throw std::runtime_error("drawing: expected an object with a 'polylines' array");

  Drawing d;
  for (const auto& pj : j.at("polylines")) {
    Polyline p;
    if (!pj.contains("liquid") || !pj.contains("thickness_mm") || !pj.contains("points"))
      throw std::runtime_error("drawing: polyline needs 'liquid', 'thickness_mm' and 'points'");
    p.liquid = pj.at("liquid").get<std::string>();
    p.thickness_mm = pj.at("thickness_mm").get<double>();
    if (!(p.thickness_mm >= 5.0 && p.thickness_mm <= 20.0))
      throw std::domain_error("drawing: thickness outside [5, 20] mm");
    for (const auto& pt : pj.at("points")) {
      if (!pt.is_array() || pt.size() != 2)
        throw std::runtime_error("drawing: points must be [x, y] pairs");
      std::array<double, 2> q{pt[0].get<double>(), pt[1].get<double>()};
      if (!p.points_cm.empty() && segment_length(p.points_cm.back(), q) < 1e-9) {
        ++d.collapsed_duplicate_points;  // degenerate input: collapse, warn via count
        continue;
      }
      p.points_cm.push_back(q);
    }
    if (p.points_cm.size() < 2)
      throw std::domain_error("drawing: polyline needs at least 2 distinct points");
    for (std::size_t i = 0; i + 1 < p.points_cm.size(); ++i)
      p.arclength_cm += segment_length(p.points_cm[i], p.points_cm[i + 1]);
    d.polylines.push_back(std::move(p));
  }
  if (d.polylines.empty()) throw std::domain_error("empty drawing");
  return d;
}

Drawing load_drawing(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("drawing: cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_drawing(ss.str());
}

Trajectory plan_trajectory(const Drawing& drawing,
                           const std::map<std::string, LiquidCurves>& curves_by_liquid,
                           const Config& cfg) {
  Trajectory traj;
  int cycle = 0;
  double timeline_s = 0.0;
  const double cycle_gap_s = 3.0;  // reposition between squeezes

  for (std::size_t pi = 0; pi < drawing.polylines.size(); ++pi) {
    const auto& poly = drawing.polylines[pi];
    const auto it = curves_by_liquid.find(poly.liquid);
    if (it == curves_by_liquid.end())
      throw std::domain_error("plan_trajectory: no curves for liquid '" + poly.liquid + "'");

    double drawn = 0.0;
    while (drawn < poly.arclength_cm - 1e-9) {
      auto profile = pipeline::plan_speed_profile(
          it->second.flow, &it->second.stacking,
          pipeline::Target::thickness(poly.thickness_mm), cfg.draw_start_s,
          cfg.squeeze_total_s, cfg);

      // every sample pinned at the lower clamp means the liquid cannot reach
      // the target's volume-per-length at any legal speed
      if (profile.clamps.size() == profile.speeds_cm_s.size()) {
        bool all_low = true;
        for (const auto& c : profile.clamps)
          if (!(c.clamped_cm_s == cfg.speed_min_cm_s && c.raw_cm_s < cfg.speed_min_cm_s))
            all_low = false;
        if (all_low) throw std::domain_error("insufficient flow for target thickness");
      }

      StrokePlan stroke;
      stroke.polyline_index = static_cast<int>(pi);
      stroke.cycle_index = cycle++;
      stroke.squeeze_start_s = timeline_s;
      stroke.window_start_s = profile.t_start_s;
      stroke.arclength_start_cm = drawn;

      const double remaining = poly.arclength_cm - drawn;

      // vertex arclengths, for splitting steps at corners so consecutive
      // waypoints always lie on one straight segment
      std::vector<double> vertex_s;
      {
        double acc = 0.0;
        vertex_s.push_back(0.0);
        for (std::size_t i = 0; i + 1 < poly.points_cm.size(); ++i) {
          acc += std::hypot(poly.points_cm[i + 1][0] - poly.points_cm[i][0],
                            poly.points_cm[i + 1][1] - poly.points_cm[i][1]);
          vertex_s.push_back(acc);
        }
      }

      // walk the profile, cut the cycle when the remaining length is covered
      double s = drawn;
      double t_end = profile.t_end_s;
      std::vector<StrokePlan::Waypoint> wps;
      wps.push_back({profile.t_start_s, poly.point_at_arclength(s), profile.speeds_cm_s.front()});
      bool finished = false;
      for (std::size_t k = 0; k + 1 < profile.speeds_cm_s.size() && !finished; ++k) {
        const double t = profile.t_start_s + static_cast<double>(k) * profile.dt_s;
        const double v = profile.speeds_cm_s[k];
        double step = v * profile.dt_s;
        double t_next = t + profile.dt_s;
        if (s + step >= drawn + remaining - 1e-12) {
          const double f = step > 0.0 ? (drawn + remaining - s) / step : 1.0;
          step = drawn + remaining - s;
          t_next = t + f * profile.dt_s;
          finished = true;
        }
        const double s_next = s + step;
        for (double vs : vertex_s) {
          if (vs > s + 1e-12 && vs < s_next - 1e-12) {
            const double tv = t + (vs - s) / v;
            wps.push_back({tv, poly.point_at_arclength(vs), v});
          }
        }
        s = s_next;
        wps.push_back({t_next, poly.point_at_arclength(s), v});
        if (finished) t_end = t_next;
      }

      stroke.window_end_s = t_end;
      stroke.arclength_end_cm = s;
      stroke.profile = std::move(profile);
      stroke.profile.t_end_s = t_end;
      stroke.waypoints = std::move(wps);
      traj.strokes.push_back(std::move(stroke));

      if (!(s > drawn + 1e-9))
        throw std::domain_error("insufficient flow for target thickness");
      drawn = s;
      timeline_s += cfg.squeeze_total_s + cycle_gap_s;
    }
  }
  return traj;
}

RenderResult render_result(const Trajectory& trajectory, const Drawing& drawing,
                           const std::map<std::string, sim::LiquidSpec>& liquids,
                           double fill_ml, std::int64_t seed, const Config& cfg) {
  if (seed < 0) throw std::invalid_argument("render_result: seed must be non-negative");
  const auto squeeze = sim::SqueezeProfile::two_stage(cfg);

  RenderResult out;
  std::map<std::string, std::string> color_by_liquid;
  std::size_t palette_next = 0;

  // bounding box over the drawing, in mm, with margin
  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  for (const auto& p : drawing.polylines)
    for (const auto& q : p.points_cm) {
      min_x = std::min(min_x, q[0] * 10.0);
      max_x = std::max(max_x, q[0] * 10.0);
      min_y = std::min(min_y, q[1] * 10.0);
      max_y = std::max(max_y, q[1] * 10.0);
    }
  if (drawing.polylines.empty()) min_x = min_y = 0.0, max_x = max_y = 1.0;
  const double margin = 25.0;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\""
      << (min_x - margin) << " " << (min_y - margin) << " " << (max_x - min_x + 2 * margin)
      << " " << (max_y - min_y + 2 * margin) << "\">\n";

  // target overlay: intended geometry at the requested widths
  svg << "  <g id=\"target\" stroke=\"#cccccc\" fill=\"none\" stroke-linecap=\"round\" "
         "stroke-linejoin=\"round\">\n";
  for (const auto& p : drawing.polylines) {
    svg << "    <polyline stroke-width=\"" << p.thickness_mm << "\" points=\"";
    for (std::size_t i = 0; i < p.points_cm.size(); ++i) {
      if (i) svg << " ";
      svg << p.points_cm[i][0] * 10.0 << "," << p.points_cm[i][1] * 10.0;
    }
    svg << "\"/>\n";
  }
  svg << "  </g>\n";

  // rendered strokes grouped per liquid
  std::map<std::string, std::ostringstream> group_by_liquid;
  int path_count = 0;

  for (std::size_t si = 0; si < trajectory.strokes.size(); ++si) {
    const auto& stroke = trajectory.strokes[si];
    const auto& poly = drawing.polylines[static_cast<std::size_t>(stroke.polyline_index)];
    const auto lit = liquids.find(poly.liquid);
    if (lit == liquids.end())
      throw std::domain_error("render_result: unknown liquid '" + poly.liquid + "'");
    const auto& liquid = lit->second;
    if (!color_by_liquid.count(poly.liquid)) {
      color_by_liquid[poly.liquid] =
          kPalette[palette_next++ % (sizeof(kPalette) / sizeof(kPalette[0]))];
    }

    const sim::BottleState bottle{cfg.capacity_ml, fill_ml, cfg.bottle_tare_g};
    const auto dispense_seed = static_cast<std::int64_t>(
        seed_mix({static_cast<std::uint64_t>(seed), kDrawStream, si}) >> 1);
    const auto log = sim::simulate_dispense(liquid, bottle, squeeze, dispense_seed, cfg);

    const double length = stroke.arclength_end_cm - stroke.arclength_start_cm;
    RenderedStroke rendered;
    rendered.polyline_index = stroke.polyline_index;
    rendered.stroke.rho = stroke_eval::deposit(stroke.profile, log, length, cfg);
    const auto stacking_truth = sim::true_stacking_curve(liquid, cfg);
    rendered.stroke.thickness =
        stroke_eval::thickness_profile(rendered.stroke.rho, stacking_truth);
    rendered.stroke.metrics =
        stroke_eval::stroke_metrics(rendered.stroke.thickness, poly.thickness_mm, cfg);
    rendered.stroke.target_mm = poly.thickness_mm;

    // merge cells into constant-width runs (0.1 mm quantization)
    auto& g = group_by_liquid[poly.liquid];
    const auto& w = rendered.stroke.thickness.mm;
    const double ds = rendered.stroke.rho.ds_cm;
    std::size_t run_start = 0;
    while (run_start < w.size()) {
      std::size_t run_end = run_start + 1;
      const long q0 = std::lround(w[run_start] * 10.0);
      while (run_end < w.size() && std::lround(w[run_end] * 10.0) == q0) ++run_end;
      const double s0 = stroke.arclength_start_cm + static_cast<double>(run_start) * ds;
      const double s1 = stroke.arclength_start_cm + static_cast<double>(run_end) * ds;
      const auto p0 = poly.point_at_arclength(s0);
      const auto p1 = poly.point_at_arclength(std::min(s1, poly.arclength_cm));
      g << "    <path d=\"M " << p0[0] * 10.0 << " " << p0[1] * 10.0 << " L " << p1[0] * 10.0
        << " " << p1[1] * 10.0 << "\" stroke-width=\"" << static_cast<double>(q0) / 10.0
        << "\"/>\n";
      ++path_count;
      run_start = run_end;
    }
    out.strokes.push_back(std::move(rendered));
  }

  for (auto& [liquid, body] : group_by_liquid) {
    svg << "  <g id=\"liquid-" << liquid << "\" stroke=\"" << color_by_liquid[liquid]
        << "\" fill=\"none\" stroke-linecap=\"round\">\n";
    svg << body.str();
    svg << "  </g>\n";
  }
  svg << "</svg>\n";

  out.svg = svg.str();
  out.path_count = path_count;
  return out;
}

}  // namespace squeeze::lineart
