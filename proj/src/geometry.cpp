#include "geoevo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace geoevo {

namespace {

constexpr double kDegenerateEps = 1e-9;

void fail(const std::string& what) { throw DiagramError(what); }

void require_keys(const nlohmann::json& obj,
                  const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      fail("unknown key '" + it.key() + "' in " + where);
  }
}

ConstraintKind constraint_kind_from(const std::string& s) {
  if (s == "perpendicular") return ConstraintKind::Perpendicular;
  if (s == "parallel") return ConstraintKind::Parallel;
  if (s == "equal-length") return ConstraintKind::EqualLength;
  if (s == "point-on") return ConstraintKind::PointOn;
  if (s == "midpoint-of") return ConstraintKind::MidpointOf;
  if (s == "tangent") return ConstraintKind::Tangent;
  fail("unknown constraint kind '" + s + "'");
  return ConstraintKind::Perpendicular;
}

PrimitiveKind primitive_kind_from(const std::string& s) {
  if (s == "segment") return PrimitiveKind::Segment;
  if (s == "ray") return PrimitiveKind::Ray;
  if (s == "circle") return PrimitiveKind::Circle;
  fail("unknown primitive kind '" + s + "'");
  return PrimitiveKind::Segment;
}

void validate_primitive(const Diagram& d, const Primitive& p) {
  for (const auto& a : p.args)
    if (!d.has_point(a)) fail("dangling reference to point '" + a + "'");
  switch (p.kind) {
    case PrimitiveKind::Segment:
    case PrimitiveKind::Ray:
      if (p.args.size() != 2)
        fail(std::string(to_string(p.kind)) + " needs 2 endpoints");
      if (p.args[0] == p.args[1])
        fail("segment endpoints must be distinct: " + p.args[0]);
      break;
    case PrimitiveKind::Circle:
      if (p.args.size() != 1) fail("circle needs exactly the center label");
      if (!(p.radius > 0.0)) fail("circle radius must be > 0");
      break;
  }
}

void validate_constraint(const Diagram& d, const ConstraintTag& c) {
  for (const auto& a : c.args)
    if (!d.has_point(a)) fail("dangling reference to point '" + a + "'");
  const size_t n = c.args.size();
  switch (c.kind) {
    case ConstraintKind::Perpendicular:
    case ConstraintKind::Parallel:
    case ConstraintKind::EqualLength:
      if (n != 4) fail(std::string(to_string(c.kind)) + " needs 4 labels");
      break;
    case ConstraintKind::PointOn:
      if (n != 2 && n != 3) fail("point-on needs 2 (circle) or 3 (line) labels");
      if (n == 2 && !d.find_circle(c.args[1]))
        fail("point-on: no circle centered at '" + c.args[1] + "'");
      break;
    case ConstraintKind::MidpointOf:
      if (n != 3) fail("midpoint-of needs 3 labels");
      break;
    case ConstraintKind::Tangent:
      if (n != 3) fail("tangent needs 3 labels");
      if (!d.find_circle(c.args[0]))
        fail("tangent: no circle centered at '" + c.args[0] + "'");
      break;
  }
}

std::string constraint_detail(const ConstraintTag& c) {
  const auto& a = c.args;
  switch (c.kind) {
    case ConstraintKind::Perpendicular:
      return a[0] + a[1] + " perp " + a[2] + a[3];
    case ConstraintKind::Parallel:
      return a[0] + a[1] + " para " + a[2] + a[3];
    case ConstraintKind::EqualLength:
      return a[0] + a[1] + " = " + a[2] + a[3];
    case ConstraintKind::PointOn:
      return a.size() == 2 ? a[0] + " on circle " + a[1]
                           : a[0] + " on " + a[1] + a[2];
    case ConstraintKind::MidpointOf:
      return a[0] + " midpoint of " + a[1] + a[2];
    case ConstraintKind::Tangent:
      return a[1] + a[2] + " tangent to circle " + a[0];
  }
  return {};
}

double constraint_residual(const Diagram& d, const ConstraintTag& c) {
  const auto& a = c.args;
  switch (c.kind) {
    case ConstraintKind::Perpendicular: {
      const Vec2 u = d.at(a[1]) - d.at(a[0]);
      const Vec2 v = d.at(a[3]) - d.at(a[2]);
      const double nn = u.norm() * v.norm();
      if (nn < kDegenerateEps * kDegenerateEps)
        return std::numeric_limits<double>::infinity();
      return std::fabs(u.dot(v)) / nn;
    }
    case ConstraintKind::Parallel: {
      const Vec2 u = d.at(a[1]) - d.at(a[0]);
      const Vec2 v = d.at(a[3]) - d.at(a[2]);
      const double nn = u.norm() * v.norm();
      if (nn < kDegenerateEps * kDegenerateEps)
        return std::numeric_limits<double>::infinity();
      return std::fabs(cross2(u, v)) / nn;
    }
    case ConstraintKind::EqualLength: {
      const double l1 = (d.at(a[1]) - d.at(a[0])).norm();
      const double l2 = (d.at(a[3]) - d.at(a[2])).norm();
      return std::fabs(l1 - l2);
    }
    case ConstraintKind::PointOn: {
      if (a.size() == 2) {
        const Primitive* c2 = d.find_circle(a[1]);
        if (!c2) return std::numeric_limits<double>::infinity();
        return std::fabs((d.at(a[0]) - d.at(a[1])).norm() - c2->radius);
      }
      return point_line_distance(d.at(a[0]), d.at(a[1]), d.at(a[2]));
    }
    case ConstraintKind::MidpointOf:
      return (d.at(a[0]) - 0.5 * (d.at(a[1]) + d.at(a[2]))).norm();
    case ConstraintKind::Tangent: {
      const Primitive* c2 = d.find_circle(a[0]);
      if (!c2) return std::numeric_limits<double>::infinity();
      return std::fabs(point_line_distance(d.at(a[0]), d.at(a[1]), d.at(a[2])) -
                       c2->radius);
    }
  }
  return std::numeric_limits<double>::infinity();
}

void check_new_label(const Diagram& d, const std::string& label) {
  if (label.empty()) fail("auxiliary command needs a new point label");
  if (d.has_point(label)) fail("label collision: '" + label + "' already used");
}

}  // namespace

const Point* Diagram::find_point(const std::string& label) const {
  for (const auto& p : points)
    if (p.label == label) return &p;
  return nullptr;
}

bool Diagram::has_point(const std::string& label) const {
  return find_point(label) != nullptr;
}

Vec2 Diagram::at(const std::string& label) const {
  const Point* p = find_point(label);
  if (!p) fail("dangling reference to point '" + label + "'");
  return p->pos;
}

bool Diagram::has_segment(const std::string& a, const std::string& b) const {
  for (const auto& p : primitives) {
    if (p.kind != PrimitiveKind::Segment) continue;
    if ((p.args[0] == a && p.args[1] == b) ||
        (p.args[0] == b && p.args[1] == a))
      return true;
  }
  return false;
}

const Primitive* Diagram::find_circle(const std::string& center) const {
  for (const auto& p : primitives)
    if (p.kind == PrimitiveKind::Circle && p.args[0] == center) return &p;
  return nullptr;
}

int Diagram::auxiliary_count() const {
  int n = 0;
  for (const auto& p : primitives) n += p.is_auxiliary ? 1 : 0;
  return n;
}

double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

double point_line_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  if (len < kDegenerateEps) fail("point-line distance: zero-length line");
  return std::fabs(cross2(ab, p - a)) / len;
}

Vec2 perpendicular_foot(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < kDegenerateEps * kDegenerateEps)
    fail("perpendicular foot onto zero-length segment");
  const double t = (p - a).dot(ab) / len2;
  return a + t * ab;
}

double angle_deg(const Vec2& a, const Vec2& vertex, const Vec2& c) {
  const Vec2 u = a - vertex;
  const Vec2 v = c - vertex;
  const double nn = u.norm() * v.norm();
  if (nn < kDegenerateEps * kDegenerateEps)
    fail("degenerate angle query at coincident points");
  const double cos_t = std::clamp(u.dot(v) / nn, -1.0, 1.0);
  return std::acos(cos_t) * 180.0 / M_PI;
}

double direction_angle_deg(const Vec2& u, const Vec2& v) {
  const double nn = u.norm() * v.norm();
  if (nn < kDegenerateEps * kDegenerateEps)
    fail("degenerate direction angle");
  const double cos_t = std::clamp(std::fabs(u.dot(v)) / nn, 0.0, 1.0);
  return std::acos(cos_t) * 180.0 / M_PI;
}

double polygon_area(const std::vector<Vec2>& vertices) {
  if (vertices.size() < 3) fail("polygon area needs at least 3 vertices");
  double twice = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) {
    const Vec2& p = vertices[i];
    const Vec2& q = vertices[(i + 1) % vertices.size()];
    twice += cross2(p, q);
  }
  return std::fabs(twice) * 0.5;
}

Diagram build_diagram(const nlohmann::json& spec, int provenance) {
  if (!spec.is_object()) fail("diagram spec must be a JSON object");
  require_keys(spec, {"points", "primitives", "constraints"}, "diagram spec");

  Diagram d;
  d.provenance = provenance;

  for (const auto& jp : spec.value("points", nlohmann::json::array())) {
    require_keys(jp, {"label", "x", "y"}, "point");
    Point p;
    p.label = jp.at("label").get<std::string>();
    p.pos = Vec2(jp.at("x").get<double>(), jp.at("y").get<double>());
    if (p.label.empty()) fail("empty point label");
    if (!std::isfinite(p.pos.x()) || !std::isfinite(p.pos.y()))
      fail("non-finite coordinates for point '" + p.label + "'");
    if (d.has_point(p.label)) fail("duplicate label '" + p.label + "'");
    d.points.push_back(std::move(p));
  }

  for (const auto& jp : spec.value("primitives", nlohmann::json::array())) {
    require_keys(jp, {"kind", "args", "aux", "radius"}, "primitive");
    Primitive p;
    p.kind = primitive_kind_from(jp.at("kind").get<std::string>());
    p.args = jp.at("args").get<std::vector<std::string>>();
    p.is_auxiliary = jp.value("aux", false);
    if (jp.contains("radius")) {
      if (p.kind != PrimitiveKind::Circle)
        fail("radius is only valid on circles");
      p.radius = jp.at("radius").get<double>();
    }
    validate_primitive(d, p);
    d.primitives.push_back(std::move(p));
  }

  for (const auto& jc : spec.value("constraints", nlohmann::json::array())) {
    require_keys(jc, {"kind", "args"}, "constraint");
    ConstraintTag c;
    c.kind = constraint_kind_from(jc.at("kind").get<std::string>());
    c.args = jc.at("args").get<std::vector<std::string>>();
    validate_constraint(d, c);
    d.constraints.push_back(std::move(c));
  }

  const ResidualReport report = check_constraints(d);
  if (!report.pass) {
    std::string worst;
    for (const auto& r : report.residuals)
      if (r.residual == report.max_residual) worst = r.detail;
    std::ostringstream msg;
    msg << "constraint violation: " << worst << " (residual "
        << report.max_residual << ")";
    fail(msg.str());
  }
  return d;
}

nlohmann::json to_spec_json(const Diagram& d) {
  nlohmann::json spec;
  spec["points"] = nlohmann::json::array();
  for (const auto& p : d.points)
    spec["points"].push_back({{"label", p.label}, {"x", p.pos.x()}, {"y", p.pos.y()}});
  spec["primitives"] = nlohmann::json::array();
  for (const auto& p : d.primitives) {
    nlohmann::json jp = {{"kind", to_string(p.kind)}, {"args", p.args}};
    if (p.kind == PrimitiveKind::Circle) jp["radius"] = p.radius;
    if (p.is_auxiliary) jp["aux"] = true;
    spec["primitives"].push_back(std::move(jp));
  }
  spec["constraints"] = nlohmann::json::array();
  for (const auto& c : d.constraints)
    spec["constraints"].push_back({{"kind", to_string(c.kind)}, {"args", c.args}});
  return spec;
}

Diagram apply_auxiliary(const Diagram& d, const AuxiliaryCommand& cmd) {
  for (const auto& a : cmd.args)
    if (!d.has_point(a)) fail("dangling reference to point '" + a + "'");

  Diagram out = d;
  const auto& a = cmd.args;

  auto add_aux_segment = [&out](const std::string& p, const std::string& q) {
    Primitive s;
    s.kind = PrimitiveKind::Segment;
    s.args = {p, q};
    s.is_auxiliary = true;
    out.primitives.push_back(std::move(s));
  };

  switch (cmd.kind) {
    case AuxiliaryKind::Connect: {
      if (a.size() != 2) fail("connect needs 2 labels");
      if (a[0] == a[1]) fail("connect endpoints must be distinct");
      if (d.has_segment(a[0], a[1]))
        fail("duplicate primitive: segment " + a[0] + a[1] + " already exists");
      add_aux_segment(a[0], a[1]);
      break;
    }
    case AuxiliaryKind::PerpendicularFoot: {
      if (a.size() != 3) fail("perpendicular-foot needs 3 labels");
      check_new_label(d, cmd.new_label);
      const Vec2 p = d.at(a[0]);
      const Vec2 foot = perpendicular_foot(p, d.at(a[1]), d.at(a[2]));
      if ((p - foot).norm() < kDegenerateEps)
        fail("degenerate: point '" + a[0] + "' already lies on line " + a[1] +
             a[2]);
      out.points.push_back({cmd.new_label, foot});
      add_aux_segment(a[0], cmd.new_label);
      out.constraints.push_back(
          {ConstraintKind::Perpendicular, {a[0], cmd.new_label, a[1], a[2]}});
      out.constraints.push_back(
          {ConstraintKind::PointOn, {cmd.new_label, a[1], a[2]}});
      break;
    }
    case AuxiliaryKind::ParallelThrough: {
      if (a.size() != 3) fail("parallel-through needs 3 labels");
      check_new_label(d, cmd.new_label);
      const Vec2 p = d.at(a[0]);
      const Vec2 u = d.at(a[2]) - d.at(a[1]);
      if (u.norm() < kDegenerateEps)
        fail("parallel-through onto zero-length segment");
      if (point_line_distance(p, d.at(a[1]), d.at(a[2])) < kDegenerateEps)
        fail("degenerate: point '" + a[0] + "' already lies on line " + a[1] +
             a[2]);
      out.points.push_back({cmd.new_label, p + u});
      add_aux_segment(a[0], cmd.new_label);
      out.constraints.push_back(
          {ConstraintKind::Parallel, {a[0], cmd.new_label, a[1], a[2]}});
      break;
    }
    case AuxiliaryKind::Midpoint: {
      if (a.size() != 2) fail("midpoint needs 2 labels");
      if (a[0] == a[1]) fail("midpoint endpoints must be distinct");
      check_new_label(d, cmd.new_label);
      const Vec2 m = 0.5 * (d.at(a[0]) + d.at(a[1]));
      out.points.push_back({cmd.new_label, m});
      add_aux_segment(a[0], cmd.new_label);  // marks the half being named
      out.constraints.push_back(
          {ConstraintKind::MidpointOf, {cmd.new_label, a[0], a[1]}});
      break;
    }
    case AuxiliaryKind::ExtendToIntersection: {
      if (a.size() != 4) fail("extend-to-intersection needs 4 labels");
      check_new_label(d, cmd.new_label);
      const Vec2 p = d.at(a[0]), q = d.at(a[1]);
      const Vec2 r = d.at(a[2]), s = d.at(a[3]);
      const Vec2 u = q - p, v = s - r;
      const double denom = cross2(u, v);
      if (std::fabs(denom) < kDegenerateEps)
        fail("degenerate: lines " + a[0] + a[1] + " and " + a[2] + a[3] +
             " are parallel");
      const double t = cross2(r - p, v) / denom;
      const Vec2 x = p + t * u;
      for (const auto& lbl : a)
        if ((x - d.at(lbl)).norm() < kDegenerateEps)
          fail("degenerate: intersection coincides with point '" + lbl + "'");
      out.points.push_back({cmd.new_label, x});
      add_aux_segment(a[1], cmd.new_label);
      out.constraints.push_back(
          {ConstraintKind::PointOn, {cmd.new_label, a[0], a[1]}});
      out.constraints.push_back(
          {ConstraintKind::PointOn, {cmd.new_label, a[2], a[3]}});
      break;
    }
  }
  return out;
}

double measure(const Diagram& d, const MeasurementQuery& q) {
  const auto& a = q.args;
  for (const auto& lbl : a)
    if (!d.has_point(lbl)) fail("dangling reference to point '" + lbl + "'");
  switch (q.kind) {
    case MeasureKind::Distance:
      if (a.size() != 2) fail("distance needs 2 labels");
      return (d.at(a[0]) - d.at(a[1])).norm();
    case MeasureKind::Angle:
      if (a.size() != 3) fail("angle needs 3 labels");
      return angle_deg(d.at(a[0]), d.at(a[1]), d.at(a[2]));
    case MeasureKind::PolygonArea: {
      if (a.size() < 3) fail("polygon-area needs at least 3 labels");
      std::vector<Vec2> vs;
      vs.reserve(a.size());
      for (const auto& lbl : a) vs.push_back(d.at(lbl));
      return polygon_area(vs);
    }
    case MeasureKind::CircleArcLength: {
      if (a.size() != 3) fail("circle-arc-length needs 3 labels");
      const Primitive* c = d.find_circle(a[0]);
      if (!c) fail("no circle centered at '" + a[0] + "'");
      const Vec2 o = d.at(a[0]);
      const double deg = angle_deg(d.at(a[1]), o, d.at(a[2]));
      return c->radius * deg * M_PI / 180.0;
    }
    case MeasureKind::Perimeter: {
      if (a.size() < 3) fail("perimeter needs at least 3 labels");
      double sum = 0.0;
      for (size_t i = 0; i < a.size(); ++i)
        sum += (d.at(a[i]) - d.at(a[(i + 1) % a.size()])).norm();
      return sum;
    }
  }
  fail("unknown measurement kind");
  return 0.0;
}

ResidualReport check_constraints(const Diagram& d) {
  ResidualReport report;
  for (const auto& c : d.constraints) {
    ConstraintResidual r;
    r.tag = c;
    r.residual = constraint_residual(d, c);
    r.detail = constraint_detail(c);
    report.max_residual = std::max(report.max_residual, r.residual);
    report.residuals.push_back(std::move(r));
  }
  report.pass = report.max_residual <= report.tolerance;
  return report;
}

Diagram transformed(const Diagram& d, double angle_rad, const Vec2& translation) {
  const Eigen::Rotation2Dd rot(angle_rad);
  Diagram out = d;
  for (auto& p : out.points) p.pos = rot * p.pos + translation;
  return out;
}

std::string fresh_label(const Diagram& d) {
  static const char* alphabet = "DEFGHIJKLMNPQRSTUVWXYZABC";
  for (const char* c = alphabet; *c; ++c) {
    std::string lbl(1, *c);
    if (!d.has_point(lbl)) return lbl;
  }
  for (int i = 1;; ++i) {
    for (const char* c = alphabet; *c; ++c) {
      std::string lbl = std::string(1, *c) + std::to_string(i);
      if (!d.has_point(lbl)) return lbl;
    }
  }
}

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Perpendicular: return "perpendicular";
    case ConstraintKind::Parallel: return "parallel";
    case ConstraintKind::EqualLength: return "equal-length";
    case ConstraintKind::PointOn: return "point-on";
    case ConstraintKind::MidpointOf: return "midpoint-of";
    case ConstraintKind::Tangent: return "tangent";
  }
  return "?";
}

const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Segment: return "segment";
    case PrimitiveKind::Ray: return "ray";
    case PrimitiveKind::Circle: return "circle";
  }
  return "?";
}

const char* to_string(AuxiliaryKind k) {
  switch (k) {
    case AuxiliaryKind::Connect: return "connect";
    case AuxiliaryKind::PerpendicularFoot: return "perpendicular-foot";
    case AuxiliaryKind::ParallelThrough: return "parallel-through";
    case AuxiliaryKind::Midpoint: return "midpoint";
    case AuxiliaryKind::ExtendToIntersection: return "extend-to-intersection";
  }
  return "?";
}

const char* to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::Distance: return "distance";
    case MeasureKind::Angle: return "angle";
    case MeasureKind::PolygonArea: return "polygon-area";
    case MeasureKind::CircleArcLength: return "circle-arc-length";
    case MeasureKind::Perimeter: return "perimeter";
  }
  return "?";
}

}  // namespace geoevo
