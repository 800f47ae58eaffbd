#pragma once

#include <Eigen/Dense>

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoevo {

using Vec2 = Eigen::Vector2d;

// Max normalized residual a diagram constraint may carry and still pass.
inline constexpr double kConstraintTolerance = 1e-6;

struct Point {
  std::string label;
  Vec2 pos{0.0, 0.0};
};

enum class PrimitiveKind { Segment, Ray, Circle };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Segment;
  std::vector<std::string> args;  // segment/ray: two endpoints; circle: center
  double radius = 0.0;            // circles only, > 0
  bool is_auxiliary = false;
};

enum class ConstraintKind {
  Perpendicular,  // [A,B,C,D]: AB perpendicular to CD
  Parallel,       // [A,B,C,D]: AB parallel to CD
  EqualLength,    // [A,B,C,D]: |AB| = |CD|
  PointOn,        // [P,A,B]: P on line AB, or [P,O]: P on circle centered O
  MidpointOf,     // [M,A,B]: M is the midpoint of AB
  Tangent         // [O,A,B]: circle centered O is tangent to line AB
};

struct ConstraintTag {
  ConstraintKind kind = ConstraintKind::Perpendicular;
  std::vector<std::string> args;
};

// Immutable value; every operation below returns a new diagram.
struct Diagram {
  std::vector<Point> points;
  std::vector<Primitive> primitives;
  std::vector<ConstraintTag> constraints;
  int provenance = 0;  // loop iteration the diagram was created in

  const Point* find_point(const std::string& label) const;
  bool has_point(const std::string& label) const;
  Vec2 at(const std::string& label) const;  // throws DiagramError if unknown
  bool has_segment(const std::string& a, const std::string& b) const;
  const Primitive* find_circle(const std::string& center) const;
  int auxiliary_count() const;
};

class DiagramError : public std::runtime_error {
 public:
  explicit DiagramError(const std::string& what) : std::runtime_error(what) {}
};

enum class AuxiliaryKind {
  Connect,              // [A,B]: auxiliary segment AB
  PerpendicularFoot,    // [P,A,B], new_label = foot of P on line AB
  ParallelThrough,      // [P,A,B], new_label = P + (B-A)
  Midpoint,             // [A,B], new_label = midpoint
  ExtendToIntersection  // [A,B,C,D], new_label = line AB meets line CD
};

struct AuxiliaryCommand {
  AuxiliaryKind kind = AuxiliaryKind::Connect;
  std::vector<std::string> args;
  std::string new_label;  // required by kinds that create a point
};

enum class MeasureKind {
  Distance,        // [A,B]
  Angle,           // [A,B,C]: angle at B, degrees in [0,180]
  PolygonArea,     // [>=3 labels], shoelace
  CircleArcLength, // [O,A,B]: radius of circle at O times angle AOB
  Perimeter        // [>=3 labels], closed polygon
};

struct MeasurementQuery {
  MeasureKind kind = MeasureKind::Distance;
  std::vector<std::string> args;
};

struct ConstraintResidual {
  ConstraintTag tag;
  double residual = 0.0;
  std::string detail;
};

struct ResidualReport {
  std::vector<ConstraintResidual> residuals;
  double max_residual = 0.0;
  double tolerance = kConstraintTolerance;
  bool pass = true;
};

// Builds a diagram from the declarative JSON spec
//   {"points":[{"label","x","y"}], "primitives":[{"kind","args","aux",("radius")}],
//    "constraints":[{"kind","args"}]}
// Unknown keys are rejected. Throws DiagramError on duplicate labels, dangling
// references, non-finite coordinates, or any constraint residual above
// kConstraintTolerance (the worst residual is reported).
Diagram build_diagram(const nlohmann::json& spec, int provenance = 0);

// Inverse of build_diagram for persisting diagrams inside sample records.
nlohmann::json to_spec_json(const Diagram& d);

// Returns a copy of `d` extended with the commanded auxiliary construction.
// New primitives/points are flagged is_auxiliary; `d` itself is untouched.
// Throws DiagramError on degenerate geometry or label collisions.
Diagram apply_auxiliary(const Diagram& d, const AuxiliaryCommand& cmd);

// Exact numeric oracle over coordinates. Angles are in degrees.
double measure(const Diagram& d, const MeasurementQuery& q);

// Per-constraint normalized residuals; pass iff max residual <= tolerance.
ResidualReport check_constraints(const Diagram& d);

// Rigid motion (rotation by angle_rad about the origin, then translation).
Diagram transformed(const Diagram& d, double angle_rad, const Vec2& translation);

// First label not used in `d`: single letters, then A1, B1, ...
std::string fresh_label(const Diagram& d);

// Expression-friendly helpers shared by the kernel, synthesis and tests.
double cross2(const Vec2& u, const Vec2& v);
double point_line_distance(const Vec2& p, const Vec2& a, const Vec2& b);
Vec2 perpendicular_foot(const Vec2& p, const Vec2& a, const Vec2& b);
double angle_deg(const Vec2& a, const Vec2& vertex, const Vec2& c);
double direction_angle_deg(const Vec2& u, const Vec2& v);
double polygon_area(const std::vector<Vec2>& vertices);

const char* to_string(ConstraintKind k);
const char* to_string(PrimitiveKind k);
const char* to_string(AuxiliaryKind k);
const char* to_string(MeasureKind k);

}  // namespace geoevo
