#include "geoevo/formal.hpp"

#include <cmath>

#include "geoevo/numeric.hpp"

namespace geoevo {

namespace {

ConstraintKind to_constraint_kind(FactKind k) {
  switch (k) {
    case FactKind::Perpendicular: return ConstraintKind::Perpendicular;
    case FactKind::Parallel: return ConstraintKind::Parallel;
    case FactKind::EqualLength: return ConstraintKind::EqualLength;
    case FactKind::PointOnLine:
    case FactKind::PointOnCircle: return ConstraintKind::PointOn;
    case FactKind::MidpointOf: return ConstraintKind::MidpointOf;
    case FactKind::Tangent: return ConstraintKind::Tangent;
    default: throw DiagramError("fact has no constraint counterpart");
  }
}

FactKind from_constraint(const ConstraintTag& c) {
  switch (c.kind) {
    case ConstraintKind::Perpendicular: return FactKind::Perpendicular;
    case ConstraintKind::Parallel: return FactKind::Parallel;
    case ConstraintKind::EqualLength: return FactKind::EqualLength;
    case ConstraintKind::PointOn:
      return c.args.size() == 2 ? FactKind::PointOnCircle
                                : FactKind::PointOnLine;
    case ConstraintKind::MidpointOf: return FactKind::MidpointOf;
    case ConstraintKind::Tangent: return FactKind::Tangent;
  }
  throw DiagramError("unknown constraint kind");
}

}  // namespace

std::string Fact::text() const {
  const auto& a = args;
  switch (kind) {
    case FactKind::SegmentLength:
      return a[0] + a[1] + " = " + canonical_number(value.value_or(0.0));
    case FactKind::Ray:
      return "ray from " + a[0] + " through " + a[1];
    case FactKind::CircleRadius:
      return "circle centered " + a[0] + " has radius " +
             canonical_number(value.value_or(0.0));
    case FactKind::Perpendicular:
      return a[0] + a[1] + " is perpendicular to " + a[2] + a[3];
    case FactKind::Parallel:
      return a[0] + a[1] + " is parallel to " + a[2] + a[3];
    case FactKind::EqualLength:
      return a[0] + a[1] + " = " + a[2] + a[3];
    case FactKind::PointOnLine:
      return a[0] + " lies on " + a[1] + a[2];
    case FactKind::PointOnCircle:
      return a[0] + " lies on the circle centered " + a[1];
    case FactKind::MidpointOf:
      return a[0] + " is the midpoint of " + a[1] + a[2];
    case FactKind::Tangent:
      return a[1] + a[2] + " is tangent to the circle centered " + a[0];
  }
  return {};
}

std::string FormalDescription::to_text() const {
  std::string out;
  for (size_t i = 0; i < facts.size(); ++i) {
    if (i) out += "; ";
    out += facts[i].text();
  }
  return out;
}

FormalDescription emit_formal_description(const Diagram& d,
                                          const std::string& diagram_id) {
  FormalDescription f;
  f.diagram_id = diagram_id;
  for (const auto& p : d.primitives) {
    Fact fact;
    switch (p.kind) {
      case PrimitiveKind::Segment:
        fact.kind = FactKind::SegmentLength;
        fact.args = p.args;
        fact.value = (d.at(p.args[0]) - d.at(p.args[1])).norm();
        break;
      case PrimitiveKind::Ray:
        fact.kind = FactKind::Ray;
        fact.args = p.args;
        break;
      case PrimitiveKind::Circle:
        fact.kind = FactKind::CircleRadius;
        fact.args = p.args;
        fact.value = p.radius;
        break;
    }
    f.facts.push_back(std::move(fact));
  }
  for (const auto& c : d.constraints) {
    Fact fact;
    fact.kind = from_constraint(c);
    fact.args = c.args;
    if (c.kind == ConstraintKind::EqualLength)
      fact.value = (d.at(c.args[0]) - d.at(c.args[1])).norm();
    f.facts.push_back(std::move(fact));
  }
  return f;
}

bool fact_holds(const Diagram& d, const Fact& f, double tol) {
  for (const auto& a : f.args)
    if (!d.has_point(a)) return false;
  switch (f.kind) {
    case FactKind::SegmentLength: {
      if (f.args.size() != 2 || !f.value) return false;
      const double len = (d.at(f.args[0]) - d.at(f.args[1])).norm();
      return std::fabs(len - *f.value) <= tol;
    }
    case FactKind::Ray:
      return f.args.size() == 2;
    case FactKind::CircleRadius: {
      const Primitive* c = d.find_circle(f.args[0]);
      return c && f.value && std::fabs(c->radius - *f.value) <= tol;
    }
    default: {
      Diagram probe = d;
      probe.constraints = {{to_constraint_kind(f.kind), f.args}};
      const ResidualReport r = check_constraints(probe);
      return r.max_residual <= tol;
    }
  }
}

const char* to_string(FactKind k) {
  switch (k) {
    case FactKind::SegmentLength: return "segment-length";
    case FactKind::Ray: return "ray";
    case FactKind::CircleRadius: return "circle-radius";
    case FactKind::Perpendicular: return "perpendicular";
    case FactKind::Parallel: return "parallel";
    case FactKind::EqualLength: return "equal-length";
    case FactKind::PointOnLine: return "point-on-line";
    case FactKind::PointOnCircle: return "point-on-circle";
    case FactKind::MidpointOf: return "midpoint-of";
    case FactKind::Tangent: return "tangent";
  }
  return "?";
}

}  // namespace geoevo
