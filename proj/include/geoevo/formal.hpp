#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoevo/geometry.hpp"

namespace geoevo {

enum class FactKind {
  SegmentLength,  // args [A,B], value |AB|
  Ray,            // args [A,B]
  CircleRadius,   // args [O], value r
  Perpendicular,  // args [A,B,C,D]
  Parallel,       // args [A,B,C,D]
  EqualLength,    // args [A,B,C,D]
  PointOnLine,    // args [P,A,B]
  PointOnCircle,  // args [P,O]
  MidpointOf,     // args [M,A,B]
  Tangent         // args [O,A,B]
};

struct Fact {
  FactKind kind = FactKind::SegmentLength;
  std::vector<std::string> args;
  std::optional<double> value;

  std::string text() const;  // human-readable form, e.g. "AB = 4"
};

struct FormalDescription {
  std::string diagram_id;
  std::vector<Fact> facts;

  std::string to_text() const;  // facts joined as one prompt-ready block
};

// Exact, deterministic fact list: one fact per primitive and one per
// constraint, in diagram order. Every fact holds numerically in `d`.
FormalDescription emit_formal_description(const Diagram& d,
                                          const std::string& diagram_id = "");

// Numeric truth of a single fact against a diagram (via measure /
// check_constraints machinery), within `tol`.
bool fact_holds(const Diagram& d, const Fact& f,
                double tol = kConstraintTolerance);

const char* to_string(FactKind k);

}  // namespace geoevo
