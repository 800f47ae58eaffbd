#include "geoevo/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "geoevo/numeric.hpp"
#include "geoevo/rng.hpp"

namespace geoevo {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::string dist_key(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return "dist:" + a + ":" + b;
}

std::string angle_key(std::string a, const std::string& vertex, std::string c) {
  if (c < a) std::swap(a, c);
  return "angle:" + a + ":" + vertex + ":" + c;
}

std::string area_key(std::array<std::string, 3> tri) {
  std::sort(tri.begin(), tri.end());
  return "area:" + tri[0] + ":" + tri[1] + ":" + tri[2];
}

std::string perim_key(std::array<std::string, 3> tri) {
  std::sort(tri.begin(), tri.end());
  return "perim:" + tri[0] + ":" + tri[1] + ":" + tri[2];
}

std::string radius_key(const std::string& center) { return "rad:" + center; }

std::string arc_key(const std::string& center, std::string p, std::string q) {
  if (q < p) std::swap(p, q);
  return "arc:" + center + ":" + p + ":" + q;
}

std::string linedist_key(const std::string& p, std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return "linedist:" + p + ":" + a + ":" + b;
}

std::string dirangle_key(std::string a, std::string b, std::string c,
                         std::string d) {
  if (b < a) std::swap(a, b);
  if (d < c) std::swap(c, d);
  if (std::tie(c, d) < std::tie(a, b)) {
    std::swap(a, c);
    std::swap(b, d);
  }
  return "dirangle:" + a + ":" + b + ":" + c + ":" + d;
}

bool lies_on_line_eps(const Diagram& d, const std::string& p,
                      const std::string& a, const std::string& b) {
  const Vec2 ab = d.at(b) - d.at(a);
  if (ab.norm() < 1e-12) return true;
  return std::fabs(cross2(ab, d.at(p) - d.at(a))) / ab.norm() < 1e-9;
}

std::vector<std::array<std::string, 3>> triangles_of(const Diagram& d) {
  std::vector<std::string> labels;
  for (const auto& p : d.points) labels.push_back(p.label);
  std::sort(labels.begin(), labels.end());
  std::vector<std::array<std::string, 3>> out;
  for (size_t i = 0; i < labels.size(); ++i)
    for (size_t j = i + 1; j < labels.size(); ++j)
      for (size_t k = j + 1; k < labels.size(); ++k) {
        if (!d.has_segment(labels[i], labels[j]) ||
            !d.has_segment(labels[j], labels[k]) ||
            !d.has_segment(labels[i], labels[k]))
          continue;
        if (lies_on_line_eps(d, labels[k], labels[i], labels[j])) continue;
        out.push_back({labels[i], labels[j], labels[k]});
      }
  return out;
}

struct Candidate {
  SubProblem sub;  // id/depends_on assigned at selection time
};

// Chaining is keyed on the first input only: that is the quantity the
// chained_question text refers to as "the previous result".
bool feeds(const SubProblem& producer, const SubProblem& consumer) {
  return !consumer.input_keys.empty() &&
         consumer.input_keys.front() == producer.target_key;
}

int fact_index_of_segment(const FormalDescription& f, const std::string& a,
                          const std::string& b) {
  for (size_t i = 0; i < f.facts.size(); ++i) {
    const Fact& fact = f.facts[i];
    if (fact.kind != FactKind::SegmentLength) continue;
    if ((fact.args[0] == a && fact.args[1] == b) ||
        (fact.args[0] == b && fact.args[1] == a))
      return static_cast<int>(i);
  }
  return -1;
}

std::string num(const Diagram& d, const std::string& key) {
  return canonical_number(evaluate_quantity(d, key));
}

}  // namespace

double evaluate_quantity(const Diagram& d, const std::string& key) {
  const auto parts = split(key, ':');
  if (parts.empty()) throw SynthesisError("empty quantity key");
  const std::string& kind = parts[0];
  const std::vector<std::string> args(parts.begin() + 1, parts.end());

  if (kind == "dist" && args.size() == 2)
    return measure(d, {MeasureKind::Distance, args});
  if (kind == "angle" && args.size() == 3)
    return measure(d, {MeasureKind::Angle, args});
  if (kind == "area" && args.size() >= 3)
    return measure(d, {MeasureKind::PolygonArea, args});
  if (kind == "perim" && args.size() >= 3)
    return measure(d, {MeasureKind::Perimeter, args});
  if (kind == "rad" && args.size() == 1) {
    const Primitive* c = d.find_circle(args[0]);
    if (!c) throw SynthesisError("no circle centered at '" + args[0] + "'");
    return c->radius;
  }
  if (kind == "arc" && args.size() == 3)
    return measure(d, {MeasureKind::CircleArcLength, args});
  if (kind == "linedist" && args.size() == 3)
    return point_line_distance(d.at(args[0]), d.at(args[1]), d.at(args[2]));
  if (kind == "dirangle" && args.size() == 4)
    return direction_angle_deg(d.at(args[1]) - d.at(args[0]),
                               d.at(args[3]) - d.at(args[2]));
  throw SynthesisError("malformed quantity key '" + key + "'");
}

namespace {

// All candidates a description supports, in a fixed deterministic order:
// fact-driven first (description order), then triangle- and circle-driven.
std::vector<Candidate> enumerate_candidates(const FormalDescription& f,
                                            const Diagram& d) {
  std::vector<Candidate> out;

  auto add = [&out](SubProblem s) { out.push_back({std::move(s)}); };

  for (size_t i = 0; i < f.facts.size(); ++i) {
    const Fact& fact = f.facts[i];
    const auto& a = fact.args;
    switch (fact.kind) {
      case FactKind::SegmentLength: {
        SubProblem s;
        s.template_id = "gc-segment-length";
        s.principle = Principle::GeometricConstraints;
        s.statement = a[0] + a[1];
        s.target_key = dist_key(a[0], a[1]);
        s.question = "What is the length of segment " + a[0] + a[1] + "?";
        s.chained_question = s.question;
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1]};
        add(std::move(s));
        break;
      }
      case FactKind::CircleRadius: {
        SubProblem s;
        s.template_id = "gc-circle-radius";
        s.principle = Principle::GeometricConstraints;
        s.statement = "radius of circle " + a[0];
        s.target_key = radius_key(a[0]);
        s.question = "What is the radius of the circle centered at " + a[0] + "?";
        s.chained_question = s.question;
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0]};
        add(std::move(s));
        break;
      }
      case FactKind::Perpendicular: {
        SubProblem s;
        s.template_id = "gc-perpendicular-angle";
        s.principle = Principle::GeometricConstraints;
        s.statement = "angle between " + a[0] + a[1] + " and " + a[2] + a[3];
        s.target_key = dirangle_key(a[0], a[1], a[2], a[3]);
        s.question = "Given that " + a[0] + a[1] + " is perpendicular to " +
                     a[2] + a[3] + ", what is the angle between " + a[0] +
                     a[1] + " and " + a[2] + a[3] + ", in degrees?";
        s.chained_question = s.question;
        s.unit = "deg";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1], a[2], a[3]};
        add(std::move(s));
        break;
      }
      case FactKind::Parallel: {
        SubProblem s;
        s.template_id = "gc-parallel-angle";
        s.principle = Principle::GeometricConstraints;
        s.statement = "angle between " + a[0] + a[1] + " and " + a[2] + a[3];
        s.target_key = dirangle_key(a[0], a[1], a[2], a[3]);
        s.question = "Given that " + a[0] + a[1] + " is parallel to " + a[2] +
                     a[3] + ", what is the angle between their directions, "
                     "in degrees?";
        s.chained_question = s.question;
        s.unit = "deg";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1], a[2], a[3]};
        add(std::move(s));

        const double l1 = (d.at(a[1]) - d.at(a[0])).norm();
        const double l2 = (d.at(a[3]) - d.at(a[2])).norm();
        if (std::fabs(l1 - l2) <= kConstraintTolerance) {
          SubProblem t;
          t.template_id = "nt-parallelogram-side";
          t.principle = Principle::NewTheorems;
          t.statement = a[2] + a[3];
          t.target_key = dist_key(a[2], a[3]);
          t.input_keys = {dist_key(a[0], a[1])};
          t.question = "Sides " + a[0] + a[1] + " and " + a[2] + a[3] +
                       " are parallel and equal, as in a parallelogram. Given " +
                       a[0] + a[1] + " = " + num(d, t.input_keys[0]) +
                       ", find " + a[2] + a[3] + ".";
          t.chained_question = "Sides " + a[0] + a[1] + " and " + a[2] + a[3] +
                               " are parallel and equal, as in a "
                               "parallelogram. Taking the previous result as " +
                               a[0] + a[1] + ", find " + a[2] + a[3] + ".";
          t.facts_used = {static_cast<int>(i)};
          t.labels_used = {a[0], a[1], a[2], a[3]};
          add(std::move(t));
        }
        break;
      }
      case FactKind::EqualLength: {
        SubProblem s;
        s.template_id = "gc-equal-transfer";
        s.principle = Principle::GeometricConstraints;
        s.statement = a[2] + a[3];
        s.target_key = dist_key(a[2], a[3]);
        s.input_keys = {dist_key(a[0], a[1])};
        s.question = "Given " + a[0] + a[1] + " = " + num(d, s.input_keys[0]) +
                     " and " + a[0] + a[1] + " = " + a[2] + a[3] + ", find " +
                     a[2] + a[3] + ".";
        s.chained_question = "Taking the previous result as " + a[0] + a[1] +
                             " and knowing " + a[0] + a[1] + " = " + a[2] +
                             a[3] + ", find " + a[2] + a[3] + ".";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1], a[2], a[3]};
        add(std::move(s));
        break;
      }
      case FactKind::MidpointOf: {
        SubProblem s;
        s.template_id = "gc-midpoint-half";
        s.principle = Principle::GeometricConstraints;
        s.statement = a[1] + a[0];
        s.target_key = dist_key(a[1], a[0]);
        s.input_keys = {dist_key(a[1], a[2])};
        s.question = a[0] + " is the midpoint of " + a[1] + a[2] + ", and " +
                     a[1] + a[2] + " = " + num(d, s.input_keys[0]) +
                     ". What is the length of " + a[1] + a[0] + "?";
        s.chained_question = a[0] + " is the midpoint of " + a[1] + a[2] +
                             ", whose length is the previous result. What is "
                             "the length of " + a[1] + a[0] + "?";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1], a[2]};
        add(std::move(s));
        break;
      }
      case FactKind::PointOnCircle: {
        SubProblem s;
        s.template_id = "gc-point-on-circle";
        s.principle = Principle::GeometricConstraints;
        s.statement = a[1] + a[0];
        s.target_key = dist_key(a[1], a[0]);
        s.input_keys = {radius_key(a[1])};
        s.question = a[0] + " lies on the circle centered at " + a[1] +
                     " of radius " + num(d, s.input_keys[0]) +
                     ". What is the distance " + a[1] + a[0] + "?";
        s.chained_question = a[0] + " lies on the circle centered at " + a[1] +
                             ", whose radius is the previous result. What is "
                             "the distance " + a[1] + a[0] + "?";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1]};
        add(std::move(s));
        break;
      }
      case FactKind::Tangent: {
        SubProblem s;
        s.template_id = "nt-tangent-distance";
        s.principle = Principle::NewTheorems;
        s.statement = "distance from " + a[0] + " to " + a[1] + a[2];
        s.target_key = linedist_key(a[0], a[1], a[2]);
        s.input_keys = {radius_key(a[0])};
        s.question = "Line " + a[1] + a[2] +
                     " is tangent to the circle centered at " + a[0] +
                     " of radius " + num(d, s.input_keys[0]) +
                     ". By the tangent-radius property, what is the distance "
                     "from " + a[0] + " to line " + a[1] + a[2] + "?";
        s.chained_question =
            "Line " + a[1] + a[2] + " is tangent to the circle centered at " +
            a[0] + ", whose radius is the previous result. What is the "
            "distance from " + a[0] + " to line " + a[1] + a[2] + "?";
        s.facts_used = {static_cast<int>(i)};
        s.labels_used = {a[0], a[1], a[2]};
        add(std::move(s));
        break;
      }
      case FactKind::Ray:
      case FactKind::PointOnLine:
        break;
    }
  }

  // Right-triangle templates from perpendicular tags sharing a vertex.
  for (size_t i = 0; i < f.facts.size(); ++i) {
    const Fact& fact = f.facts[i];
    if (fact.kind != FactKind::Perpendicular) continue;
    const auto& a = fact.args;
    std::string vertex, leg1, leg2;
    if (a[0] == a[2]) { vertex = a[0]; leg1 = a[1]; leg2 = a[3]; }
    else if (a[0] == a[3]) { vertex = a[0]; leg1 = a[1]; leg2 = a[2]; }
    else if (a[1] == a[2]) { vertex = a[1]; leg1 = a[0]; leg2 = a[3]; }
    else if (a[1] == a[3]) { vertex = a[1]; leg1 = a[0]; leg2 = a[2]; }
    else continue;
    if (!d.has_segment(vertex, leg1) || !d.has_segment(vertex, leg2)) continue;

    {
      SubProblem s;
      s.template_id = "nt-pythagoras";
      s.principle = Principle::NewTheorems;
      s.statement = leg1 + leg2;
      s.target_key = dist_key(leg1, leg2);
      s.input_keys = {dist_key(vertex, leg1), dist_key(vertex, leg2)};
      s.question = "Triangle " + vertex + leg1 + leg2 +
                   " has a right angle at " + vertex + ". Given " + vertex +
                   leg1 + " = " + num(d, s.input_keys[0]) + " and " + vertex +
                   leg2 + " = " + num(d, s.input_keys[1]) +
                   ", apply the Pythagorean theorem to find " + leg1 + leg2 +
                   ".";
      s.chained_question =
          "Triangle " + vertex + leg1 + leg2 + " has a right angle at " +
          vertex + ". Taking the previous result as " + vertex + leg1 +
          " and knowing " + vertex + leg2 + " = " + num(d, s.input_keys[1]) +
          ", apply the Pythagorean theorem to find " + leg1 + leg2 + ".";
      s.facts_used = {static_cast<int>(i)};
      s.labels_used = {vertex, leg1, leg2};
      add(std::move(s));
    }
    {
      SubProblem s;
      s.template_id = "br-pythagoras-leg";
      s.principle = Principle::BackwardReasoning;
      s.statement = vertex + leg2;
      s.target_key = dist_key(vertex, leg2);
      s.input_keys = {dist_key(leg1, leg2), dist_key(vertex, leg1)};
      s.question = "Triangle " + vertex + leg1 + leg2 +
                   " has a right angle at " + vertex +
                   ". Given the hypotenuse " + leg1 + leg2 + " = " +
                   num(d, s.input_keys[0]) + " and the leg " + vertex + leg1 +
                   " = " + num(d, s.input_keys[1]) +
                   ", work backward to find " + vertex + leg2 + ".";
      s.chained_question =
          "Triangle " + vertex + leg1 + leg2 + " has a right angle at " +
          vertex + ". Taking the previous result as the hypotenuse " + leg1 +
          leg2 + " and knowing " + vertex + leg1 + " = " +
          num(d, s.input_keys[1]) + ", work backward to find " + vertex +
          leg2 + ".";
      s.facts_used = {static_cast<int>(i)};
      s.labels_used = {vertex, leg1, leg2};
      add(std::move(s));
    }
  }

  // Triangle-driven templates.
  for (const auto& tri : triangles_of(d)) {
    const std::string &ta = tri[0], &tb = tri[1], &tc = tri[2];
    const std::string tri_name = ta + tb + tc;
    std::vector<int> side_facts;
    for (const auto& [p, q] : std::initializer_list<std::pair<const char*, const char*>>{
             {ta.c_str(), tb.c_str()}, {tb.c_str(), tc.c_str()},
             {ta.c_str(), tc.c_str()}}) {
      const int idx = fact_index_of_segment(f, p, q);
      if (idx >= 0) side_facts.push_back(idx);
    }
    {
      SubProblem s;
      s.template_id = "nt-angle-sum";
      s.principle = Principle::NewTheorems;
      s.statement = "angle at " + tc + " in triangle " + tri_name;
      s.target_key = angle_key(ta, tc, tb);
      s.input_keys = {angle_key(tb, ta, tc), angle_key(ta, tb, tc)};
      s.question = "In triangle " + tri_name + ", the angle at " + ta +
                   " measures " + num(d, s.input_keys[0]) +
                   " degrees and the angle at " + tb + " measures " +
                   num(d, s.input_keys[1]) +
                   " degrees. Using the triangle angle sum, find the angle "
                   "at " + tc + ", in degrees.";
      s.chained_question =
          "In triangle " + tri_name + ", the angle at " + ta +
          " in degrees is the previous result, and the angle at " + tb +
          " measures " + num(d, s.input_keys[1]) +
          " degrees. Using the triangle angle sum, find the angle at " + tc +
          ", in degrees.";
      s.unit = "deg";
      s.facts_used = side_facts;
      s.labels_used = {ta, tb, tc};
      add(std::move(s));
    }
    {
      SubProblem s;
      s.template_id = "gc-perimeter";
      s.principle = Principle::GeometricConstraints;
      s.statement = "perimeter of triangle " + tri_name;
      s.target_key = perim_key(tri);
      s.input_keys = {dist_key(ta, tb), dist_key(tb, tc), dist_key(ta, tc)};
      s.question = "In triangle " + tri_name + ", " + ta + tb + " = " +
                   num(d, s.input_keys[0]) + ", " + tb + tc + " = " +
                   num(d, s.input_keys[1]) + " and " + ta + tc + " = " +
                   num(d, s.input_keys[2]) + ". What is the perimeter of " +
                   tri_name + "?";
      s.chained_question =
          "Taking the previous result as " + ta + tb + ", with " + tb + tc +
          " = " + num(d, s.input_keys[1]) + " and " + ta + tc + " = " +
          num(d, s.input_keys[2]) + ", find the perimeter of triangle " +
          tri_name + ".";
      s.facts_used = side_facts;
      s.labels_used = {ta, tb, tc};
      add(std::move(s));
    }
    {
      SubProblem s;
      s.template_id = "nt-triangle-area";
      s.principle = Principle::NewTheorems;
      s.statement = "area of triangle " + tri_name;
      s.target_key = area_key(tri);
      s.input_keys = {dist_key(ta, tb), linedist_key(tc, ta, tb)};
      s.question = "Triangle " + tri_name + " has base " + ta + tb + " = " +
                   num(d, s.input_keys[0]) + ", and the distance from " + tc +
                   " to line " + ta + tb + " is " + num(d, s.input_keys[1]) +
                   ". Using the triangle area formula, find the area of " +
                   tri_name + ".";
      s.chained_question =
          "Taking the previous result as the base " + ta + tb +
          " of triangle " + tri_name + ", with the distance from " + tc +
          " to line " + ta + tb + " being " + num(d, s.input_keys[1]) +
          ", use the area formula to find the area of " + tri_name + ".";
      s.facts_used = side_facts;
      s.labels_used = {ta, tb, tc};
      add(std::move(s));
    }
    {
      SubProblem s;
      s.template_id = "br-area-height";
      s.principle = Principle::BackwardReasoning;
      s.statement = "distance from " + tc + " to " + ta + tb;
      s.target_key = linedist_key(tc, ta, tb);
      s.input_keys = {area_key(tri), dist_key(ta, tb)};
      s.question = "Triangle " + tri_name + " has area " +
                   num(d, s.input_keys[0]) + " and " + ta + tb + " = " +
                   num(d, s.input_keys[1]) +
                   ". Working backward from the area formula, find the "
                   "distance from " + tc + " to line " + ta + tb + ".";
      s.chained_question =
          "Triangle " + tri_name + " has area equal to the previous result, "
          "and " + ta + tb + " = " + num(d, s.input_keys[1]) +
          ". Working backward from the area formula, find the distance from " +
          tc + " to line " + ta + tb + ".";
      s.facts_used = side_facts;
      s.labels_used = {ta, tb, tc};
      add(std::move(s));
    }
    {
      SubProblem s;
      s.template_id = "br-perimeter-side";
      s.principle = Principle::BackwardReasoning;
      s.statement = ta + tc;
      s.target_key = dist_key(ta, tc);
      s.input_keys = {perim_key(tri), dist_key(ta, tb), dist_key(tb, tc)};
      s.question = "The perimeter of triangle " + tri_name + " is " +
                   num(d, s.input_keys[0]) + ". Given " + ta + tb + " = " +
                   num(d, s.input_keys[1]) + " and " + tb + tc + " = " +
                   num(d, s.input_keys[2]) + ", work backward to find " + ta +
                   tc + ".";
      s.chained_question =
          "The perimeter of triangle " + tri_name +
          " equals the previous result. Given " + ta + tb + " = " +
          num(d, s.input_keys[1]) + " and " + tb + tc + " = " +
          num(d, s.input_keys[2]) + ", work backward to find " + ta + tc + ".";
      s.facts_used = side_facts;
      s.labels_used = {ta, tb, tc};
      add(std::move(s));
    }
  }

  // Circle-driven templates: arcs between tagged on-circle point pairs.
  std::map<std::string, std::vector<std::string>> on_circle;
  for (const auto& fact : f.facts)
    if (fact.kind == FactKind::PointOnCircle)
      on_circle[fact.args[1]].push_back(fact.args[0]);
  for (auto& [center, pts] : on_circle) {
    std::sort(pts.begin(), pts.end());
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const std::string &p = pts[i], &q = pts[i + 1];
      {
        SubProblem s;
        s.template_id = "nt-arc-length";
        s.principle = Principle::NewTheorems;
        s.statement = "arc " + p + q + " on circle " + center;
        s.target_key = arc_key(center, p, q);
        s.input_keys = {radius_key(center), angle_key(p, center, q)};
        s.question = "Points " + p + " and " + q +
                     " lie on the circle centered at " + center +
                     " of radius " + num(d, s.input_keys[0]) +
                     ", and the central angle " + p + center + q +
                     " measures " + num(d, s.input_keys[1]) +
                     " degrees. Find the length of the minor arc " + p + q +
                     ".";
        s.chained_question =
            "Points " + p + " and " + q + " lie on the circle centered at " +
            center + ", whose radius is the previous result. The central "
            "angle " + p + center + q + " measures " +
            num(d, s.input_keys[1]) +
            " degrees. Find the length of the minor arc " + p + q + ".";
        s.labels_used = {center, p, q};
        add(std::move(s));
      }
      {
        SubProblem s;
        s.template_id = "br-arc-angle";
        s.principle = Principle::BackwardReasoning;
        s.statement = "angle " + p + center + q;
        s.target_key = angle_key(p, center, q);
        s.input_keys = {arc_key(center, p, q), radius_key(center)};
        s.question = "The minor arc between " + p + " and " + q +
                     " on the circle centered at " + center + " of radius " +
                     num(d, s.input_keys[1]) + " has length " +
                     num(d, s.input_keys[0]) +
                     ". Work backward to find the central angle " + p +
                     center + q + ", in degrees.";
        s.chained_question =
            "The minor arc between " + p + " and " + q +
            " on the circle centered at " + center + " of radius " +
            num(d, s.input_keys[1]) +
            " has length equal to the previous result. Work backward to find "
            "the central angle " + p + center + q + ", in degrees.";
        s.unit = "deg";
        s.labels_used = {center, p, q};
        add(std::move(s));
      }
    }
  }

  return out;
}

}  // namespace

std::vector<SubProblem> generate_subproblems(const FormalDescription& f,
                                             const Diagram& d,
                                             const SynthesisConfig& cfg,
                                             uint64_t seed) {
  if (cfg.m_min < 2 || cfg.m_max < cfg.m_min)
    throw SynthesisError("invalid m_range");

  std::vector<Candidate> candidates = enumerate_candidates(f, d);

  // Filter by enabled templates and principles; dedupe identical questions.
  std::set<std::string> seen;
  std::vector<Candidate> pool;
  for (auto& c : candidates) {
    if (!cfg.principles.count(c.sub.principle)) continue;
    if (!cfg.enabled_templates.empty() &&
        !cfg.enabled_templates.count(c.sub.template_id))
      continue;
    if (!seen.insert(c.sub.question).second) continue;
    pool.push_back(std::move(c));
  }

  if (static_cast<int>(pool.size()) < cfg.m_min)
    throw TooSimpleError(
        "diagram too simple: " + std::to_string(pool.size()) +
        " candidate sub-problems, need " + std::to_string(cfg.m_min) +
        "; evolve the diagram with more auxiliary elements first");

  SplitMix64 rng(mix_seed(seed, "subproblems"));
  int m = rng.uniform_int(cfg.m_min, cfg.m_max);
  m = std::min<int>(m, static_cast<int>(pool.size()));

  // Selection: one seeded pick per enabled principle first, then seeded fill.
  std::vector<size_t> chosen;
  auto already = [&chosen](size_t idx) {
    return std::find(chosen.begin(), chosen.end(), idx) != chosen.end();
  };
  for (Principle p : {Principle::GeometricConstraints, Principle::NewTheorems,
                      Principle::BackwardReasoning}) {
    if (!cfg.principles.count(p)) continue;
    std::vector<size_t> of_principle;
    for (size_t i = 0; i < pool.size(); ++i)
      if (pool[i].sub.principle == p) of_principle.push_back(i);
    if (of_principle.empty()) continue;
    if (static_cast<int>(chosen.size()) >= m) break;
    chosen.push_back(
        of_principle[rng.uniform_int(0, static_cast<int>(of_principle.size()) - 1)]);
  }
  std::vector<size_t> rest;
  for (size_t i = 0; i < pool.size(); ++i)
    if (!already(i)) rest.push_back(i);
  rng.shuffle(rest);
  for (size_t idx : rest) {
    if (static_cast<int>(chosen.size()) >= m) break;
    chosen.push_back(idx);
  }

  // Chainability fix-up: make sure some selected target feeds some selected
  // input, swapping in a linkable consumer when necessary.
  auto has_link = [&pool](const std::vector<size_t>& sel) {
    for (size_t i : sel)
      for (size_t j : sel)
        if (i != j && feeds(pool[i].sub, pool[j].sub)) return true;
    return false;
  };
  if (!has_link(chosen)) {
    bool fixed = false;
    // cheapest repair: swap the last filler for a consumer of something kept
    for (size_t j = 0; j < pool.size() && !fixed; ++j) {
      if (already(j)) continue;
      for (size_t i : chosen) {
        if (i != chosen.back() && feeds(pool[i].sub, pool[j].sub)) {
          chosen.back() = j;
          fixed = true;
          break;
        }
      }
    }
    // otherwise force-include the first linkable pair in the pool
    if (!fixed && chosen.size() >= 2) {
      for (size_t i = 0; i < pool.size() && !fixed; ++i)
        for (size_t j = 0; j < pool.size() && !fixed; ++j) {
          if (i == j || !feeds(pool[i].sub, pool[j].sub)) continue;
          std::vector<size_t> keep;
          for (size_t k : chosen)
            if (k != i && k != j) keep.push_back(k);
          keep.resize(chosen.size() - 2);
          keep.push_back(i);
          keep.push_back(j);
          chosen = keep;
          fixed = true;
        }
    }
  }

  std::sort(chosen.begin(), chosen.end());  // enumeration order = id order

  std::vector<SubProblem> subs;
  subs.reserve(chosen.size());
  for (size_t k = 0; k < chosen.size(); ++k) {
    SubProblem s = pool[chosen[k]].sub;
    s.id = static_cast<int>(k) + 1;
    const double value = evaluate_quantity(d, s.target_key);
    s.answer = canonical_number(value);
    subs.push_back(std::move(s));
  }

  // Dependency links: first earlier sub-problem feeding this one.
  for (size_t j = 0; j < subs.size(); ++j)
    for (size_t i = 0; i < j && !subs[j].depends_on; ++i)
      if (feeds(subs[i], subs[j])) subs[j].depends_on = subs[i].id;

  return subs;
}

ComposedProblem compose_problem(const std::vector<SubProblem>& subs,
                                uint64_t seed, int aux_count,
                                const FormalDescription& description) {
  if (subs.size() < 2)
    throw CompositionError("composition needs at least 2 sub-problems");

  std::vector<SubProblem> ordered = subs;
  std::sort(ordered.begin(), ordered.end(),
            [](const SubProblem& a, const SubProblem& b) { return a.id < b.id; });

  // Identical questions add no difficulty; drop them before chaining.
  std::set<std::string> seen;
  std::vector<SubProblem> distinct;
  for (auto& s : ordered)
    if (seen.insert(s.question).second) distinct.push_back(s);
  if (distinct.size() < 2)
    throw CompositionError("no composable pair: sub-problems are duplicates");

  const size_t n = distinct.size();
  auto linked = [&distinct](size_t i, size_t j) {
    if (distinct[j].depends_on && *distinct[j].depends_on == distinct[i].id)
      return true;
    return feeds(distinct[i], distinct[j]);
  };

  // Longest chain, edges only forward in id order (keeps the search acyclic
  // and deterministic).
  std::vector<int> best_len(n, 1);
  std::vector<int> prev(n, -1);
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < j; ++i)
      if (linked(i, j) && best_len[i] + 1 > best_len[j]) {
        best_len[j] = best_len[i] + 1;
        prev[j] = static_cast<int>(i);
      }

  const int max_len = *std::max_element(best_len.begin(), best_len.end());
  if (max_len < 2)
    throw CompositionError(
        "no composable pair: all sub-problems are independent");

  std::vector<size_t> terminals;
  for (size_t j = 0; j < n; ++j)
    if (best_len[j] == max_len) terminals.push_back(j);
  SplitMix64 rng(mix_seed(seed, "compose"));
  const size_t pick =
      terminals[rng.uniform_int(0, static_cast<int>(terminals.size()) - 1)];

  std::vector<size_t> chain;
  for (int k = static_cast<int>(pick); k >= 0; k = prev[k]) {
    chain.push_back(static_cast<size_t>(k));
    if (prev[k] < 0) break;
  }
  std::reverse(chain.begin(), chain.end());

  ComposedProblem out;
  out.chain_length = static_cast<int>(chain.size());
  out.difficulty = aux_count + out.chain_length;
  out.description = description;

  std::ostringstream q, r;
  q << "Solve the following in order.";
  std::set<std::string> labels;
  for (size_t k = 0; k < chain.size(); ++k) {
    const SubProblem& s = distinct[chain[k]];
    q << " (" << (k + 1) << ") " << (k == 0 ? s.question : s.chained_question);
    r << (k ? " " : "") << "Step " << (k + 1) << ": " << s.statement << " = "
      << s.answer << (s.unit == "deg" ? " degrees" : "") << ".";
    out.component_ids.push_back(s.id);
    out.components.push_back(s);
    labels.insert(s.labels_used.begin(), s.labels_used.end());
  }
  q << " Report the final numeric value.";

  const SubProblem& terminal = distinct[chain.back()];
  out.question = q.str();
  out.reasoning_trace = r.str();
  out.ground_truth = terminal.answer;
  out.terminal_key = terminal.target_key;
  out.labels_used.assign(labels.begin(), labels.end());
  return out;
}

ConsistencyDecision consistency_filter(const ComposedProblem& p,
                                       const SolverGateway& gateway,
                                       int n_attempts) {
  ConsistencyDecision out;

  SampleRecord probe;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cand:%016llx",
                static_cast<unsigned long long>(hash64(p.question)));
  probe.id = buf;
  probe.question = p.question;
  probe.ground_truth = p.ground_truth;
  probe.reasoning = p.reasoning_trace;
  probe.difficulty = p.difficulty;

  for (int k = 0; k < n_attempts; ++k)
    out.attempts.push_back(gateway.answer(probe, k));

  std::optional<double> first;
  for (const auto& a : out.attempts) {
    if (!a.extracted) {
      out.reason = "attempt " + std::to_string(a.attempt) +
                   " produced no extractable answer";
      return out;
    }
    const auto v = parse_number(*a.extracted);
    if (!v) {
      out.reason = "attempt " + std::to_string(a.attempt) +
                   " produced a non-numeric answer";
      return out;
    }
    if (!first) {
      first = v;
    } else if (!numeric_equal(*v, *first)) {
      out.reason = "answers disagree: " + canonical_number(*first) + " vs " +
                   canonical_number(*v);
      return out;
    }
  }
  out.keep = true;
  out.reason = "all " + std::to_string(n_attempts) + " answers agree";
  return out;
}

AlignmentDecision alignment_filter(const ComposedProblem& p, const Diagram& d) {
  AlignmentDecision out;
  out.keep = true;

  for (const auto& label : p.labels_used) {
    if (!d.has_point(label)) {
      out.keep = false;
      out.reasons.push_back("label '" + label + "' does not resolve");
    }
  }
  for (const auto& s : p.components) {
    for (int idx : s.facts_used) {
      if (idx < 0 || idx >= static_cast<int>(p.description.facts.size())) {
        out.keep = false;
        out.reasons.push_back("fact index " + std::to_string(idx) +
                              " out of range");
        continue;
      }
      const Fact& fact = p.description.facts[idx];
      if (!fact_holds(d, fact)) {
        out.keep = false;
        out.reasons.push_back("fact does not hold: " + fact.text());
      }
    }
  }
  if (out.keep) out.reasons.push_back("aligned");
  return out;
}

int reasoning_length(const ComposedProblem& p) {
  return token_count(p.reasoning_trace);
}

const std::set<std::string>& all_template_ids() {
  static const std::set<std::string> ids = {
      "gc-segment-length", "gc-circle-radius", "gc-perpendicular-angle",
      "gc-parallel-angle", "gc-equal-transfer", "gc-midpoint-half",
      "gc-point-on-circle", "gc-perimeter", "nt-pythagoras", "nt-angle-sum",
      "nt-parallelogram-side", "nt-tangent-distance", "nt-arc-length",
      "nt-triangle-area", "br-pythagoras-leg", "br-area-height",
      "br-perimeter-side", "br-arc-angle"};
  return ids;
}

std::set<std::string> load_template_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SynthesisError("cannot open template registry: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SynthesisError(std::string("malformed template registry: ") +
                         e.what());
  }
  std::set<std::string> enabled;
  for (auto it = j.begin(); it != j.end(); ++it) {
    principle_from(it.key());  // rejects unknown principle names
    for (const auto& id : it.value()) {
      const std::string s = id.get<std::string>();
      if (!all_template_ids().count(s))
        throw SynthesisError("unknown template id '" + s + "'");
      enabled.insert(s);
    }
  }
  return enabled;
}

const char* to_string(Principle p) {
  switch (p) {
    case Principle::GeometricConstraints: return "geometric-constraints";
    case Principle::NewTheorems: return "new-theorems";
    case Principle::BackwardReasoning: return "backward-reasoning";
  }
  return "?";
}

Principle principle_from(const std::string& name) {
  if (name == "geometric-constraints") return Principle::GeometricConstraints;
  if (name == "new-theorems") return Principle::NewTheorems;
  if (name == "backward-reasoning") return Principle::BackwardReasoning;
  throw SynthesisError("unknown principle '" + name + "'");
}

}  // namespace geoevo
