#include "geoevo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace geoevo {

namespace {

std::string fmt(double v) {
  if (std::fabs(v) < 5e-3) v = 0.0;  // keep "-0.00" out of the output
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Mapper {
  double scale = 1.0;
  double min_x = 0.0, max_y = 0.0;
  double margin = 0.0;

  double x(double wx) const { return (wx - min_x) * scale + margin; }
  double y(double wy) const { return (max_y - wy) * scale + margin; }
};

}  // namespace

std::string render_svg(const Diagram& d, const SvgStyle& style) {
  double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;
  bool first = true;
  auto grow = [&](double x, double y) {
    if (first) {
      min_x = max_x = x;
      min_y = max_y = y;
      first = false;
    } else {
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  };
  for (const auto& p : d.points) grow(p.pos.x(), p.pos.y());
  for (const auto& p : d.primitives) {
    if (p.kind == PrimitiveKind::Circle) {
      const Vec2 c = d.at(p.args[0]);
      grow(c.x() - p.radius, c.y() - p.radius);
      grow(c.x() + p.radius, c.y() + p.radius);
    }
  }

  const double span = std::max({max_x - min_x, max_y - min_y, 1e-9});
  Mapper m;
  m.scale = style.canvas / span;
  m.min_x = min_x;
  m.max_y = max_y;
  m.margin = style.margin;

  const double width = (max_x - min_x) * m.scale + 2.0 * style.margin;
  const double height = (max_y - min_y) * m.scale + 2.0 * style.margin;
  const double diag = std::hypot(max_x - min_x, max_y - min_y) + 1.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width)
      << " " << fmt(height) << "\">\n";

  for (const auto& p : d.primitives) {
    const std::string color = p.is_auxiliary ? style.aux_stroke : style.stroke;
    const std::string dash =
        p.is_auxiliary ? " stroke-dasharray=\"" + style.dash_pattern + "\"" : "";
    if (p.kind == PrimitiveKind::Circle) {
      const Vec2 c = d.at(p.args[0]);
      out << "  <circle cx=\"" << fmt(m.x(c.x())) << "\" cy=\""
          << fmt(m.y(c.y())) << "\" r=\"" << fmt(p.radius * m.scale)
          << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
          << fmt(style.stroke_width) << "\"" << dash << "/>\n";
      continue;
    }
    Vec2 a = d.at(p.args[0]);
    Vec2 b = d.at(p.args[1]);
    if (p.kind == PrimitiveKind::Ray) {
      const Vec2 dir = (b - a).normalized();
      b = a + dir * (2.0 * diag);  // carried past the canvas edge, svg clips
    }
    out << "  <line x1=\"" << fmt(m.x(a.x())) << "\" y1=\"" << fmt(m.y(a.y()))
        << "\" x2=\"" << fmt(m.x(b.x())) << "\" y2=\"" << fmt(m.y(b.y()))
        << "\" stroke=\"" << color << "\" stroke-width=\""
        << fmt(style.stroke_width) << "\"" << dash << "/>\n";
  }

  if (style.show_labels) {
    for (const auto& p : d.points) {
      out << "  <text x=\"" << fmt(m.x(p.pos.x()) + 5.0) << "\" y=\""
          << fmt(m.y(p.pos.y()) - 5.0)
          << "\" font-family=\"sans-serif\" font-size=\"14\">" << p.label
          << "</text>\n";
    }
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace geoevo
