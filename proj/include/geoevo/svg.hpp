#pragma once

#include <string>

#include "geoevo/geometry.hpp"

namespace geoevo {

struct SvgStyle {
  double canvas = 440.0;     // drawing area for the larger bbox side, px
  double margin = 30.0;      // border around the drawing, px
  double stroke_width = 1.5;
  bool show_labels = true;
  std::string stroke = "#222222";
  std::string aux_stroke = "#1f6fb2";
  std::string dash_pattern = "6 4";  // auxiliary elements are dashed
};

// Deterministic renderer: identical (diagram, style) pairs produce
// byte-identical documents. Auxiliary primitives carry stroke-dasharray.
std::string render_svg(const Diagram& d, const SvgStyle& style = {});

}  // namespace geoevo
