#pragma once

// Static aerial view of a maze with one polyline per trajectory, coloured
// by option id.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "odpp/gridworld.hpp"

namespace odpp::svg {

/// Ten-colour categorical palette; option c uses entry c mod 10.
inline constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline const char* option_color(int option) {
  const int n = static_cast<int>(kPalette.size());
  return kPalette[static_cast<std::size_t>(((option % n) + n) % n)];
}

struct SvgStyle {
  int cell = 20;  // pixels per grid cell
  double stroke_width = 2.0;
  double opacity = 0.7;
};

inline std::string render(const grid::MazeSpec& maze, const std::vector<grid::TrajectoryRecord>& recs,
                          const SvgStyle& style = {}) {
  const int px = style.cell;
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                maze.width() * px, maze.height() * px, maze.width() * px, maze.height() * px);
  out += buf;
  out += "<g id=\"maze\">\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n",
                maze.width() * px, maze.height() * px);
  out += buf;
  for (int r = 0; r < maze.height(); ++r)
    for (int c = 0; c < maze.width(); ++c)
      if (maze.wall(r, c)) {
        std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#333333\"/>\n",
                      c * px, r * px, px, px);
        out += buf;
      }
  auto mark = [&](const std::vector<int>& states, const char* color) {
    for (int s : states) {
      const auto cell = maze.cell(s);
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" fill-opacity=\"0.35\"/>\n",
                    cell.col * px, cell.row * px, px, px, color);
      out += buf;
    }
  };
  mark(maze.starts(), "#2ca02c");
  mark(maze.goals(), "#d62728");
  out += "</g>\n<g id=\"trajectories\" fill=\"none\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
  for (const auto& rec : recs) {
    std::snprintf(buf, sizeof buf, "<polyline data-option=\"%d\" stroke=\"%s\" stroke-width=\"%.2f\" stroke-opacity=\"%.2f\" points=\"",
                  rec.option, option_color(rec.option), style.stroke_width, style.opacity);
    out += buf;
    for (std::size_t t = 0; t < rec.states.size(); ++t) {
      const auto cell = maze.cell(rec.states[t]);
      std::snprintf(buf, sizeof buf, "%s%.1f,%.1f", t == 0 ? "" : " ", (cell.col + 0.5) * px, (cell.row + 0.5) * px);
      out += buf;
    }
    out += "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace odpp::svg
