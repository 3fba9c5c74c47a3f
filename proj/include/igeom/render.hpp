#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "igeom/flowline.hpp"
#include "igeom/sle.hpp"

namespace igeom {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first

  Rgb pixel(int x, int y) const;
  std::size_t count_not(const Rgb& color) const;
};

struct RenderSpec {
  int width = 600;
  int height = 600;
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;
  Rgb background{255, 255, 255};
};

struct Stroke {
  std::vector<Point> points;
  double hue = 0.0;  // [0, 1)
};

Rgb hue_to_rgb(double hue);

Image rasterize(const std::vector<Stroke>& strokes, const RenderSpec& spec);

/// One hue per distinct starting angle, increasing with the angle.
Image render_paths(const std::vector<FlowPath>& paths, const RenderSpec& spec);
Image render_curves(const std::vector<CurvePolyline>& curves, const RenderSpec& spec);

void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace igeom
