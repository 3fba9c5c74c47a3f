#include "igeom/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

namespace igeom {

Rgb Image::pixel(int x, int y) const {
  const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
  return {rgb[o], rgb[o + 1], rgb[o + 2]};
}

std::size_t Image::count_not(const Rgb& color) const {
  std::size_t n = 0;
  for (std::size_t o = 0; o + 2 < rgb.size(); o += 3) {
    if (rgb[o] != color[0] || rgb[o + 1] != color[1] || rgb[o + 2] != color[2]) ++n;
  }
  return n;
}

Rgb hue_to_rgb(double hue) {
  hue -= std::floor(hue);
  const double h6 = hue * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double v = 0.9;
  const double p = 0.0;
  const double q = v * (1.0 - f);
  const double t = v * f;
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  auto to8 = [](double c) { return static_cast<std::uint8_t>(std::lround(255.0 * c)); };
  return {to8(r), to8(g), to8(b)};
}

Image rasterize(const std::vector<Stroke>& strokes, const RenderSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw ValidationError("render.size: must be positive");
  if (!(spec.xmax > spec.xmin) || !(spec.ymax > spec.ymin)) {
    throw ValidationError("render.bounds: empty window");
  }
  Image img;
  img.width = spec.width;
  img.height = spec.height;
  img.rgb.resize(3 * static_cast<std::size_t>(spec.width) * spec.height);
  for (std::size_t o = 0; o < img.rgb.size(); o += 3) {
    img.rgb[o] = spec.background[0];
    img.rgb[o + 1] = spec.background[1];
    img.rgb[o + 2] = spec.background[2];
  }
  const double sx = (spec.width - 1) / (spec.xmax - spec.xmin);
  const double sy = (spec.height - 1) / (spec.ymax - spec.ymin);
  auto plot = [&](double px, double py, const Rgb& c) {
    const long x = std::lround(px);
    const long y = std::lround(py);
    if (x < 0 || y < 0 || x >= spec.width || y >= spec.height) return;
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * spec.width + static_cast<std::size_t>(x));
    img.rgb[o] = c[0];
    img.rgb[o + 1] = c[1];
    img.rgb[o + 2] = c[2];
  };
  for (const Stroke& s : strokes) {
    const Rgb c = hue_to_rgb(s.hue);
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      const double x1 = (s.points[k].real() - spec.xmin) * sx;
      const double y1 = (spec.ymax - s.points[k].imag()) * sy;
      if (k == 0) {
        plot(x1, y1, c);
        continue;
      }
      const double x0 = (s.points[k - 1].real() - spec.xmin) * sx;
      const double y0 = (spec.ymax - s.points[k - 1].imag()) * sy;
      const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
      for (int m = 0; m <= n; ++m) {
        const double f = static_cast<double>(m) / n;
        plot(x0 + f * (x1 - x0), y0 + f * (y1 - y0), c);
      }
    }
  }
  return img;
}

Image render_paths(const std::vector<FlowPath>& paths, const RenderSpec& spec) {
  if (paths.empty()) throw ValidationError("render.paths: nothing to draw");
  std::map<double, double> hueOf;
  for (const FlowPath& p : paths) hueOf[p.thetas.empty() ? 0.0 : p.thetas.front()] = 0.0;
  std::size_t rank = 0;
  for (auto& [theta, hue] : hueOf) {
    hue = hueOf.size() > 1 ? 0.8 * static_cast<double>(rank) / static_cast<double>(hueOf.size() - 1) : 0.0;
    ++rank;
  }
  std::vector<Stroke> strokes;
  for (const FlowPath& p : paths) {
    strokes.push_back({p.points, hueOf[p.thetas.empty() ? 0.0 : p.thetas.front()]});
  }
  return rasterize(strokes, spec);
}

Image render_curves(const std::vector<CurvePolyline>& curves, const RenderSpec& spec) {
  if (curves.empty()) throw ValidationError("render.curves: nothing to draw");
  std::vector<Stroke> strokes;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const double hue = curves.size() > 1 ? 0.8 * static_cast<double>(k) / static_cast<double>(curves.size() - 1) : 0.0;
    strokes.push_back({curves[k].vertices, hue});
  }
  return rasterize(strokes, spec);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + 3 * static_cast<std::size_t>(y) * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace igeom
