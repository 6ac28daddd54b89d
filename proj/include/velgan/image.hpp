#pragma once

#include <string>
#include <vector>

#include "velgan/metrics.hpp"
#include "velgan/volume.hpp"

namespace velgan {

struct ImageRGB {
  int w = 0, h = 0;
  std::vector<unsigned char> px;  // 3 bytes per pixel, row-major

  ImageRGB() = default;
  ImageRGB(int w_, int h_, unsigned char fill = 255)
      : w(w_), h(h_), px(static_cast<size_t>(w_) * h_ * 3, fill) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    const size_t i = (static_cast<size_t>(y) * w + x) * 3;
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
};

// Minimal PNG encoder (8-bit RGB, zlib-deflated scanlines).
void write_png(const ImageRGB& img, const std::string& path);

enum class Colormap { viridis, gray, hot };

// Section rendered with traces horizontal and time vertical, values mapped
// linearly from [lo, hi] into the colormap.
ImageRGB render_section(const Section& s, double lo, double hi, Colormap cmap);

// Polyline plot with light axes; tick labels are omitted on purpose.
ImageRGB render_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                      int w = 640, int h = 400);

// Two overlaid bar sets (reference filled, prediction outlined).
ImageRGB render_histogram_pair(const Histogram& a, const Histogram& b, int w = 640,
                               int h = 400);

ImageRGB hstack(const std::vector<ImageRGB>& imgs, int gap = 4);

}  // namespace velgan
