#include "velgan/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace velgan {

namespace {

void put_be32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v >> 24));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const uint32_t crc = static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
              static_cast<uInt>(body.size())));
  put_be32(out, crc);
}

}  // namespace

void write_png(const ImageRGB& img, const std::string& path) {
  if (img.w < 1 || img.h < 1) throw std::runtime_error("png: empty image");

  std::string raw;
  raw.reserve(static_cast<size_t>(img.h) * (1 + 3 * img.w));
  for (int y = 0; y < img.h; ++y) {
    raw.push_back('\0');  // filter type 0
    raw.append(reinterpret_cast<const char*>(&img.px[static_cast<size_t>(y) * img.w * 3]),
               static_cast<size_t>(img.w) * 3);
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::string comp(comp_len, '\0');
  if (::compress2(reinterpret_cast<Bytef*>(comp.data()), &comp_len,
                  reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  comp.resize(comp_len);

  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(img.w));
  put_be32(ihdr, static_cast<uint32_t>(img.h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot open '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("png: write failed for '" + path + "'");
}

namespace {

struct Rgb {
  double r, g, b;
};

const Rgb kViridis[] = {
    {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
    {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
    {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
    {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};

Rgb sample_map(Colormap cmap, double t) {
  t = std::clamp(t, 0.0, 1.0);
  switch (cmap) {
    case Colormap::gray:
      return {t, t, t};
    case Colormap::hot: {
      // white -> yellow -> red ramp for error maps
      if (t < 0.5) return {1.0, 1.0, 1.0 - 2.0 * t};
      return {1.0, 2.0 - 2.0 * t, 0.0};
    }
    case Colormap::viridis:
    default: {
      const int n = static_cast<int>(std::size(kViridis)) - 1;
      const double f = t * n;
      const int i = std::min(static_cast<int>(f), n - 1);
      const double u = f - i;
      return {kViridis[i].r + u * (kViridis[i + 1].r - kViridis[i].r),
              kViridis[i].g + u * (kViridis[i + 1].g - kViridis[i].g),
              kViridis[i].b + u * (kViridis[i + 1].b - kViridis[i].b)};
    }
  }
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
}

}  // namespace

ImageRGB render_section(const Section& s, double lo, double hi, Colormap cmap) {
  ImageRGB img(s.n_traces, s.n_samples);
  const double span = hi > lo ? hi - lo : 1.0;
  for (int t = 0; t < s.n_traces; ++t)
    for (int k = 0; k < s.n_samples; ++k) {
      const Rgb c = sample_map(cmap, (s.at(t, k) - lo) / span);
      img.set(t, k, to_byte(c.r), to_byte(c.g), to_byte(c.b));
    }
  return img;
}

namespace {

void draw_line(ImageRGB& img, double x0, double y0, double x1, double y1,
               unsigned char r, unsigned char g, unsigned char b) {
  const double dx = x1 - x0, dy = y1 - y0;
  const int steps = std::max(1, static_cast<int>(std::ceil(
                                    std::max(std::abs(dx), std::abs(dy)))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    img.set(static_cast<int>(std::lround(x0 + t * dx)),
            static_cast<int>(std::lround(y0 + t * dy)), r, g, b);
  }
}

}  // namespace

ImageRGB render_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                      int w, int h) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::runtime_error("curve: need matching nonempty series");
  ImageRGB img(w, h);
  const int m = 40;  // margin
  draw_line(img, m, h - m, w - 10, h - m, 0, 0, 0);
  draw_line(img, m, h - m, m, 10, 0, 0, 0);

  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  for (size_t i = 0; i < xs.size(); ++i) {
    xmin = std::min(xmin, xs[i]);
    xmax = std::max(xmax, xs[i]);
    ymin = std::min(ymin, ys[i]);
    ymax = std::max(ymax, ys[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const auto px = [&](double x) {
    return m + (x - xmin) / (xmax - xmin) * (w - m - 10);
  };
  const auto py = [&](double y) {
    return (h - m) - (y - ymin) / (ymax - ymin) * (h - m - 10);
  };
  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = m + tick / 4.0 * (w - m - 10);
    const double fy = (h - m) - tick / 4.0 * (h - m - 10);
    draw_line(img, fx, h - m, fx, h - m + 5, 0, 0, 0);
    draw_line(img, m - 5, fy, m, fy, 0, 0, 0);
  }
  for (size_t i = 1; i < xs.size(); ++i)
    draw_line(img, px(xs[i - 1]), py(ys[i - 1]), px(xs[i]), py(ys[i]), 30, 60, 180);
  for (size_t i = 0; i < xs.size(); ++i) {
    const int cx = static_cast<int>(std::lround(px(xs[i])));
    const int cy = static_cast<int>(std::lround(py(ys[i])));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) img.set(cx + dx, cy + dy, 30, 60, 180);
  }
  return img;
}

ImageRGB render_histogram_pair(const Histogram& a, const Histogram& b, int w, int h) {
  if (a.counts.size() != b.counts.size())
    throw std::runtime_error("histogram render: binning mismatch");
  ImageRGB img(w, h);
  const int m = 30;
  int64_t peak = 1;
  for (int64_t c : a.counts) peak = std::max(peak, c);
  for (int64_t c : b.counts) peak = std::max(peak, c);
  const int bins = static_cast<int>(a.counts.size());
  const double bw = static_cast<double>(w - 2 * m) / bins;
  for (int i = 0; i < bins; ++i) {
    const int x0 = m + static_cast<int>(i * bw);
    const int x1 = m + static_cast<int>((i + 1) * bw) - 1;
    const int ha = static_cast<int>(static_cast<double>(a.counts[i]) / peak * (h - 2 * m));
    const int hb = static_cast<int>(static_cast<double>(b.counts[i]) / peak * (h - 2 * m));
    for (int x = x0; x <= x1; ++x)
      for (int y = h - m - ha; y <= h - m; ++y) img.set(x, y, 120, 160, 220);
    draw_line(img, x0, h - m - hb, x1, h - m - hb, 200, 80, 40);
    draw_line(img, x0, h - m - hb, x0, h - m, 200, 80, 40);
    draw_line(img, x1, h - m - hb, x1, h - m, 200, 80, 40);
  }
  draw_line(img, m, h - m, w - m, h - m, 0, 0, 0);
  return img;
}

ImageRGB hstack(const std::vector<ImageRGB>& imgs, int gap) {
  if (imgs.empty()) throw std::runtime_error("hstack: no images");
  int w = gap * (static_cast<int>(imgs.size()) - 1);
  int h = 0;
  for (const ImageRGB& im : imgs) {
    w += im.w;
    h = std::max(h, im.h);
  }
  ImageRGB out(w, h);
  int at = 0;
  for (const ImageRGB& im : imgs) {
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        const size_t i = (static_cast<size_t>(y) * im.w + x) * 3;
        out.set(at + x, y, im.px[i], im.px[i + 1], im.px[i + 2]);
      }
    at += im.w + gap;
  }
  return out;
}

}  // namespace velgan
