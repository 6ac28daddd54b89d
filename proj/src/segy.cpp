#include "velgan/segy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace velgan {

namespace {

constexpr size_t kTextHeaderSize = 3200;
constexpr size_t kBinaryHeaderSize = 400;
constexpr size_t kTraceHeaderSize = 240;

// All multi-byte fields are big-endian.
uint16_t be16(const unsigned char* p) {
  return static_cast<uint16_t>((p[0] << 8) | p[1]);
}
uint32_t be32(const unsigned char* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}
void put_be16(unsigned char* p, uint16_t v) {
  p[0] = static_cast<unsigned char>(v >> 8);
  p[1] = static_cast<unsigned char>(v & 0xff);
}
void put_be32(unsigned char* p, uint32_t v) {
  p[0] = static_cast<unsigned char>(v >> 24);
  p[1] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[3] = static_cast<unsigned char>(v & 0xff);
}
int32_t be32s(const unsigned char* p) { return static_cast<int32_t>(be32(p)); }
int16_t be16s(const unsigned char* p) { return static_cast<int16_t>(be16(p)); }

// 0-based offsets within the binary header (file bytes 3201-3600).
constexpr size_t kBinIntervalOff = 16;  // bytes 3217-3218
constexpr size_t kBinNsOff = 20;        // bytes 3221-3222
constexpr size_t kBinFormatOff = 24;    // bytes 3225-3226

// 0-based offsets within a trace header.
constexpr size_t kTrcScalarOff = 70;   // bytes 71-72, coordinate scalar
constexpr size_t kTrcDelayOff = 108;   // bytes 109-110, delay time [ms]
constexpr size_t kTrcNsOff = 114;      // bytes 115-116
constexpr size_t kTrcDtOff = 116;      // bytes 117-118
constexpr size_t kTrcXOff = 180;       // bytes 181-184, CDP X
constexpr size_t kTrcYOff = 184;       // bytes 185-188, CDP Y
constexpr size_t kTrcInlineOff = 188;  // bytes 189-192
constexpr size_t kTrcXlineOff = 192;   // bytes 193-196

double apply_coord_scalar(int32_t raw, int16_t scalar) {
  if (scalar > 0) return static_cast<double>(raw) * scalar;
  if (scalar < 0) return static_cast<double>(raw) / -scalar;
  return static_cast<double>(raw);
}

}  // namespace

void BinaryHeader::validate() const {
  if (format_code != 1 && format_code != 5)
    throw std::runtime_error("segy: unsupported format code " +
                             std::to_string(format_code) +
                             " (only 1=IBM float and 5=IEEE float)");
  if (samples_per_trace < 1)
    throw std::runtime_error("segy: samples per trace must be >= 1");
  if (sample_interval_us < 1)
    throw std::runtime_error("segy: sample interval must be >= 1 us");
}

double ibm32_to_f64(uint32_t bits) {
  const int sign = (bits >> 31) & 1;
  const int exponent = (bits >> 24) & 0x7f;
  const uint32_t fraction = bits & 0x00ffffff;
  // 0.f * 16^(e-64); ldexp by 4*(e-64) - 24 folds in the 2^-24 of the fraction.
  double value = std::ldexp(static_cast<double>(fraction), 4 * (exponent - 64) - 24);
  return sign ? -value : value;
}

uint32_t f64_to_ieee32_be(double x) {
  const float f = static_cast<float>(x);
  if (std::isfinite(x) && !std::isfinite(f))
    throw std::runtime_error("segy: value " + std::to_string(x) +
                             " overflows IEEE single precision");
  return std::bit_cast<uint32_t>(f);
}

Volume3D read_segy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("segy: cannot open '" + path + "'");
  std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};

  if (buf.size() < kTextHeaderSize + kBinaryHeaderSize)
    throw std::runtime_error("segy: truncated file '" + path +
                             "' (smaller than textual + binary header)");

  const unsigned char* bin = buf.data() + kTextHeaderSize;
  BinaryHeader hdr;
  hdr.sample_interval_us = be16(bin + kBinIntervalOff);
  hdr.samples_per_trace = be16(bin + kBinNsOff);
  hdr.format_code = be16(bin + kBinFormatOff);
  hdr.validate();

  const size_t ns = static_cast<size_t>(hdr.samples_per_trace);
  const size_t trace_bytes = kTraceHeaderSize + 4 * ns;
  const size_t body = buf.size() - kTextHeaderSize - kBinaryHeaderSize;
  if (body == 0) throw std::runtime_error("segy: file '" + path + "' has no traces");
  if (body % trace_bytes != 0)
    throw std::runtime_error("segy: truncated trace at end of '" + path + "'");
  const size_t n_traces = body / trace_bytes;

  struct TraceRec {
    TraceHeader th;
    const unsigned char* data;
    double x, y;
    int16_t delay_ms;
  };
  std::vector<TraceRec> traces;
  traces.reserve(n_traces);

  int il_min = 0, il_max = 0, xl_min = 0, xl_max = 0;
  for (size_t t = 0; t < n_traces; ++t) {
    const unsigned char* p =
        buf.data() + kTextHeaderSize + kBinaryHeaderSize + t * trace_bytes;
    TraceRec rec;
    rec.th.inline_no = be32s(p + kTrcInlineOff);
    rec.th.crossline_no = be32s(p + kTrcXlineOff);
    if (rec.th.inline_no < 0 || rec.th.crossline_no < 0)
      throw std::runtime_error("segy: negative inline/crossline number");
    const int16_t scalar = be16s(p + kTrcScalarOff);
    rec.x = apply_coord_scalar(be32s(p + kTrcXOff), scalar);
    rec.y = apply_coord_scalar(be32s(p + kTrcYOff), scalar);
    rec.delay_ms = be16s(p + kTrcDelayOff);
    rec.data = p + kTraceHeaderSize;
    if (t == 0) {
      il_min = il_max = rec.th.inline_no;
      xl_min = xl_max = rec.th.crossline_no;
    } else {
      il_min = std::min(il_min, rec.th.inline_no);
      il_max = std::max(il_max, rec.th.inline_no);
      xl_min = std::min(xl_min, rec.th.crossline_no);
      xl_max = std::max(xl_max, rec.th.crossline_no);
    }
    traces.push_back(rec);
  }

  const size_t n_il = static_cast<size_t>(il_max - il_min) + 1;
  const size_t n_xl = static_cast<size_t>(xl_max - xl_min) + 1;
  if (n_traces != n_il * n_xl)
    throw std::runtime_error(
        "segy: non-rectangular trace grid (" + std::to_string(n_traces) +
        " traces cannot tile " + std::to_string(n_il) + "x" + std::to_string(n_xl) + ")");

  Volume3D v(static_cast<int>(n_il), static_cast<int>(n_xl), static_cast<int>(ns));
  v.dt = hdr.sample_interval_us * 1e-6;
  v.first_inline = il_min;
  v.first_crossline = xl_min;
  v.t0 = traces.front().delay_ms * 1e-3;

  std::vector<char> seen(n_il * n_xl, 0);
  for (const TraceRec& rec : traces) {
    const size_t ii = static_cast<size_t>(rec.th.inline_no - il_min);
    const size_t jj = static_cast<size_t>(rec.th.crossline_no - xl_min);
    if (seen[ii * n_xl + jj])
      throw std::runtime_error("segy: non-rectangular trace grid (duplicate trace " +
                               std::to_string(rec.th.inline_no) + "/" +
                               std::to_string(rec.th.crossline_no) + ")");
    seen[ii * n_xl + jj] = 1;
    double* dst = &v.at(static_cast<int>(ii), static_cast<int>(jj), 0);
    if (hdr.format_code == 5) {
      for (size_t k = 0; k < ns; ++k)
        dst[k] = static_cast<double>(std::bit_cast<float>(be32(rec.data + 4 * k)));
    } else {
      for (size_t k = 0; k < ns; ++k) dst[k] = ibm32_to_f64(be32(rec.data + 4 * k));
    }
  }

  // Trace spacing from CDP coordinates written as x = crossline_idx * dx,
  // y = inline_idx * dy; falls back to the defaults when coordinates are flat.
  if (n_xl > 1) {
    const double step = traces[1].x - traces[0].x;  // writer emits xl-fastest
    if (step > 0) v.dx = step;
  }
  if (n_il > 1) {
    const double step = traces[n_xl].y - traces[0].y;
    if (step > 0) v.dy = step;
  }
  return v;
}

void write_segy(const Volume3D& v, const std::string& path) {
  v.validate();

  const double interval_us = v.dt * 1e6;
  const int interval = static_cast<int>(std::llround(interval_us));
  if (interval < 1 || interval > 0xffff)
    throw std::runtime_error("segy: dt not representable as 16-bit microseconds");
  if (v.n_samples > 0xffff)
    throw std::runtime_error("segy: too many samples per trace");

  const int delay_ms = static_cast<int>(std::llround(v.t0 * 1e3));
  if (delay_ms < -32768 || delay_ms > 32767)
    throw std::runtime_error("segy: t0 not representable as 16-bit milliseconds");

  std::vector<unsigned char> out(kTextHeaderSize + kBinaryHeaderSize, 0);
  std::memset(out.data(), ' ', kTextHeaderSize);  // textual header: ASCII padding

  put_be16(out.data() + kTextHeaderSize + kBinIntervalOff, static_cast<uint16_t>(interval));
  put_be16(out.data() + kTextHeaderSize + kBinNsOff, static_cast<uint16_t>(v.n_samples));
  put_be16(out.data() + kTextHeaderSize + kBinFormatOff, 5);

  const size_t trace_bytes = kTraceHeaderSize + 4 * static_cast<size_t>(v.n_samples);
  out.reserve(out.size() +
              trace_bytes * static_cast<size_t>(v.n_inlines) * v.n_crosslines);

  std::vector<unsigned char> trc(trace_bytes);
  for (int il = 0; il < v.n_inlines; ++il) {
    for (int xl = 0; xl < v.n_crosslines; ++xl) {
      std::memset(trc.data(), 0, kTraceHeaderSize);
      put_be16(trc.data() + kTrcScalarOff, static_cast<uint16_t>(int16_t{-100}));
      put_be16(trc.data() + kTrcDelayOff, static_cast<uint16_t>(static_cast<int16_t>(delay_ms)));
      put_be16(trc.data() + kTrcNsOff, static_cast<uint16_t>(v.n_samples));
      put_be16(trc.data() + kTrcDtOff, static_cast<uint16_t>(interval));
      put_be32(trc.data() + kTrcXOff,
               static_cast<uint32_t>(std::llround(xl * v.dx * 100.0)));
      put_be32(trc.data() + kTrcYOff,
               static_cast<uint32_t>(std::llround(il * v.dy * 100.0)));
      put_be32(trc.data() + kTrcInlineOff,
               static_cast<uint32_t>(v.first_inline + il));
      put_be32(trc.data() + kTrcXlineOff,
               static_cast<uint32_t>(v.first_crossline + xl));
      unsigned char* s = trc.data() + kTraceHeaderSize;
      for (int k = 0; k < v.n_samples; ++k)
        put_be32(s + 4 * k, f64_to_ieee32_be(v.at(il, xl, k)));
      out.insert(out.end(), trc.begin(), trc.end());
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("segy: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("segy: write failed for '" + path + "'");
}

}  // namespace velgan
