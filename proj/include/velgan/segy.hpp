#pragma once

#include <cstdint>
#include <string>

#include "velgan/volume.hpp"

namespace velgan {

// SEG-Y rev-1 subset: 3200-byte textual header (ASCII padding, ignored on
// read), 400-byte big-endian binary header, then one 240-byte trace header
// plus samples per trace. Only sample format codes 1 (IBM float) and
// 5 (IEEE big-endian float) are accepted; the writer always emits code 5.
struct BinaryHeader {
  int sample_interval_us = 0;  // file bytes 3217-3218
  int samples_per_trace = 0;   // file bytes 3221-3222
  int format_code = 0;         // file bytes 3225-3226

  void validate() const;  // throws on unsupported format / degenerate fields
};

// Inline/crossline numbers live at the rev-1 standard trace-header offsets.
struct TraceHeader {
  int inline_no = 0;     // trace bytes 189-192
  int crossline_no = 0;  // trace bytes 193-196
};

// IBM System/360 hexadecimal float: (-1)^s * 0.f * 16^(e-64) with s = bit 31,
// e = bits 24-30, f = bits 0-23. Every bit pattern decodes by the formula.
double ibm32_to_f64(uint32_t bits);

// IEEE-754 single-precision bit pattern for x, rounded to nearest. Throws if
// a finite x overflows single precision.
uint32_t f64_to_ieee32_be(double x);

// Reads a full volume. Trace (inline, crossline) pairs must tile a dense
// rectangle; holes, duplicates and short files are reported distinctly.
Volume3D read_segy(const std::string& path);

// Writes format-code-5 (IEEE big-endian). Round-trips samples bit-exactly at
// float32 precision along with dt, t0, dx/dy (cm resolution) and the
// first inline/crossline indices. The label tag is not persisted.
void write_segy(const Volume3D& v, const std::string& path);

}  // namespace velgan
