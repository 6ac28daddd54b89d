#include "velgan/volume.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace velgan {

void Volume3D::validate() const {
  if (n_inlines < 1 || n_crosslines < 1 || n_samples < 1)
    throw std::runtime_error("volume: all dimensions must be >= 1, got " +
                             std::to_string(n_inlines) + "x" +
                             std::to_string(n_crosslines) + "x" +
                             std::to_string(n_samples));
  if (!(dt > 0.0)) throw std::runtime_error("volume: dt must be > 0");
  if (!(dx > 0.0) || !(dy > 0.0))
    throw std::runtime_error("volume: dx and dy must be > 0");
  if (samples.size() != static_cast<size_t>(n_inlines) * n_crosslines * n_samples)
    throw std::runtime_error("volume: sample count does not match dimensions");
  for (double s : samples)
    if (!std::isfinite(s))
      throw std::runtime_error("volume: samples contain NaN/Inf");
}

Section slice_inline(const Volume3D& v, int i) {
  if (i < 0 || i >= v.n_inlines)
    throw std::out_of_range("slice_inline: inline index " + std::to_string(i) +
                            " out of range [0," + std::to_string(v.n_inlines) + ")");
  Section s(v.n_crosslines, v.n_samples);
  const size_t off = static_cast<size_t>(i) * v.n_crosslines * v.n_samples;
  std::copy(v.samples.begin() + off,
            v.samples.begin() + off + s.size(), s.v.begin());
  return s;
}

}  // namespace velgan
