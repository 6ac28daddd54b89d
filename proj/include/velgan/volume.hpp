#pragma once

#include <string>
#include <vector>

namespace velgan {

// One 2-D section of a volume: n_traces crossline positions by n_samples
// time samples. at(trace, sample) addresses a single value.
struct Section {
  int n_traces = 0;
  int n_samples = 0;
  std::vector<double> v;

  Section() = default;
  Section(int traces, int samples, double fill = 0.0)
      : n_traces(traces), n_samples(samples),
        v(static_cast<size_t>(traces) * samples, fill) {}

  double& at(int trace, int sample) {
    return v[static_cast<size_t>(trace) * n_samples + sample];
  }
  double at(int trace, int sample) const {
    return v[static_cast<size_t>(trace) * n_samples + sample];
  }
  size_t size() const { return v.size(); }
};

// 3-D grid of samples indexed (inline, crossline, time sample), plus the
// geometry metadata needed to interpret it. Immutable by convention once
// built; all pipeline stages return new volumes.
struct Volume3D {
  int n_inlines = 0;
  int n_crosslines = 0;
  int n_samples = 0;
  double dx = 12.5;  // inline-direction trace spacing [m]
  double dy = 12.5;  // crossline-direction trace spacing [m]
  double dt = 0.004; // sample interval [s]
  double t0 = 0.0;   // two-way time of the first sample [s]
  int first_inline = 1;
  int first_crossline = 1;
  std::string label;          // seismic | v_avg | twt | v_int_fwi
  std::vector<double> samples;

  Volume3D() = default;
  Volume3D(int il, int xl, int ns, double fill = 0.0)
      : n_inlines(il), n_crosslines(xl), n_samples(ns),
        samples(static_cast<size_t>(il) * xl * ns, fill) {}

  double& at(int il, int xl, int k) {
    return samples[(static_cast<size_t>(il) * n_crosslines + xl) * n_samples + k];
  }
  double at(int il, int xl, int k) const {
    return samples[(static_cast<size_t>(il) * n_crosslines + xl) * n_samples + k];
  }
  size_t size() const { return samples.size(); }

  // Throws std::runtime_error naming the violated invariant: dimensions >= 1,
  // dt/dx/dy > 0, all samples finite.
  void validate() const;
};

// Copy of the (crossline x time) section at inline index i. Returns a copy,
// not a view; the source volume is never aliased.
Section slice_inline(const Volume3D& v, int i);

}  // namespace velgan
