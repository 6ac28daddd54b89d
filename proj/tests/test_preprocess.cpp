#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "velgan/preprocess.hpp"
#include "velgan/rng.hpp"
#include "velgan/synth.hpp"

using namespace velgan;

namespace {

Volume3D from_values(const std::vector<double>& vals) {
  Volume3D v(1, static_cast<int>(vals.size()), 1);
  v.samples = vals;
  return v;
}

Region full(const Volume3D& v) { return {0, v.n_crosslines}; }

}  // namespace

TEST_CASE("compute_clip_stats uses population statistics") {
  SUBCASE("constant volume") {
    Volume3D v(2, 3, 4, 7.5);
    const ClipStats s = compute_clip_stats(v, full(v));
    CHECK(s.mu == doctest::Approx(7.5));
    CHECK(s.sigma == doctest::Approx(0.0));
  }
  SUBCASE("hand example {0,0,4,4}") {
    const Volume3D v = from_values({0, 0, 4, 4});
    const ClipStats s = compute_clip_stats(v, full(v));
    CHECK(s.mu == doctest::Approx(2.0));
    CHECK(s.sigma == doctest::Approx(2.0));
  }
  SUBCASE("order independence") {
    const ClipStats a = compute_clip_stats(from_values({1, 9, 5, 3}), {0, 4});
    const ClipStats b = compute_clip_stats(from_values({9, 3, 1, 5}), {0, 4});
    CHECK(a.mu == doctest::Approx(b.mu));
    CHECK(a.sigma == doctest::Approx(b.sigma));
  }
  SUBCASE("empty region") {
    Volume3D v(1, 4, 1, 0.0);
    CHECK_THROWS(compute_clip_stats(v, Region{2, 2}));
  }
}

TEST_CASE("clip_two_sigma clamps into [mu-2s, mu+2s]") {
  const ClipStats s{10.0, 2.0};
  Volume3D v = from_values({10.0, 20.0, -3.0, 13.9});
  const Volume3D c = clip_two_sigma(v, s);
  CHECK(c.samples[0] == 10.0);  // at the mean: unchanged
  CHECK(c.samples[1] == 14.0);  // mu + 5 sigma clamps to mu + 2 sigma
  CHECK(c.samples[2] == 6.0);
  CHECK(c.samples[3] == 13.9);

  Rng rng(4);
  Volume3D r(3, 8, 16);
  for (double& x : r.samples) x = rng.normal(0.0, 5.0);
  const ClipStats rs = compute_clip_stats(r, full(r));
  const Volume3D rc = clip_two_sigma(r, rs);
  for (double x : rc.samples) {
    CHECK(x >= rs.mu - 2 * rs.sigma - 1e-12);
    CHECK(x <= rs.mu + 2 * rs.sigma + 1e-12);
  }
}

TEST_CASE("crop_water_column") {
  SUBCASE("top_index 0 is the identity") {
    Volume3D v(1, 2, 8, 3.0);
    const Volume3D c = crop_water_column(v, 0);
    CHECK(c.n_samples == 8);
    CHECK(c.t0 == v.t0);
  }
  SUBCASE("751-sample TWT volume cropped at 100 starts at 0.4 s") {
    Volume3D twt(1, 2, 751);
    twt.dt = 0.004;
    for (int xl = 0; xl < 2; ++xl)
      for (int k = 0; k < 751; ++k) twt.at(0, xl, k) = k * 0.004;
    const Volume3D c = crop_water_column(twt, 100);
    CHECK(c.n_samples == 651);
    CHECK(c.at(0, 0, 0) == doctest::Approx(0.4));
    CHECK(c.t0 == doctest::Approx(0.4));
  }
  SUBCASE("cropping commutes with inline slicing") {
    Rng rng(6);
    Volume3D v(3, 4, 16);
    for (double& x : v.samples) x = rng.uniform();
    const Section a = slice_inline(crop_water_column(v, 5), 2);
    const Section b_full = slice_inline(v, 2);
    for (int tr = 0; tr < 4; ++tr)
      for (int k = 5; k < 16; ++k) CHECK(a.at(tr, k - 5) == b_full.at(tr, k));
  }
  SUBCASE("out of range") {
    Volume3D v(1, 1, 4, 0.0);
    CHECK_THROWS(crop_water_column(v, 4));
    CHECK_THROWS(crop_water_column(v, -1));
  }
}

TEST_CASE("normalize and denormalize realize the min/max mapping") {
  const NormStats n{100.0, 300.0};
  SUBCASE("endpoints and midpoint") {
    const Volume3D v = from_values({100.0, 300.0, 200.0});
    const Volume3D o = normalize(v, n);
    CHECK(o.samples[0] == 0.0);
    CHECK(o.samples[1] == 1.0);
    CHECK(o.samples[2] == 0.5);
    const Volume3D back = denormalize(o, n);
    CHECK(back.samples[0] == doctest::Approx(100.0));
    CHECK(back.samples[1] == doctest::Approx(300.0));
    CHECK(back.samples[2] == doctest::Approx(200.0));
  }
  SUBCASE("round trip within 1e-9 on random in-range values") {
    Rng rng(8);
    Volume3D v(2, 4, 8);
    for (double& x : v.samples) x = rng.uniform(100.0, 300.0);
    const Volume3D rt = denormalize(normalize(v, n), n);
    for (size_t i = 0; i < v.samples.size(); ++i)
      CHECK(std::abs(rt.samples[i] - v.samples[i]) < 1e-9);
  }
  SUBCASE("out-of-range values clamp instead of erroring") {
    const Volume3D v = from_values({50.0, 400.0});
    const Volume3D o = normalize(v, n);
    CHECK(o.samples[0] == 0.0);
    CHECK(o.samples[1] == 1.0);
  }
  SUBCASE("degenerate stats rejected") {
    CHECK_THROWS(normalize(from_values({1.0}), NormStats{5.0, 5.0}));
  }
}

TEST_CASE("norm stats come from the stated region only (leakage guard)") {
  Volume3D v(1, 10, 1);
  for (int xl = 0; xl < 10; ++xl) v.at(0, xl, 0) = xl;  // test region holds 7,8,9
  const NormStats n = compute_norm_stats(v, Region{0, 7});
  CHECK(n.x_min == 0.0);
  CHECK(n.x_max == 6.0);  // never sees the test region
  const ClipStats c = compute_clip_stats(v, Region{0, 7});
  CHECK(c.mu == doctest::Approx(3.0));
}

TEST_CASE("split_train_test") {
  SUBCASE("3001 crosslines at 0.70 give (2101, 900)") {
    CHECK(split_boundary(3001, 0.70) == 2101);
    Volume3D v(1, 3001, 1, 0.0);
    const auto [train, test] = split_train_test({&v}, SplitSpec{0.70});
    CHECK(train.width() == 2101);
    CHECK(test.width() == 900);
    CHECK(train.xl_end == test.xl_begin);  // disjoint contiguous cover
    CHECK(train.xl_begin == 0);
    CHECK(test.xl_end == 3001);
  }
  SUBCASE("empty side is an error") {
    CHECK_THROWS(split_boundary(10, 0.999));
    CHECK_THROWS(split_boundary(10, 0.001));
    CHECK_THROWS(split_boundary(10, 1.5));
  }
  SUBCASE("geometry mismatch") {
    Volume3D a(1, 8, 2, 0.0), b(1, 9, 2, 0.0);
    CHECK_THROWS(split_train_test({&a, &b}, SplitSpec{0.5}));
  }
}

TEST_CASE("stack_channels fixes the channel order") {
  Patch a(4, 4), b(4, 4), c(4, 4);
  std::fill(a.v.begin(), a.v.end(), 0.1f);
  std::fill(b.v.begin(), b.v.end(), 0.2f);
  std::fill(c.v.begin(), c.v.end(), 0.3f);
  const std::vector<Patch> s = stack_channels(a, b, c);
  REQUIRE(s.size() == 3);
  CHECK(s[0].v[0] == 0.1f);
  CHECK(s[1].v[0] == 0.2f);
  CHECK(s[2].v[0] == 0.3f);
  const std::vector<Patch> s2 = stack_channels(a, b, c);
  for (int i = 0; i < 3; ++i)
    for (size_t q = 0; q < s[i].v.size(); ++q) CHECK(s[i].v[q] == s2[i].v[q]);

  Patch bad(4, 5);
  CHECK_THROWS(stack_channels(a, b, bad));
}

namespace {

PreparedDataset tiny_prepared(int input_channels = 3) {
  GeoModelConfig cfg;
  cfg.n_inlines = 4;
  cfg.n_crosslines = 96;
  cfg.n_samples = 48;
  cfg.n_layers = 5;
  cfg.seed = 21;
  const DatasetManifest m = build_dataset(cfg, "velgan_test_tmp/prep_ds");
  PreprocessConfig pc;
  pc.crop_top = 4;
  pc.patch_size = 16;
  pc.n_train_patches = 24;
  pc.n_test_patches = 10;
  pc.input_channels = input_channels;
  pc.seed = 77;
  return prepare_dataset(m, pc);
}

}  // namespace

TEST_CASE("sample_patches draws inside the region, deterministically") {
  const PreparedDataset prep = tiny_prepared();
  REQUIRE(static_cast<int>(prep.train_patches.size()) == 24);
  REQUIRE(static_cast<int>(prep.test_patches.size()) == 10);

  const int S = prep.stats.patch_size;
  for (const PatchPair& p : prep.train_patches) {
    CHECK(p.crossline_off >= prep.train_region.xl_begin);
    CHECK(p.crossline_off + S <= prep.train_region.xl_end);
    CHECK(p.time_off + S <= prep.vol[0].n_samples);
    CHECK(p.inline_idx < prep.vol[0].n_inlines);
    REQUIRE(p.input.size() == 3);
    for (const Patch& ch : p.input)
      for (float v : ch.v) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
      }
  }
  for (const PatchPair& p : prep.test_patches) {
    CHECK(p.crossline_off >= prep.test_region.xl_begin);
    CHECK(p.crossline_off + S <= prep.test_region.xl_end);
  }

  SUBCASE("same seed reproduces origins byte-identically") {
    const PreparedDataset again = tiny_prepared();
    for (size_t i = 0; i < prep.train_patches.size(); ++i) {
      CHECK(prep.train_patches[i].inline_idx == again.train_patches[i].inline_idx);
      CHECK(prep.train_patches[i].crossline_off ==
            again.train_patches[i].crossline_off);
      CHECK(prep.train_patches[i].time_off == again.train_patches[i].time_off);
      for (size_t q = 0; q < prep.train_patches[i].target.v.size(); ++q)
        CHECK(prep.train_patches[i].target.v[q] == again.train_patches[i].target.v[q]);
    }
  }

  SUBCASE("train and test crossline ranges are disjoint") {
    int train_max = 0, test_min = 1 << 30;
    for (const PatchPair& p : prep.train_patches)
      train_max = std::max(train_max, p.crossline_off + S - 1);
    for (const PatchPair& p : prep.test_patches)
      test_min = std::min(test_min, p.crossline_off);
    CHECK(train_max < test_min);
  }

  SUBCASE("ablation mode stacks the seismic channel only") {
    const PreparedDataset one = tiny_prepared(1);
    REQUIRE(one.train_patches[0].input.size() == 1);
    // identical origins as the 3-channel draw: same seed, same draw count
    CHECK(one.train_patches[0].inline_idx == prep.train_patches[0].inline_idx);
  }

  SUBCASE("window that does not fit is an error") {
    CHECK_THROWS(sample_patches(prep.vol[0], prep.vol[1], prep.vol[2], prep.vol[3],
                                Region{0, 8}, 4, 16, 1, 3));
  }
}

TEST_CASE("prepared volumes are normalized with train-region statistics") {
  const PreparedDataset prep = tiny_prepared();
  for (int i = 0; i < 4; ++i) {
    for (double v : prep.vol[i].samples) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(prep.stats.norm[i].x_max > prep.stats.norm[i].x_min);
  }
  // train-region extrema hit the endpoints exactly
  const Volume3D& v0 = prep.vol[0];
  double lo = 2.0, hi = -1.0;
  for (int il = 0; il < v0.n_inlines; ++il)
    for (int xl = prep.train_region.xl_begin; xl < prep.train_region.xl_end; ++xl)
      for (int k = 0; k < v0.n_samples; ++k) {
        lo = std::min(lo, v0.at(il, xl, k));
        hi = std::max(hi, v0.at(il, xl, k));
      }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("FrozenStats round-trips through the key-value carrier") {
  const PreparedDataset prep = tiny_prepared();
  KeyValueFile kv;
  prep.stats.to_kv(kv);
  const FrozenStats back = FrozenStats::from_kv(kv);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.clip[i].mu == prep.stats.clip[i].mu);
    CHECK(back.clip[i].sigma == prep.stats.clip[i].sigma);
    CHECK(back.norm[i].x_min == prep.stats.norm[i].x_min);
    CHECK(back.norm[i].x_max == prep.stats.norm[i].x_max);
  }
  CHECK(back.crop_top == prep.stats.crop_top);
  CHECK(back.boundary_index == prep.stats.boundary_index);
  CHECK(back.patch_size == prep.stats.patch_size);
  CHECK(back.input_channels == prep.stats.input_channels);
}
