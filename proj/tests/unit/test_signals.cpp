#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lacon/signals.hpp"
#include "lacon/synth.hpp"
#include "support.hpp"

using namespace lacon;

namespace {

// Straight double loop: pixel centres aligned, coordinates clamped to the
// source grid, four-tap weights recomputed per pixel.
GrayImage bilinear_oracle(const GrayImage& src, int out_w, int out_h) {
  std::vector<double> out;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * src.width() / out_w - 0.5;
      double sy = (y + 0.5) * src.height() / out_h - 0.5;
      sx = std::min(std::max(sx, 0.0), src.width() - 1.0);
      sy = std::min(std::max(sy, 0.0), src.height() - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const int y1 = std::min(y0 + 1, src.height() - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      out.push_back((1 - fx) * (1 - fy) * src(x0, y0) + fx * (1 - fy) * src(x1, y0) + (1 - fx) * fy * src(x0, y1) +
                    fx * fy * src(x1, y1));
    }
  }
  return GrayImage(out_w, out_h, out);
}

double laplacian_variance_oracle(const GrayImage& img) {
  std::vector<double> r;
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      r.push_back(img(x - 1, y) + img(x + 1, y) + img(x, y - 1) + img(x, y + 1) - 4.0 * img(x, y));
    }
  }
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(r.size());
}

// Same-size 3x3 mean filter with replicated edges.
GrayImage box_blur(const GrayImage& img) {
  std::vector<double> out;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          s += img(std::clamp(x + dx, 0, img.width() - 1), std::clamp(y + dy, 0, img.height() - 1));
        }
      }
      out.push_back(s / 9.0);
    }
  }
  return GrayImage(img.width(), img.height(), out);
}

ScorerHandle stub(double v) { return std::make_shared<ConstantScorer>(v); }

}  // namespace

TEST_SUITE("signals") {
  TEST_CASE("scale_normalize keeps images already at the target") {
    std::mt19937_64 rng(1);
    const GrayImage img = test::random_gray(512, 512, rng);
    CHECK(scale_normalize(img, 512) == img);
  }

  TEST_CASE("scale_normalize halves exactly") {
    std::mt19937_64 rng(2);
    const GrayImage out = scale_normalize(test::random_gray(1024, 512, rng), 512);
    CHECK(out.width() == 512);
    CHECK(out.height() == 256);
  }

  TEST_CASE("scale_normalize matches the bilinear oracle") {
    std::mt19937_64 rng(3);
    const GrayImage img = test::random_gray(300, 200, rng);
    const GrayImage out = scale_normalize(img, 512);
    REQUIRE(out.width() == 512);
    REQUIRE(out.height() == 341);
    const GrayImage ref = bilinear_oracle(img, 512, 341);
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out.pixels()[i] - ref.pixels()[i]));
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("scale_normalize portrait and downscale") {
    std::mt19937_64 rng(4);
    const GrayImage img = test::random_gray(30, 70, rng);
    const GrayImage out = scale_normalize(img, 16);
    CHECK(out.height() == 16);
    CHECK(out.width() == 7);  // 30 * 16 / 70 = 6.857
    const GrayImage ref = bilinear_oracle(img, 7, 16);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.pixels()[i] == doctest::Approx(ref.pixels()[i]).epsilon(1e-9));
  }

  TEST_CASE("scale_normalize rejects degenerate results") {
    CHECK_THROWS_WITH(scale_normalize(GrayImage::filled(100, 3, 0.5), 10), "image too small");
    CHECK_THROWS(scale_normalize(GrayImage::filled(8, 8, 0.5), 2));
  }

  TEST_CASE("clarity of a constant image is zero") {
    CHECK(clarity(GrayImage::filled(16, 16, 0.5)) == 0.0);
  }

  TEST_CASE("clarity of a centred impulse matches the convolution oracle") {
    std::vector<double> v(25, 0.0);
    v[12] = 1.0;
    const GrayImage img(5, 5, v);
    // Interior responses: -4 at the centre, 1 at the four neighbours, 0 at the
    // four diagonals.
    const double expected = (16.0 + 4.0) / 9.0;  // responses sum to zero
    CHECK(clarity(img) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(clarity(img) == doctest::Approx(laplacian_variance_oracle(img)).epsilon(1e-15));
  }

  TEST_CASE("clarity matches the oracle on random images") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      const GrayImage img = test::random_gray(3 + i, 20 - i / 2, rng);
      CHECK(clarity(img) == doctest::Approx(laplacian_variance_oracle(img)).epsilon(1e-12));
    }
  }

  TEST_CASE("box blur never raises clarity on the synthetic corpus") {
    for (const SyntheticSample& s : make_synthetic_corpus(200, 17)) {
      const GrayImage g = to_gray(s.image);
      CHECK(clarity(box_blur(g)) <= clarity(g));
    }
  }

  TEST_CASE("clarity ignores a constant offset") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.25, 0.75);
    std::vector<double> v(64), shifted(64);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = unit(rng);
      shifted[i] = v[i] + 0.2;
    }
    CHECK(clarity(GrayImage(8, 8, shifted)) == doctest::Approx(clarity(GrayImage(8, 8, v))).epsilon(1e-12));
  }

  TEST_CASE("entropy trivia") {
    CHECK(entropy(GrayImage::filled(16, 16, 0.3)) == 0.0);

    std::vector<double> ramp(256);
    for (int i = 0; i < 256; ++i) ramp[static_cast<std::size_t>(i)] = i / 255.0;
    CHECK(std::abs(entropy(GrayImage(16, 16, ramp)) - 8.0) <= 1e-9);

    std::vector<double> two(16, 0.0);
    for (int i = 0; i < 4; ++i) two[static_cast<std::size_t>(i)] = 1.0;
    const double expected = -0.75 * std::log2(0.75) - 0.25 * std::log2(0.25);
    CHECK(entropy(GrayImage(4, 4, two)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.8113).epsilon(1e-4));
  }

  TEST_CASE("entropy is bounded and permutation invariant") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
      const GrayImage img = test::random_gray(12, 9, rng);
      const double e = entropy(img);
      CHECK(e >= 0.0);
      CHECK(e <= 8.0);
      std::vector<double> v(img.pixels().begin(), img.pixels().end());
      std::shuffle(v.begin(), v.end(), rng);
      CHECK(entropy(GrayImage(12, 9, v)) == e);
      CHECK(entropy(GrayImage(9, 12, v)) == e);
    }
  }

  TEST_CASE("luminance trivia") {
    CHECK(luminance(RgbImage::filled(8, 8, {1, 1, 1})) == 1.0);
    CHECK(luminance(RgbImage::filled(8, 8, {0, 0, 0})) == 0.0);
    std::vector<Rgb> half(16, Rgb{0.5, 0.5, 0.5});
    for (int i = 0; i < 8; ++i) half[static_cast<std::size_t>(i)] = {1.0, 0.0, 0.0};
    CHECK(luminance(RgbImage(4, 4, half)) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("luminance is invariant to a channel rotation") {
    std::mt19937_64 rng(8);
    const RgbImage img = test::random_rgb(7, 5, rng);
    std::vector<Rgb> rot;
    for (const Rgb& p : img.pixels()) rot.push_back({p.g, p.b, p.r});
    CHECK(luminance(RgbImage(7, 5, rot)) == luminance(img));
  }

  TEST_CASE("grayscale uses BT.601 weights") {
    const GrayImage g = to_gray(RgbImage::filled(3, 3, {0.2, 0.4, 0.6}));
    CHECK(g(1, 1) == doctest::Approx(0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.6).epsilon(1e-15));
  }

  TEST_CASE("label_sample of flat mid-gray") {
    const QualityVector q = label_sample(RgbImage::filled(16, 16, {0.5, 0.5, 0.5}), *stub(5.0), *stub(0.1), 16);
    CHECK(q == QualityVector{5.0, 0.1, 0.0, 0.0, 0.5});
  }

  TEST_CASE("label_sample of a checkerboard") {
    std::vector<double> v;
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) v.push_back((x + y) % 2 == 0 ? 1.0 : 0.0);
    }
    const RgbImage rgb = gray_to_rgb(16, 16, v);
    const QualityVector q = label_sample(rgb, *stub(5.0), *stub(0.1), 16);
    CHECK(q.s_ent == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.s_cla == doctest::Approx(laplacian_variance_oracle(GrayImage(16, 16, v)) * 255.0 * 255.0).epsilon(1e-9));
    CHECK(q.s_luma == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("label_sample stays within declared ranges") {
    std::mt19937_64 rng(9);
    LabelConfig cfg{32, make_scorer("heuristic"), make_scorer("corner_tag")};
    for (int i = 0; i < 30; ++i) {
      const QualityVector q = label_sample(test::random_rgb(5 + i, 40 - i, rng), cfg, "r");
      CHECK(within_declared_ranges(q));
    }
    for (const SyntheticSample& s : make_synthetic_corpus(50, 3)) CHECK(within_declared_ranges(label_sample(s.image, cfg)));
  }

  TEST_CASE("label_sample names an out-of-range scorer") {
    const RgbImage img = RgbImage::filled(8, 8, {0.5, 0.5, 0.5});
    CHECK_THROWS_AS(label_sample(img, ConstantScorer(11.0, "too-high"), *stub(0.1), 8), ScorerError);
    CHECK_THROWS_WITH(label_sample(img, ConstantScorer(11.0, "too-high"), *stub(0.1), 8),
                      doctest::Contains("too-high"));
    CHECK_THROWS_AS(label_sample(img, *stub(5.0), ConstantScorer(1.5), 8), ScorerError);
  }

  TEST_CASE("stub scorers are deterministic") {
    std::mt19937_64 rng(10);
    const RgbImage img = test::random_rgb(16, 16, rng);
    HeuristicAestheticScorer aes;
    CornerTagWatermarkScorer wat;
    CHECK(aes.score(img, "a") == aes.score(img, "a"));
    CHECK(wat.score(img, "a") == wat.score(img, "a"));
  }

  TEST_CASE("corner tag scorer tracks tag opacity") {
    SynthParams p;
    p.tones = 256;
    p.tagged = true;
    CornerTagWatermarkScorer wat;
    double last = -1.0;
    for (double opacity : {0.0, 0.3, 0.6, 1.0}) {
      p.tag_opacity = opacity;
      const double s = wat.score(render_synthetic(p), "x");
      CHECK(s > last);
      last = s;
    }
    CHECK(last > 0.9);
  }

  TEST_CASE("synthetic knobs drive the signals they are meant to") {
    SynthParams p;
    p.contrast = 0.3;
    p.blur_sigma = 0.0;
    SynthParams blurred = p;
    blurred.blur_sigma = 1.5;
    const GrayImage sharp_g = to_gray(render_synthetic(p));
    const GrayImage blur_g = to_gray(render_synthetic(blurred));
    CHECK(clarity(sharp_g) > clarity(blur_g));

    SynthParams dark = p, bright = p;
    dark.brightness = 0.3;
    bright.brightness = 0.7;
    CHECK(luminance(render_synthetic(bright)) > luminance(render_synthetic(dark)));

    SynthParams few = p, many = p;
    few.tones = 2;
    many.tones = 256;
    CHECK(entropy(to_gray(render_synthetic(many))) > entropy(to_gray(render_synthetic(few))));
  }

  TEST_CASE("synthetic corpus is reproducible") {
    const auto a = make_synthetic_corpus(1, 42);
    const auto b = make_synthetic_corpus(1, 42);
    CHECK(a[0].image == b[0].image);
    CHECK(a[0].class_label == b[0].class_label);
    CHECK(synthesize_one(42, 5).image == make_synthetic_corpus(6, 42)[5].image);
    CHECK_THROWS(make_synthetic_corpus(0, 42));
    const auto ref = parse_synth_ref(synth_ref(7, 123));
    REQUIRE(ref.has_value());
    CHECK(ref->seed == 7);
    CHECK(ref->index == 123);
    CHECK_FALSE(parse_synth_ref("synth:x:1").has_value());
  }
}
