#include <doctest.h>

#include <random>

#include "lacon/sampler.hpp"
#include "support.hpp"

using namespace lacon;

namespace {

NetConfig small_net() {
  NetConfig c;
  c.side = 4;
  c.hidden = {16, 16};
  return c;
}

// Forwards to a real network and counts evaluations.
class CountingField final : public VelocityField {
 public:
  explicit CountingField(const VelocityField& inner) : inner_(inner) {}
  int data_dim() const override { return inner_.data_dim(); }
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_t, std::span<const double> t, std::span<const int> classes,
                          std::span<const QualityVector> scores) const override {
    ++calls;
    return inner_.predict(x_t, t, classes, scores);
  }
  mutable int calls = 0;

 private:
  const VelocityField& inner_;
};

GuidanceSpec spec(double omega_c, std::array<double, kNumAttributes> omega) {
  const QualityVector base{5.0, 0.5, 800.0, 5.0, 0.5};
  return GuidanceSpec::with_targets(omega_c, omega, base, {7.0, 0.05, 2500.0, 7.0, 0.8});
}

std::vector<int> alternating(int n) {
  std::vector<int> c;
  for (int i = 0; i < n; ++i) c.push_back(i % 2);
  return c;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("mode names round trip") {
    for (GuidanceMode m : {GuidanceMode::cfg, GuidanceMode::lacon_s, GuidanceMode::lacon_a}) {
      CHECK(parse_mode(mode_name(m)) == m);
    }
    CHECK_THROWS(parse_mode("lacon"));
  }

  TEST_CASE("target vectors differ from the base in one attribute") {
    const GuidanceSpec g = spec(3.0, {1, 2, 3, 4, 5});
    for (Attribute a : kAllAttributes) {
      for (Attribute b : kAllAttributes) {
        if (a == b) {
          CHECK(g.s_target[index_of(a)][b] != g.s_base[b]);
        } else {
          CHECK(g.s_target[index_of(a)][b] == g.s_base[b]);
        }
      }
    }
    GuidanceSpec bad = g;
    bad.omega[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS(bad.validate());
    bad = g;
    bad.s_target[0].s_aes = 11.0;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("sampler config validation") {
    SamplerConfig c;
    c.steps = 0;
    CHECK_THROWS(c.validate());
    c.steps = 1;
    c.count = 0;
    CHECK_THROWS(c.validate());
  }

  TEST_CASE("unit class scale returns the conditional velocity") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 1);
    const Eigen::MatrixXd x = initial_noise(16, 4, 2);
    const auto classes = alternating(4);
    const GuidanceSpec g = spec(1.0, {});
    const std::vector<double> t(4, 0.7);
    const std::vector<QualityVector> base(4, g.s_base);
    const Eigen::MatrixXd v_text = net.predict(x, t, classes, base);
    CHECK(lacon_a_velocity(net, x, 0.7, classes, g) == v_text);
    CHECK(cfg_velocity(net, x, 0.7, classes, g.s_base, 1.0) == v_text);
  }

  TEST_CASE("zero class scale is unconditional sampling") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 3);
    const Eigen::MatrixXd x = initial_noise(16, 4, 4);
    const QualityVector s{5, 0.5, 800, 5, 0.5};
    const std::vector<int> nulls(4, kNullClass);
    CHECK(cfg_velocity(net, x, 0.3, alternating(4), s, 0.0) ==
          net.predict(x, std::vector<double>(4, 0.3), nulls, std::vector<QualityVector>(4, s)));
  }

  TEST_CASE("zero attribute scales reproduce plain guidance bit for bit") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 5);
    const auto classes = alternating(6);
    for (double omega_c : {0.0, 1.0, 2.5, 4.0}) {
      const GuidanceSpec g = spec(omega_c, {});
      SamplerConfig cfg;
      cfg.steps = 12;
      cfg.count = 6;
      cfg.seed = 7;
      cfg.mode = GuidanceMode::lacon_a;
      const Eigen::MatrixXd a = lacon_a_sample(net, classes, g, cfg);
      const Eigen::MatrixXd c = euler_sample(net, classes, g.s_base, cfg, omega_c);
      CHECK(a == c);
      cfg.mode = GuidanceMode::cfg;
      CHECK(sample(net, classes, g, g.s_target[0], cfg) == c);
      cfg.mode = GuidanceMode::lacon_s;
      CHECK(sample(net, classes, g, g.s_base, cfg) == c);
    }
  }

  TEST_CASE("evaluation counts per step") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 8);
    CountingField counter(net);
    const auto classes = alternating(3);
    SamplerConfig cfg;
    cfg.steps = 5;
    cfg.count = 3;
    lacon_a_velocity(counter, initial_noise(16, 3, 1), 0.5, classes, spec(2.0, {1, 1, 1, 1, 1}));
    CHECK(counter.calls == 7);
    counter.calls = 0;
    cfg_velocity(counter, initial_noise(16, 3, 1), 0.5, classes, spec(2.0, {}).s_base, 2.0);
    CHECK(counter.calls == 2);
    counter.calls = 0;
    lacon_a_sample(counter, classes, spec(2.0, {}), cfg);
    CHECK(counter.calls == 35);
    counter.calls = 0;
    euler_sample(counter, classes, spec(2.0, {}).s_base, cfg, 2.0);
    CHECK(counter.calls == 10);
  }

  TEST_CASE("combination matches an independent re-evaluation") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 9);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-2.0, 8.0);
    const auto classes = alternating(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd x = initial_noise(16, 5, 100 + trial);
      const double t = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
      const GuidanceSpec g = spec(u(rng), {u(rng), u(rng), u(rng), u(rng), u(rng)});
      const std::vector<double> ts(5, t);
      const std::vector<int> nulls(5, kNullClass);
      const Eigen::MatrixXd v_base = net.predict(x, ts, nulls, std::vector<QualityVector>(5, g.s_base));
      const Eigen::MatrixXd v_text = net.predict(x, ts, classes, std::vector<QualityVector>(5, g.s_base));
      // Regrouped: (1 - omega_c - sum omega_k) v_text ... summed from the last
      // attribute backwards.
      double sum_w = 0.0;
      for (double w : g.omega) sum_w += w;
      Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(16, 5);
      for (int k = static_cast<int>(kNumAttributes) - 1; k >= 0; --k) {
        const auto kk = static_cast<std::size_t>(k);
        expected += g.omega[kk] * net.predict(x, ts, classes, std::vector<QualityVector>(5, g.s_target[kk]));
      }
      expected += (g.omega_c - sum_w) * v_text;
      expected += (1.0 - g.omega_c) * v_base;
      const Eigen::MatrixXd got = lacon_a_velocity(net, x, t, classes, g);
      CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, got.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("each attribute scale contributes linearly") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 11);
    const auto classes = alternating(4);
    const Eigen::MatrixXd x = initial_noise(16, 4, 12);
    const GuidanceSpec zero = spec(2.0, {});
    const Eigen::MatrixXd v0 = lacon_a_velocity(net, x, 0.4, classes, zero);
    for (std::size_t k = 0; k < kNumAttributes; ++k) {
      std::array<double, kNumAttributes> one{};
      one[k] = 1.5;
      std::array<double, kNumAttributes> two{};
      two[k] = 3.0;
      const Eigen::MatrixXd d1 = lacon_a_velocity(net, x, 0.4, classes, spec(2.0, one)) - v0;
      const Eigen::MatrixXd d2 = lacon_a_velocity(net, x, 0.4, classes, spec(2.0, two)) - v0;
      CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("sampling is deterministic and clamped") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 13);
    const auto classes = alternating(8);
    SamplerConfig cfg;
    cfg.steps = 10;
    cfg.count = 8;
    cfg.seed = 99;
    const GuidanceSpec g = spec(4.0, {0, 7, 0, 0, 0});
    for (GuidanceMode m : {GuidanceMode::cfg, GuidanceMode::lacon_s, GuidanceMode::lacon_a}) {
      cfg.mode = m;
      const Eigen::MatrixXd a = sample(net, classes, g, g.s_target[4], cfg);
      CHECK(a == sample(net, classes, g, g.s_target[4], cfg));
      CHECK(a.maxCoeff() <= 1.0);
      CHECK(a.minCoeff() >= -1.0);
    }
    CHECK(initial_noise(16, 3, 5) == initial_noise(16, 3, 5));
    CHECK(initial_noise(16, 3, 5) != initial_noise(16, 3, 6));
    CHECK(initial_noise(16, 3, 5).leftCols(2) == initial_noise(16, 2, 5));
    CHECK_THROWS(euler_sample(net, alternating(3), g.s_base, cfg, 1.0));
  }

  TEST_CASE("non-finite state aborts with the step") {
    struct Exploding final : VelocityField {
      int data_dim() const override { return 4; }
      Eigen::MatrixXd predict(const Eigen::MatrixXd& x, std::span<const double>, std::span<const int>,
                              std::span<const QualityVector>) const override {
        return Eigen::MatrixXd::Constant(x.rows(), x.cols(), std::numeric_limits<double>::infinity());
      }
    } field;
    SamplerConfig cfg;
    cfg.steps = 3;
    CHECK_THROWS_WITH(euler_sample(field, std::vector<int>{0}, {5, 0.5, 800, 5, 0.5}, cfg, 1.0),
                      doctest::Contains("step 1"));
  }

  TEST_CASE("measured outputs match direct signal computation") {
    Eigen::MatrixXd samples(16, 3);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < samples.size(); ++i) samples.data()[i] = u(rng);
    samples.col(1).setConstant(0.2);
    const LabelConfig label{4, make_scorer("heuristic"), make_scorer("corner_tag")};
    const std::vector<QualityVector> q = measure_outputs(samples, 4, label);
    REQUIRE(q.size() == 3);
    CHECK(q[1].s_cla == 0.0);
    CHECK(q[1].s_ent == 0.0);
    CHECK(q[1].s_luma == doctest::Approx(0.6).epsilon(1e-15));
    for (Eigen::Index j = 0; j < 3; ++j) {
      std::vector<double> gray;
      for (Eigen::Index i = 0; i < 16; ++i) gray.push_back(0.5 * (samples(i, j) + 1.0));
      const RgbImage img = gray_to_rgb(4, 4, gray);
      const GrayImage g = to_gray(img);
      const auto jj = static_cast<std::size_t>(j);
      CHECK(q[jj].s_cla == doctest::Approx(clarity(g) * kClarityScale).epsilon(1e-12));
      CHECK(q[jj].s_ent == entropy(g));
      CHECK(q[jj].s_luma == doctest::Approx(luminance(img)).epsilon(1e-15));
      CHECK(q[jj].s_aes == HeuristicAestheticScorer().score(img, ""));
      CHECK(q[jj].s_wat == CornerTagWatermarkScorer().score(img, ""));
    }
    CHECK_THROWS(column_to_image(samples.col(0), 5));
  }

  TEST_CASE("sweep settings move only the swept attribute") {
    const VelocityNet net(small_net(), InjectionKind::gcc, default_anchor_specs(), 15);
    SamplerConfig cfg;
    cfg.steps = 4;
    cfg.count = 6;
    cfg.seed = 1;
    const LabelConfig label{4, make_scorer("heuristic"), make_scorer("corner_tag")};
    const QualityVector base{5, 0.5, 800, 5, 0.5};
    const SweepResult r = sweep_setting(net, 2, 4, base, Attribute::luma, 0.8, cfg, 4.0, 0.0, label);
    CHECK(r.measured.size() == 6);
    CHECK(r.target == 0.8);
    double m = 0.0;
    for (const QualityVector& q : r.measured) m += q.s_luma;
    CHECK(r.mean() == doctest::Approx(m / 6.0).epsilon(1e-14));
    CHECK(r.stddev() >= 0.0);

    QualityVector moved = base;
    moved.s_luma = 0.8;
    const Eigen::MatrixXd direct = euler_sample(net, alternating(6), moved, cfg, 4.0);
    const auto expected = measure_outputs(direct, 4, label);
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(r.measured[i] == expected[i]);
  }
}
