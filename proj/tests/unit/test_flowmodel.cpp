#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lacon/checkpoint.hpp"
#include "lacon/curation.hpp"
#include "lacon/flowmodel.hpp"
#include "lacon/trainer.hpp"
#include "support.hpp"

using namespace lacon;

namespace {

constexpr InjectionKind kAllKinds[] = {InjectionKind::gcc, InjectionKind::linear_interpolation,
                                       InjectionKind::discrete_binning, InjectionKind::fourier_feature};

NetConfig tiny_net() {
  NetConfig c;
  c.side = 2;  // D = 4
  c.cond_dim = 4;
  c.class_dim = 4;
  c.hidden = {8, 8};
  c.num_classes = 2;
  return c;
}

FlowBatch random_batch(int dim, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FlowBatch b;
  b.x = Eigen::MatrixXd(dim, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < b.x.cols(); ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) b.x(i, j) = 2.0 * u(rng) - 1.0;
    b.classes.push_back(static_cast<int>(j % 2));
    b.scores.push_back({10 * u(rng), u(rng), 3500 * u(rng), 8 * u(rng), u(rng)});
  }
  return b;
}

Manifest small_manifest(std::size_t n, std::uint64_t seed) {
  LabelConfig cfg{16, make_scorer("heuristic"), make_scorer("corner_tag")};
  return build_manifest(synthetic_corpus(n, seed), cfg, 1).manifest;
}

TrainConfig quick_config(int steps) {
  TrainConfig c;
  c.seed = 5;
  c.steps = steps;
  c.batch_size = 8;
  c.net.hidden = {16, 16};
  return c;
}

// Central differences at h = 1e-5 carry ~1e-11 absolute round-off, so the
// relative error is taken against at least 1e-6.
constexpr double kGradFloor = 1e-6;

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradFloor}); }

}  // namespace

TEST_SUITE("flowmodel") {
  TEST_CASE("interpolate endpoints are exact") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(5, 3), eps(5, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = n(rng);
      eps.data()[i] = n(rng);
    }
    CHECK(interpolate(x, eps, 0.0) == x);
    CHECK(interpolate(x, eps, 1.0) == eps);
    CHECK(interpolate(Eigen::MatrixXd::Zero(4, 1), Eigen::MatrixXd::Ones(4, 1), 0.5) ==
          Eigen::MatrixXd::Constant(4, 1, 0.5));
    CHECK_THROWS(interpolate(x, Eigen::MatrixXd::Zero(4, 3), 0.5));
  }

  TEST_CASE("preconditioning coefficients") {
    const Preconditioning p1 = preconditioning(1.0, 0.5);
    CHECK(p1.c_in == 1.0);
    CHECK(p1.c_skip == 1.0);
    CHECK(p1.c_out == 0.5);
    const Preconditioning p0 = preconditioning(0.0, 0.5);
    CHECK(p0.c_in == doctest::Approx(2.0));
    CHECK(p0.c_skip == doctest::Approx(-1.0));
    CHECK(p0.c_out == doctest::Approx(1.0));
    // The skip term is the least-squares optimal linear predictor of eps - x
    // from x_t for data of std sigma_d, and c_out is the residual std.
    for (double t : {0.1, 0.4, 0.8}) {
      const double s2 = 0.25;
      const double var_xt = (1 - t) * (1 - t) * s2 + t * t;
      const double cov = t - (1 - t) * s2;
      const Preconditioning p = preconditioning(t, 0.5);
      CHECK(p.c_skip == doctest::Approx(cov / var_xt).epsilon(1e-14));
      CHECK(p.c_out * p.c_out == doctest::Approx(1 + s2 - cov * cov / var_xt).epsilon(1e-14));
    }
  }

  TEST_CASE("network input width and determinism") {
    const NetConfig cfg = tiny_net();
    const VelocityNet net(cfg, InjectionKind::gcc, default_anchor_specs(), 3);
    CHECK(net.input_dim() == 4 + 3 + 4 + 5 * 4);
    const FlowBatch b = random_batch(4, 6, 2);
    const std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const Eigen::MatrixXd a = net.predict(b.x, t, b.classes, b.scores);
    CHECK(a.allFinite());
    CHECK(a == net.predict(b.x, t, b.classes, b.scores));
    CHECK(a == VelocityNet(cfg, InjectionKind::gcc, default_anchor_specs(), 3).predict(b.x, t, b.classes, b.scores));
    CHECK(a != VelocityNet(cfg, InjectionKind::gcc, default_anchor_specs(), 4).predict(b.x, t, b.classes, b.scores));
    const VelocityNet copy = net;
    CHECK(copy.predict(b.x, t, b.classes, b.scores) == a);
    std::vector<int> bad = b.classes;
    bad[0] = 2;
    CHECK_THROWS(net.predict(b.x, t, bad, b.scores));
    CHECK_THROWS(net.predict(b.x, std::vector<double>{0.5}, b.classes, b.scores));
  }

  TEST_CASE("config validation") {
    NetConfig n = tiny_net();
    CHECK_NOTHROW(n.validate());
    n.hidden = {8, 0};
    CHECK_THROWS(n.validate());
    n = tiny_net();
    n.data_std = 0.0;
    CHECK_THROWS(n.validate());
    TrainConfig t;
    t.p_drop = 1.0;
    CHECK_THROWS(t.validate());
    t.p_drop = -0.1;
    CHECK_THROWS(t.validate());
    t = TrainConfig{};
    t.batch_size = 0;
    CHECK_THROWS(t.validate());
  }

  TEST_CASE("zero output layer leaves only the skip term") {
    VelocityNet net(tiny_net(), InjectionKind::gcc, default_anchor_specs(), 4);
    net.output_layer().weight().value.setZero();
    net.output_layer().bias().value.setZero();
    const FlowBatch b = random_batch(4, 16, 5);
    nn::Rng rng(6);
    const FlowNoise noise = draw_flow_noise(b.size(), 4, 0.1, rng);
    double sum = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double t = noise.t[j];
      const double skip = preconditioning(t, 0.5).c_skip;
      for (int i = 0; i < 4; ++i) {
        const double x = b.x(i, static_cast<Eigen::Index>(j));
        const double e = noise.eps(i, static_cast<Eigen::Index>(j));
        const double v = skip * ((1 - t) * x + t * e);
        sum += (v - (e - x)) * (v - (e - x));
      }
    }
    CHECK(fm_loss(net, b, noise) == doctest::Approx(sum / (16.0 * 4.0)).epsilon(1e-13));
    CHECK(flow_loss_value(net, b, noise) == doctest::Approx(sum / 64.0).epsilon(1e-13));
  }

  TEST_CASE("loss is zero for a field that outputs the target") {
    struct Oracle final : VelocityField {
      const FlowBatch* batch;
      const FlowNoise* noise;
      int data_dim() const override { return 4; }
      Eigen::MatrixXd predict(const Eigen::MatrixXd&, std::span<const double>, std::span<const int>,
                              std::span<const QualityVector>) const override {
        return noise->eps - batch->x;
      }
    };
    const FlowBatch b = random_batch(4, 8, 7);
    nn::Rng rng(8);
    const FlowNoise noise = draw_flow_noise(b.size(), 4, 0.1, rng);
    Oracle o;
    o.batch = &b;
    o.noise = &noise;
    CHECK(flow_loss_value(o, b, noise) == 0.0);
  }

  TEST_CASE("flow noise draws") {
    nn::Rng rng(9);
    const FlowNoise n = draw_flow_noise(4000, 3, 0.25, rng);
    int dropped = 0;
    for (std::size_t i = 0; i < n.t.size(); ++i) {
      CHECK(n.t[i] > 0.0);
      CHECK(n.t[i] < 1.0);
      dropped += n.drop[i] ? 1 : 0;
    }
    CHECK(dropped == doctest::Approx(1000).epsilon(0.1));
    CHECK(std::abs(n.eps.mean()) < 0.05);
    nn::Rng none(9);
    const FlowNoise z = draw_flow_noise(500, 3, 0.0, none);
    for (char d : z.drop) CHECK(d == 0);
  }

  TEST_CASE("loss is non-negative and invariant to batch permutation") {
    const VelocityNet net(tiny_net(), InjectionKind::gcc, default_anchor_specs(), 10);
    const FlowBatch b = random_batch(4, 12, 11);
    nn::Rng rng(12);
    const FlowNoise noise = draw_flow_noise(b.size(), 4, 0.3, rng);
    const double loss = flow_loss_value(net, b, noise);
    CHECK(loss >= 0.0);

    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 shuffle_rng(13);
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    FlowBatch pb = b;
    FlowNoise pn = noise;
    for (std::size_t j = 0; j < perm.size(); ++j) {
      const auto src = static_cast<Eigen::Index>(perm[j]);
      pb.x.col(static_cast<Eigen::Index>(j)) = b.x.col(src);
      pb.classes[j] = b.classes[perm[j]];
      pb.scores[j] = b.scores[perm[j]];
      pn.eps.col(static_cast<Eigen::Index>(j)) = noise.eps.col(src);
      pn.t[j] = noise.t[perm[j]];
      pn.drop[j] = noise.drop[perm[j]];
    }
    CHECK(flow_loss_value(net, pb, pn) == doctest::Approx(loss).epsilon(1e-12));
  }

  TEST_CASE("every parameter gradient matches central differences") {
    for (InjectionKind kind : kAllKinds) {
      CAPTURE(injection_name(kind));
      VelocityNet net(tiny_net(), kind, default_anchor_specs(), 14);
      const FlowBatch b = random_batch(4, 10, 15);
      nn::Rng rng(16);
      FlowNoise noise = draw_flow_noise(b.size(), 4, 0.3, rng);
      noise.drop[0] = 1;
      fm_loss(net, b, noise);

      const double h = 1e-5;
      double worst = 0.0;
      std::size_t checked = 0;
      for (nn::Param* p : net.parameters()) {
        const Eigen::MatrixXd analytic = p->grad;
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          const double orig = p->value.data()[i];
          p->value.data()[i] = orig + h;
          const double up = flow_loss_value(net, b, noise);
          p->value.data()[i] = orig - h;
          const double down = flow_loss_value(net, b, noise);
          p->value.data()[i] = orig;
          const double numeric = (up - down) / (2 * h);
          worst = std::max(worst, rel_error(analytic.data()[i], numeric));
          ++checked;
        }
      }
      CHECK(checked > 400);
      CHECK(worst <= 1e-4);
    }
  }

  TEST_CASE("gradients are cleared between loss evaluations") {
    VelocityNet net(tiny_net(), InjectionKind::gcc, default_anchor_specs(), 17);
    const FlowBatch b = random_batch(4, 6, 18);
    nn::Rng rng(19);
    const FlowNoise noise = draw_flow_noise(b.size(), 4, 0.1, rng);
    fm_loss(net, b, noise);
    std::vector<Eigen::MatrixXd> first;
    for (nn::Param* p : net.parameters()) first.push_back(p->grad);
    fm_loss(net, b, noise);
    std::size_t i = 0;
    for (nn::Param* p : net.parameters()) CHECK(p->grad == first[i++]);
  }

  TEST_CASE("non-finite loss is reported") {
    VelocityNet net(tiny_net(), InjectionKind::gcc, default_anchor_specs(), 20);
    FlowBatch b = random_batch(4, 4, 21);
    b.x(0, 0) = std::numeric_limits<double>::quiet_NaN();
    nn::Rng rng(22);
    CHECK_THROWS_AS(fm_loss(net, b, 0.1, rng), std::runtime_error);
  }

  TEST_CASE("image columns map intensities to [-1, 1]") {
    const Eigen::VectorXd c = image_to_column(RgbImage::filled(4, 4, {1.0, 1.0, 1.0}));
    CHECK(c.size() == 16);
    CHECK(c.isConstant(1.0));
    CHECK(image_to_column(RgbImage::filled(4, 4, {0, 0, 0})).isConstant(-1.0));
  }

  TEST_CASE("zero-step training returns the initialization") {
    const Manifest m = small_manifest(20, 3);
    const TrainConfig cfg = quick_config(0);
    const TrainResult r = train(m, cfg, InjectionKind::gcc, default_anchor_specs());
    CHECK(r.loss_curve.empty());
    CHECK(r.checkpoint.step == 0);
    const VelocityNet init(cfg.net, InjectionKind::gcc, default_anchor_specs(), cfg.seed);
    const auto a = r.checkpoint.net.parameters();
    const auto b = init.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    CHECK(loss_curve_csv(r.loss_curve) == "step,loss\n");
  }

  TEST_CASE("training is a pure function of its inputs") {
    const Manifest m = small_manifest(30, 4);
    const TrainConfig cfg = quick_config(15);
    for (InjectionKind kind : kAllKinds) {
      const TrainResult a = train(m, cfg, kind, default_anchor_specs());
      const TrainResult b = train(m, cfg, kind, default_anchor_specs());
      CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));
      CHECK(loss_curve_csv(a.loss_curve) == loss_curve_csv(b.loss_curve));
      CHECK(a.loss_curve.size() == 15);
      for (const LossPoint& p : a.loss_curve) CHECK(std::isfinite(p.loss));
    }
    TrainConfig other = cfg;
    other.seed = 6;
    CHECK(serialize_checkpoint(train(m, other, InjectionKind::gcc, default_anchor_specs()).checkpoint) !=
          serialize_checkpoint(train(m, cfg, InjectionKind::gcc, default_anchor_specs()).checkpoint));
  }

  TEST_CASE("training lowers the loss on a fixed batch") {
    const Manifest m = small_manifest(64, 5);
    TrainConfig cfg = quick_config(300);
    cfg.batch_size = 32;
    const TrainingSet data = load_training_set(m, 16);
    FlowBatch b{data.images, data.classes, data.scores};
    nn::Rng rng(7);
    const FlowNoise noise = draw_flow_noise(b.size(), 256, 0.0, rng);
    const VelocityNet init(cfg.net, InjectionKind::gcc, default_anchor_specs(), cfg.seed);
    const TrainResult r = train(data, cfg, InjectionKind::gcc, default_anchor_specs());
    CHECK(flow_loss_value(r.checkpoint.net, b, noise) < flow_loss_value(init, b, noise));
  }

  TEST_CASE("training rejects bad inputs") {
    CHECK_THROWS(train(Manifest{}, quick_config(1), InjectionKind::gcc, default_anchor_specs()));
    const Manifest m = small_manifest(4, 6);
    TrainConfig wrong_side = quick_config(1);
    wrong_side.net.side = 8;
    CHECK_THROWS(train(m, wrong_side, InjectionKind::gcc, default_anchor_specs()));
  }

  TEST_CASE("checkpoint round trip is bit-exact") {
    const Manifest m = small_manifest(20, 7);
    const TrainResult r = train(m, quick_config(5), InjectionKind::fourier_feature, default_anchor_specs());
    const std::string bytes = serialize_checkpoint(r.checkpoint);
    const Checkpoint back = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    CHECK(back.step == 5);
    CHECK(back.config_digest == r.checkpoint.config_digest);
    CHECK(back.s_base_default == r.checkpoint.s_base_default);
    CHECK(back.net.strategy() == InjectionKind::fourier_feature);

    const FlowBatch b = random_batch(256, 5, 8);
    const std::vector<double> t{0.9, 0.7, 0.5, 0.3, 0.1};
    CHECK(back.net.predict(b.x, t, b.classes, b.scores) == r.checkpoint.net.predict(b.x, t, b.classes, b.scores));

    test::TempDir dir("ckpt");
    save_checkpoint(dir / "c.bin", r.checkpoint);
    CHECK(test::read_file(dir / "c.bin") == bytes);
    CHECK_FALSE(std::filesystem::exists(dir / "c.bin.tmp"));
    CHECK(serialize_checkpoint(load_checkpoint(dir / "c.bin")) == bytes);

    CHECK_THROWS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)));
    CHECK_THROWS(deserialize_checkpoint(bytes + "x"));
    CHECK_THROWS(deserialize_checkpoint("NOTACKPT" + bytes.substr(8)));
  }

  TEST_CASE("config digest tracks every training input") {
    const TrainConfig base = quick_config(10);
    const std::string d = train_config_digest(base, InjectionKind::gcc, default_anchor_specs());
    CHECK(d.size() == 64);
    CHECK(d == train_config_digest(base, InjectionKind::gcc, default_anchor_specs()));
    TrainConfig lr = base;
    lr.adam.learning_rate = 2e-3;
    CHECK(d != train_config_digest(lr, InjectionKind::gcc, default_anchor_specs()));
    CHECK(d != train_config_digest(base, InjectionKind::discrete_binning, default_anchor_specs()));
    AnchorSpecs specs = default_anchor_specs();
    specs[0].sigma = 0.6;
    CHECK(d != train_config_digest(base, InjectionKind::gcc, specs));
  }

  TEST_CASE("train config JSON round trip rejects unknown keys") {
    const TrainConfig c = quick_config(42);
    const TrainConfig back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    nlohmann::json j = to_json(c);
    j["momentum"] = 0.5;
    CHECK_THROWS(train_config_from_json(j));
    j = to_json(c);
    j["net"]["depth"] = 3;
    CHECK_THROWS(train_config_from_json(j));
    CHECK(anchor_specs_from_json(to_json(default_anchor_specs()))[2].clip_max == 3000.0);
  }

  TEST_CASE("loss curve CSV") {
    const std::vector<LossPoint> curve{{1, 0.5}, {2, 0.25}};
    CHECK(loss_curve_csv(curve) == "step,loss\n1,0.5\n2,0.25\n");
  }
}
