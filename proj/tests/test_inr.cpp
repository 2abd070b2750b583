#include <catch2/catch_amalgamated.hpp>

#include "infusion/inr.hpp"
#include "infusion/phantom.hpp"

using namespace infusion;

TEST_CASE("encoding of the origin is all cosines one, sines zero") {
  Rng rng(1);
  FourierEncoding<double> enc;
  enc.setup(16, 2, 10.0, rng);
  Mat<double> r = Mat<double>::Zero(2, 3);
  Mat<double> g = enc.encode(r);
  REQUIRE(g.rows() == 32);
  REQUIRE(g.cols() == 3);
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      REQUIRE(g(i, j) == 1.0);
      REQUIRE(g(16 + i, j) == 0.0);
    }
}

TEST_CASE("encoding entries are bounded by one") {
  Rng rng(2);
  FourierEncoding<double> enc;
  enc.setup(64, 2, 10.0, rng);
  Mat<double> r(2, 50);
  Rng c(3);
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = c.uniform();
  Mat<double> g = enc.encode(r);
  REQUIRE(g.array().abs().maxCoeff() <= 1.0);
}

TEST_CASE("frequency matrix is drawn once and reused") {
  Rng a(5), b(5);
  FourierEncoding<double> e1, e2;
  e1.setup(8, 2, 10.0, a);
  e2.setup(8, 2, 10.0, b);
  REQUIRE((e1.B - e2.B).cwiseAbs().maxCoeff() == 0.0);
  // the scale multiplies the draws
  Rng c(5);
  FourierEncoding<double> e3;
  e3.setup(8, 2, 5.0, c);
  REQUIRE(((e1.B * 0.5) - e3.B).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coordinate grids use voxel centers in [0, 1]") {
  auto r2 = coordinate_grid_2d<double>(4, 8);
  REQUIRE(r2.rows() == 2);
  REQUIRE(r2.cols() == 32);
  // first column: iy = 0, ix = 0
  REQUIRE(r2(0, 0) == Catch::Approx(0.5 / 8.0));
  REQUIRE(r2(1, 0) == Catch::Approx(0.5 / 4.0));
  // column for iy = 2, ix = 5
  REQUIRE(r2(0, 2 * 8 + 5) == Catch::Approx(5.5 / 8.0));
  REQUIRE(r2(1, 2 * 8 + 5) == Catch::Approx(2.5 / 4.0));
  REQUIRE(r2.maxCoeff() < 1.0);
  REQUIRE(r2.minCoeff() > 0.0);

  auto r3 = coordinate_grid_3d<double>(3, 4, 8);
  REQUIRE(r3.rows() == 3);
  REQUIRE(r3.cols() == 96);
  const Eigen::Index i = (2 * 4 + 1) * 8 + 6;  // iz=2, iy=1, ix=6
  REQUIRE(r3(0, i) == Catch::Approx(6.5 / 8.0));
  REQUIRE(r3(1, i) == Catch::Approx(1.5 / 4.0));
  REQUIRE(r3(2, i) == Catch::Approx(2.5 / 3.0));
}

TEST_CASE("network shapes follow the options") {
  InrOptions o;
  o.fourier_features = 128;
  o.hidden = 256;
  o.hidden_layers = 4;
  o.out_dim = 2;
  Rng rng(7);
  Inr<double> net;
  net.setup(o, rng);
  REQUIRE(net.layers.size() == 5);
  REQUIRE(net.layers[0].W.value.rows() == 256);
  REQUIRE(net.layers[0].W.value.cols() == 256);  // 2 * 128 encoded inputs
  REQUIRE(net.layers[4].W.value.rows() == 2);
  REQUIRE(net.layers[4].W.value.cols() == 256);
  const std::size_t expect =
      256 * 256 + 256 + 3 * (256 * 256 + 256) + 2 * 256 + 2;
  REQUIRE(net.param_count() == expect);
}

TEST_CASE("same seed gives the same network, different seeds differ") {
  InrOptions o;
  o.fourier_features = 16;
  o.hidden = 32;
  auto eval = [&](std::uint64_t seed) {
    Rng rng(seed);
    Inr<float> net;
    net.setup(o, rng);
    Mat<float> enc = net.enc.encode(coordinate_grid_2d<float>(8, 8));
    return Mat<float>(net.forward(enc, false));
  };
  Mat<float> a = eval(3), b = eval(3), c = eval(4);
  REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0f);
  REQUIRE((a - c).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("analytic parameter gradients match finite differences") {
  InrOptions o;
  o.fourier_features = 4;
  o.hidden = 8;
  o.hidden_layers = 2;
  o.out_dim = 2;
  Rng rng(11);
  Inr<double> net;
  net.setup(o, rng);
  const Mat<double> enc = net.enc.encode(coordinate_grid_2d<double>(8, 8));

  ComplexArray<double> target({8, 8});
  Rng t(12);
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = {t.uniform(-1, 1), t.uniform(-1, 1)};

  auto loss_of = [&]() {
    Mat<double> out = net.forward(enc, false);
    double L = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double dr = out(0, Eigen::Index(i)) - target[i].real();
      const double di = out(1, Eigen::Index(i)) - target[i].imag();
      L += dr * dr + di * di;
    }
    return L;
  };

  // The network is piecewise linear in its parameters; a difference quotient
  // that straddles a relu kink measures the wrong piece. Comparing the
  // activation sign pattern at the two probe points detects that case.
  auto relu_pattern = [&]() {
    net.forward(enc, true);
    std::vector<std::uint8_t> s;
    for (const auto& z : net.pre_acts)
      for (Eigen::Index i = 0; i < z.size(); ++i)
        s.push_back(z.data()[i] > 0 ? 1 : 0);
    return s;
  };

  // analytic pass
  Mat<double> out = net.forward(enc, true);
  Mat<double> dout(out.rows(), out.cols());
  for (std::size_t i = 0; i < target.size(); ++i) {
    dout(0, Eigen::Index(i)) = 2.0 * (out(0, Eigen::Index(i)) - target[i].real());
    dout(1, Eigen::Index(i)) = 2.0 * (out(1, Eigen::Index(i)) - target[i].imag());
  }
  net.backward(dout);

  Rng pick(13);
  auto params = collect_params<double>(
      [&](const ParamVisitor<double>& v) { net.visit_params(v); });
  int checked = 0;
  for (auto* p : params) {
    for (int k = 0; k < 4; ++k) {
      const Eigen::Index idx =
          Eigen::Index(pick.uniform_index(std::uint64_t(p->value.size())));
      const double eps = 1e-5;
      const double orig = p->value(idx);
      p->value(idx) = orig + eps;
      const auto pat_p = relu_pattern();
      const double lp = loss_of();
      p->value(idx) = orig - eps;
      const auto pat_m = relu_pattern();
      const double lm = loss_of();
      p->value(idx) = orig;
      if (pat_p != pat_m) continue;
      const double fd = (lp - lm) / (2 * eps);
      const double an = p->grad(idx);
      if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
      REQUIRE(std::abs(fd - an) <=
              1e-3 * std::max({std::abs(fd), std::abs(an), 1e-8}));
      ++checked;
    }
  }
  REQUIRE(checked >= 20);
}

TEST_CASE("off-grid evaluation is finite and continuous") {
  InrOptions o;
  o.fourier_features = 16;
  o.hidden = 32;
  Rng rng(17);
  Inr<double> net;
  net.setup(o, rng);

  Mat<double> r(2, 1);
  r << 0.3137, 0.7205;  // deliberately between voxel centers
  Mat<double> base = net.forward(net.enc.encode(r), false);
  REQUIRE(std::isfinite(base(0, 0)));
  REQUIRE(std::isfinite(base(1, 0)));

  double prev = -1.0;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    Mat<double> shifted = r;
    shifted(0, 0) += delta;
    Mat<double> out = net.forward(net.enc.encode(shifted), false);
    const double change = (out - base).cwiseAbs().maxCoeff();
    if (prev >= 0.0) REQUIRE(change < prev * 0.5);
    prev = change;
  }
  REQUIRE(prev < 1e-2);
}

TEST_CASE("head channel layout maps to image and volume containers") {
  Mat<double> out(2, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    out(0, i) = double(i);
    out(1, i) = -double(i);
  }
  auto img = output_to_image(out, 2, 3);
  REQUIRE(img.at2(1, 2) == std::complex<double>(5.0, -5.0));

  Mat<double> h(4, 6);  // two slices
  for (Eigen::Index i = 0; i < 6; ++i) {
    h(0, i) = 1;
    h(1, i) = 2;
    h(2, i) = 3;
    h(3, i) = 4;
  }
  auto vol = output_to_volume_hybrid(h, 2, 2, 3);
  REQUIRE(vol.at3(0, 0, 0) == std::complex<double>(1, 2));
  REQUIRE(vol.at3(1, 1, 2) == std::complex<double>(3, 4));

  Mat<double> c(2, 12);
  c.setZero();
  c(0, 11) = 9;
  auto volc = output_to_volume_coord(c, 2, 2, 3);
  REQUIRE(volc.at3(1, 1, 2) == std::complex<double>(9, 0));

  REQUIRE_THROWS_AS(output_to_image(out, 3, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(output_to_volume_hybrid(h, 3, 2, 3), std::invalid_argument);
}

TEST_CASE("gradient packing mirrors the head layout") {
  ComplexArray<double> g({2, 2});
  g.at2(0, 0) = {1, 2};
  g.at2(1, 1) = {3, 4};
  Mat<double> d = image_grad_to_output(g);
  REQUIRE(d(0, 0) == 1.0);
  REQUIRE(d(1, 0) == 2.0);
  REQUIRE(d(0, 3) == 3.0);
  REQUIRE(d(1, 3) == 4.0);

  ComplexArray<double> gv({2, 1, 2});
  gv.at3(1, 0, 1) = {5, 6};
  Mat<double> dv = volume_grad_to_output_hybrid(gv);
  REQUIRE(dv.rows() == 4);
  REQUIRE(dv(2, 1) == 5.0);
  REQUIRE(dv(3, 1) == 6.0);
}

TEST_CASE("supervised fit reduces the loss substantially") {
  auto target = make_phantom<float>(32, 32, 41);
  InrOptions o;
  o.fourier_features = 64;
  o.hidden = 128;
  Rng rng(42);
  Inr<float> net;
  net.setup(o, rng);
  auto losses = fit_to_image(net, target, 300, 1e-3);
  REQUIRE(losses.size() == 300);
  REQUIRE(losses.back() < 0.05 * losses.front());
}

TEST_CASE("a stalled fit raises a numerical failure") {
  auto target = make_phantom<float>(32, 32, 43);
  InrOptions o;
  o.fourier_features = 8;
  o.hidden = 16;
  Rng rng(44);
  Inr<float> net;
  net.setup(o, rng);
  // zero learning rate pins the loss, which counts as no progress
  REQUIRE_THROWS_AS(fit_to_image(net, target, 400, 0.0), NumericalFailure);
}
