#include <cmath>

#include <doctest.h>

#include "gfp/mlp.hpp"
#include "gfp/rng.hpp"

using namespace gfp;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MlpSpec scalar_spec() {
  MlpSpec s;
  s.input_dim = 1;
  s.hidden_dims = {1};
  s.output_dim = 1;
  s.use_layer_norm = false;
  s.time_embed_dim = 0;
  return s;
}

}  // namespace

TEST_CASE("gelu matches the Gaussian-CDF form") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(1.0) == doctest::Approx(0.841345).epsilon(1e-6));
  // The complementary-erf form keeps the deep left tail strictly negative.
  CHECK(gelu(-10.0) < 0.0);
  CHECK(gelu(-10.0) > -1e-20);
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    CHECK(std::abs(gelu(x) - x * phi(x)) < 1e-12);
  }
}

TEST_CASE("gelu derivative agrees with central differences") {
  const double h = 1e-6;
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    double numeric = (gelu(x + h) - gelu(x - h)) / (2 * h);
    CHECK(gelu_derivative(x) == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("layer norm hand cases") {
  Eigen::VectorXd gain = Eigen::VectorXd::Ones(3), offset = Eigen::VectorXd::Zero(3);
  SUBCASE("constant input collapses to zero") {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 4.2);
    Eigen::VectorXd y = layer_norm(x, gain, offset);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == 0.0);
  }
  SUBCASE("two-point symmetric input is nearly preserved") {
    Eigen::VectorXd x(2), g = Eigen::VectorXd::Ones(2), o = Eigen::VectorXd::Zero(2);
    x << -1.0, 1.0;
    Eigen::VectorXd y = layer_norm(x, g, o);
    CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("zero gain collapses to the offset") {
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3), o = Eigen::VectorXd::Constant(3, 0.7);
    Eigen::VectorXd y = layer_norm(x, g, o);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == 0.7);
  }
}

TEST_CASE("layer norm output is standardized for non-constant inputs") {
  Rng rng(10, 0);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + trial;
    Eigen::VectorXd x = rng.normal_vector(n) * 3.0;
    Eigen::VectorXd g = Eigen::VectorXd::Ones(n), o = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = layer_norm(x, g, o);
    CHECK(std::abs(y.mean()) <= 1e-9);
    double var = (y.array() - y.mean()).square().sum() / n;
    CHECK(std::abs(var - 1.0) < 1e-3);
  }
}

TEST_CASE("time embedding boundary values") {
  SUBCASE("zero time: sines zero, cosines one") {
    Eigen::VectorXd e = time_embed(0.0, 6);
    for (int i = 0; i < 3; ++i) CHECK(e[i] == 0.0);
    for (int i = 3; i < 6; ++i) CHECK(e[i] == 1.0);
  }
  SUBCASE("dim 4 at zero") {
    Eigen::VectorXd e = time_embed(0.0, 4);
    CHECK(e[0] == 0.0);
    CHECK(e[1] == 0.0);
    CHECK(e[2] == 1.0);
    CHECK(e[3] == 1.0);
  }
  SUBCASE("dim 2 at t=1 is the sine and cosine of the scaled time") {
    Eigen::VectorXd e = time_embed(1.0, 2);
    CHECK(e[0] == doctest::Approx(0.82688).epsilon(1e-4));
    // cos(1000) is positive; magnitude 0.56238.
    CHECK(e[1] == doctest::Approx(0.5623790762907029).epsilon(1e-9));
  }
  SUBCASE("rejects odd or tiny dims") {
    CHECK_THROWS_AS(time_embed(0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(time_embed(0.5, 0), std::invalid_argument);
  }
}

TEST_CASE("forward pass: zero parameters give zero outputs") {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {8, 8};
  spec.output_dim = 2;
  spec.use_layer_norm = true;
  ParamSet p = shaped_zeros(spec);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  Eigen::MatrixXd y = mlp_forward(spec, p, x);
  CHECK(y.rows() == 2);
  CHECK(y.cols() == 5);
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward pass matches a hand-chained scalar computation") {
  MlpSpec spec = scalar_spec();
  ParamSet p = shaped_zeros(spec);
  const double w = 0.7, b = 0.1, v = 1.3, c = -0.2, x = 1.0;
  p.layers[0].W(0, 0) = w;
  p.layers[0].b[0] = b;
  p.layers[1].W(0, 0) = v;
  p.layers[1].b[0] = c;
  Eigen::MatrixXd in(1, 1);
  in(0, 0) = x;
  double got = mlp_forward(spec, p, in)(0, 0);
  double pre = w * x + b;
  double expected = v * (pre * phi(pre)) + c;
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batch columns are independent") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {16};
  spec.output_dim = 3;
  spec.use_layer_norm = true;
  Rng rng(3, 0);
  ParamSet p = init_params(spec, rng);
  Eigen::MatrixXd one = Eigen::MatrixXd::Random(4, 1);
  Eigen::MatrixXd two(4, 2);
  two << one, one;
  Eigen::MatrixXd y = mlp_forward(spec, p, two);
  for (int i = 0; i < 3; ++i) CHECK(y(i, 0) == y(i, 1));
}

TEST_CASE("shape violations are rejected with descriptive errors") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {8};
  spec.output_dim = 2;
  Rng rng(3, 0);
  ParamSet p = init_params(spec, rng);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Random(5, 2);
  CHECK_THROWS_AS(mlp_forward(spec, p, bad), std::invalid_argument);

  MlpSpec timed = spec;
  timed.time_embed_dim = 8;
  ParamSet pt = init_params(timed, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  // Time batch is mandatory exactly when the spec embeds time.
  CHECK_THROWS_AS(mlp_forward(timed, pt, x), std::invalid_argument);
  Eigen::VectorXd t = Eigen::VectorXd::Constant(2, 0.5);
  CHECK_THROWS_AS(mlp_forward(spec, p, x, &t), std::invalid_argument);
}

TEST_CASE("backward pass: zero output gradients give zero parameter gradients") {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {4};
  spec.output_dim = 2;
  spec.use_layer_norm = true;
  Rng rng(8, 0);
  ParamSet p = init_params(spec, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 3);
  ForwardCache cache;
  mlp_forward(spec, p, x, nullptr, &cache);
  ParamSet g = mlp_backward(spec, p, cache, Eigen::MatrixXd::Zero(2, 3));
  CHECK(g.max_abs() == 0.0);
}

TEST_CASE("backward pass matches analytic scalar derivatives") {
  MlpSpec spec = scalar_spec();
  ParamSet p = shaped_zeros(spec);
  const double w = -0.4, b = 0.25, v = 0.9, x = 1.7;
  p.layers[0].W(0, 0) = w;
  p.layers[0].b[0] = b;
  p.layers[1].W(0, 0) = v;
  p.layers[1].b[0] = 0.0;
  Eigen::MatrixXd in(1, 1);
  in(0, 0) = x;
  ForwardCache cache;
  mlp_forward(spec, p, in, nullptr, &cache);
  Eigen::MatrixXd dOut = Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd dIn;
  ParamSet g = mlp_backward(spec, p, cache, dOut, &dIn);
  const double pre = w * x + b;
  const double act = pre * phi(pre);
  const double dact = gelu_derivative(pre);
  CHECK(g.layers[1].W(0, 0) == doctest::Approx(act).epsilon(1e-10));
  CHECK(g.layers[1].b[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(g.layers[0].W(0, 0) == doctest::Approx(v * dact * x).epsilon(1e-10));
  CHECK(g.layers[0].b[0] == doctest::Approx(v * dact).epsilon(1e-10));
  CHECK(dIn(0, 0) == doctest::Approx(v * dact * w).epsilon(1e-10));
}

TEST_CASE("backward pass rejects a cache built for another shape") {
  MlpSpec a;
  a.input_dim = 2;
  a.hidden_dims = {4};
  a.output_dim = 1;
  MlpSpec b = a;
  b.hidden_dims = {5};
  Rng rng(1, 0);
  ParamSet pa = init_params(a, rng);
  ParamSet pb = init_params(b, rng);
  ForwardCache cache;
  mlp_forward(a, pa, Eigen::MatrixXd::Random(2, 3), nullptr, &cache);
  CHECK_THROWS_AS(mlp_backward(b, pb, cache, Eigen::MatrixXd::Zero(1, 3)),
                  std::invalid_argument);
}

TEST_CASE("initialization draws are deterministic and scale with fan-in") {
  MlpSpec spec;
  spec.input_dim = 64;
  spec.hidden_dims = {64};
  spec.output_dim = 4;
  Rng r1(21, 0), r2(21, 0);
  ParamSet p1 = init_params(spec, r1);
  ParamSet p2 = init_params(spec, r2);
  CHECK((p1.layers[0].W - p2.layers[0].W).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p1.layers[0].b.cwiseAbs().maxCoeff() == 0.0);  // zero biases
  // LeCun scaling: sample std of the 64x64 block is near 1/8.
  double std0 = std::sqrt(p1.layers[0].W.array().square().mean());
  CHECK(std0 == doctest::Approx(1.0 / 8.0).epsilon(0.15));
}
