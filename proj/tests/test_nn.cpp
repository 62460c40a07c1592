#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "convoy/error.hpp"
#include "convoy/nn.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convoy;
using namespace convoy::nn;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double s = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -s, s);
  return v;
}

// Half the squared norm of the output.
double half_square(std::span<const double> out, std::span<double> grad) {
  double v = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    v += 0.5 * out[k] * out[k];
    grad[k] = out[k];
  }
  return v;
}

}  // namespace

TEST_CASE("shape and parameter count") {
  const DenseNet net({5, 32, 32});
  CHECK(net.parameter_count() == (5 + 1) * 32 + (32 + 1) * 32);
  CHECK(net.layer_count() == 2);
  CHECK(code_of([] { DenseNet({3}); }) == ErrorCode::Shape);
  CHECK(code_of([] { DenseNet({3, 0, 1}); }) == ErrorCode::Shape);
  const std::vector<double> bad(4, 0.0);
  CHECK(code_of([&] { net.forward(bad); }) == ErrorCode::Shape);
}

TEST_CASE("forward examples") {
  DenseNet zero({4, 8, 3});
  const auto out = zero.forward(std::vector<double>{1, -2, 3, 4});
  CHECK(out == std::vector<double>(3, 0.0));
  DenseNet affine({1, 1});
  affine.weight(0, 0, 0) = 2;
  affine.bias(0, 0) = 1;
  CHECK(affine.forward(std::vector<double>{3})[0] == 7.0);
}

TEST_CASE("forward agrees with a matrix-product oracle") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::size_t> widths{static_cast<std::size_t>(uniform_int(rng, 1, 12))};
    const auto depth = uniform_int(rng, 1, 4);
    for (int l = 0; l < depth; ++l) widths.push_back(static_cast<std::size_t>(uniform_int(rng, 1, 20)));
    DenseNet net = DenseNet::glorot(widths, rng);
    for (auto& p : net.params()) p += uniform(rng, -0.1, 0.1);  // non-zero biases too
    const auto x = random_vec(widths.front(), rng, 2.0);
    const auto got = net.forward(x);
    const auto expect = oracle::dense_forward(net, x);
    REQUIRE(got.size() == expect.size());
    for (std::size_t k = 0; k < got.size(); ++k)
      CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("glorot initialization") {
  Rng a(3), b(3);
  const DenseNet n1 = DenseNet::glorot({10, 30, 1}, a), n2 = DenseNet::glorot({10, 30, 1}, b);
  CHECK(n1 == n2);
  const double lim0 = std::sqrt(6.0 / 40.0), lim1 = std::sqrt(6.0 / 31.0);
  for (std::size_t o = 0; o < 30; ++o) {
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(n1.weight(0, o, i)) <= lim0);
    CHECK(n1.bias(0, o) == 0.0);
    CHECK(std::abs(n1.weight(1, 0, o)) <= lim1);
  }
}

TEST_CASE("backward examples") {
  Rng rng(2);
  DenseNet net = DenseNet::glorot({3, 5, 2}, rng);
  DenseNet::Tape tape;
  net.forward(std::vector<double>{0.3, -0.2, 0.9}, tape);
  std::vector<double> g(net.parameter_count(), 0.0), gin(3, 0.0);
  net.backward(tape, std::vector<double>{0, 0}, g, gin);
  CHECK(g == std::vector<double>(g.size(), 0.0));
  CHECK(gin == std::vector<double>(3, 0.0));

  DenseNet scalar({1, 1});
  scalar.weight(0, 0, 0) = -1.5;
  scalar.forward(std::vector<double>{4.25}, tape);
  std::vector<double> gs(2, 0.0), gx(1, 0.0);
  scalar.backward(tape, std::vector<double>{1.0}, gs, gx);
  CHECK(gs[0] == 4.25);
  CHECK(gs[1] == 1.0);
  CHECK(gx[0] == -1.5);
  // Gradients accumulate.
  scalar.backward(tape, std::vector<double>{1.0}, gs, {});
  CHECK(gs[0] == 8.5);
  CHECK(code_of([&] { scalar.backward(tape, std::vector<double>{1.0, 2.0}, gs, {}); }) == ErrorCode::Shape);
}

TEST_CASE("ReLU subgradient at zero is zero") {
  DenseNet net({1, 1, 1});
  net.weight(0, 0, 0) = 1;
  net.weight(1, 0, 0) = 1;
  DenseNet::Tape tape;
  net.forward(std::vector<double>{0.0}, tape);
  std::vector<double> g(net.parameter_count(), 0.0), gx(1, 0.0);
  net.backward(tape, std::vector<double>{1.0}, g, gx);
  CHECK(gx[0] == 0.0);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("gradcheck on random nets") {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    DenseNet net = DenseNet::glorot({4, 16, 16, 3}, rng);
    for (auto& p : net.params()) p += uniform(rng, -0.05, 0.05);
    const auto x = random_vec(4, rng);
    const auto rep = gradcheck(net, x, half_square, 1e-4, 0, static_cast<std::uint64_t>(t));
    INFO("max rel error " << rep.max_rel_error);
    CHECK(rep.passed);
    CHECK(rep.checked > 0);
  }
}

TEST_CASE("gradcheck on a linear net with quadratic loss") {
  Rng rng(4);
  DenseNet net = DenseNet::glorot({6, 3}, rng);
  const auto x = random_vec(6, rng);
  const auto rep = gradcheck(net, x, half_square, 1e-8);
  CHECK(rep.passed);
  CHECK(rep.skipped == 0);
  CHECK(rep.max_rel_error <= 1e-8);
  CHECK_FALSE(gradcheck(net, x, half_square, 0.0).passed);
}

TEST_CASE("gradcheck catches a wrong gradient") {
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> wrong{2.0, 4.4};  // true gradient of x^2 + y^2 is (2, 4)
  auto f = [&] { return GradcheckProbe{p[0] * p[0] + p[1] * p[1], 0}; };
  const auto rep = gradcheck(p, wrong, f, 1e-4, 0, 1);
  CHECK_FALSE(rep.passed);
  CHECK(rep.max_rel_error == doctest::Approx(0.4 / 4.4).epsilon(1e-6));
}

TEST_CASE("adam first step") {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{1.0, 1.0, 1.0};
  AdamState st(3, 0.001);
  adam_step(p, g, st);
  CHECK(st.step == 1);
  CHECK(std::abs((1.0 - p[0]) - 0.001) <= 1e-6);
  CHECK(std::abs((-2.0 - p[1]) - 0.001) <= 1e-6);
  CHECK(std::abs((0.5 - p[2]) - 0.001) <= 1e-6);
}

TEST_CASE("adam with zero gradient only decays the moments") {
  std::vector<double> p{1.0, 2.0};
  AdamState st(2, 0.01);
  st.m = {0.0, 0.0};
  adam_step(p, std::vector<double>{0.0, 0.0}, st);
  CHECK(p == std::vector<double>{1.0, 2.0});
  st.m = {0.5, -0.5};
  st.v = {0.2, 0.2};
  std::vector<double> q{1.0, 2.0};
  AdamState s2 = st;
  adam_step(q, std::vector<double>{0.0, 0.0}, s2);
  CHECK(s2.m[0] == doctest::Approx(0.45));
  CHECK(s2.v[0] == doctest::Approx(0.2 * 0.999));
}

TEST_CASE("adam without momentum is sign descent") {
  std::vector<double> p{0.0, 0.0, 0.0};
  AdamState st(3, 0.05);
  st.beta1 = 0;
  st.beta2 = 0;
  st.epsilon = 1e-300;
  adam_step(p, std::vector<double>{3.0, -0.001, 1e-5}, st);
  CHECK(p[0] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients untouched") {
  std::vector<double> p{1.0, 2.0};
  AdamState st(2, 0.01);
  CHECK(code_of([&] { adam_step(p, std::vector<double>{1.0, NAN}, st); }) == ErrorCode::Numerical);
  CHECK(p == std::vector<double>{1.0, 2.0});
  CHECK(st.step == 0);
  CHECK(code_of([&] { adam_step(p, std::vector<double>{1.0}, st); }) == ErrorCode::Shape);
}

TEST_CASE("adam trajectories are reproducible") {
  auto run = [] {
    Rng rng(42);
    DenseNet net = DenseNet::glorot({3, 8, 1}, rng);
    AdamState st(net.parameter_count(), 0.001);
    for (int it = 0; it < 50; ++it) {
      DenseNet::Tape tape;
      net.forward(random_vec(3, rng), tape);
      std::vector<double> g(net.parameter_count(), 0.0), up(1);
      half_square(tape.output(), up);
      net.backward(tape, up, g, {});
      adam_step(net.params(), g, st);
    }
    return std::vector<double>(net.params().begin(), net.params().end());
  };
  const auto a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint round trip is byte exact") {
  Rng rng(6);
  DenseNet net = DenseNet::glorot({35, 16, 1}, rng);
  net.params()[3] = -0.0;
  net.params()[4] = 1e-310;
  std::stringstream s1;
  net.write(s1);
  const DenseNet back = DenseNet::read(s1);
  CHECK(back.widths() == net.widths());
  std::stringstream s2;
  back.write(s2);
  CHECK(s1.str() == s2.str());
  CHECK(std::signbit(back.params()[3]));
  std::stringstream junk("not a net");
  CHECK(code_of([&] { DenseNet::read(junk); }) == ErrorCode::Io);
  std::string cut = s1.str();
  cut.resize(cut.size() - 3);
  std::stringstream truncated(cut);
  CHECK(code_of([&] { DenseNet::read(truncated); }) == ErrorCode::Io);
}
