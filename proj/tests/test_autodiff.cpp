#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "stoic/adam.hpp"
#include "stoic/errors.hpp"
#include "stoic/ops.hpp"
#include "stoic/rng.hpp"

using namespace stoic;
using namespace stoic::ad;
using stoic::testing::check_input_gradients;
using stoic::testing::random_tensor;

TEST_CASE("backward: x^2 at 3 gives 6") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3.0));
  t.backward(square(x));
  CHECK(t.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("backward: constant function has zero gradient") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3.0));
  Var c = t.constant(Tensor::scalar(7.0));
  Var y = add(c, scale(x, 0.0));
  t.backward(y);
  CHECK(t.grad(x)[0] == 0.0);
}

TEST_CASE("backward: matmul + sum matches finite differences") {
  RngStream rng(11);
  const Tensor a = random_tensor(3, 4, rng);
  const Tensor b = random_tensor(4, 2, rng);
  const double err = check_input_gradients(
      {a, b}, [](Tape&, const std::vector<Var>& v) { return sum(square(matmul(v[0], v[1]))); });
  CHECK(err < 1e-4);
}

TEST_CASE("backward: error paths") {
  Tape t;
  Var x = t.leaf(Tensor::row({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), ShapeError);
  Var s = sum(square(x));
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), std::logic_error);
  // Intermediates are released after backward.
  CHECK_THROWS_AS((void)s.value(), std::logic_error);
  CHECK(t.grad(x)[1] == doctest::Approx(4.0));
}

TEST_CASE("backward: gradients accumulate across uses of a leaf") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(2.0));
  Var y = add(mul(x, x), scale(x, 3.0));  // x^2 + 3x
  t.backward(y);
  CHECK(t.grad(x)[0] == doctest::Approx(7.0));
}

TEST_CASE("backward is linear in the loss") {
  RngStream rng(5);
  const Tensor x0 = random_tensor(3, 3, rng);
  const double a = 0.7, b = -1.3;
  auto f = [](Var x) { return sum(tanh(matmul(x, x))); };
  auto g = [](Var x) { return sum(square(sigmoid(x))); };
  Tensor gf, gg, gc;
  {
    Tape t;
    Var x = t.leaf(x0);
    t.backward(f(x));
    gf = t.grad(x);
  }
  {
    Tape t;
    Var x = t.leaf(x0);
    t.backward(g(x));
    gg = t.grad(x);
  }
  {
    Tape t;
    Var x = t.leaf(x0);
    t.backward(add(scale(f(x), a), scale(g(x), b)));
    gc = t.grad(x);
  }
  for (std::size_t i = 0; i < gc.size(); ++i) {
    CHECK(gc[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-12));
  }
}

TEST_CASE("every primitive matches finite differences over 20 seeds") {
  using Fn = stoic::testing::InputFn;
  struct Case {
    const char* name;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    Fn f;
  };
  const std::vector<std::size_t> perm = {2, 0, 1, 2};
  const std::vector<Case> cases = {
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, auto& v) { return sum(tanh(matmul(v[0], v[1]))); }},
      {"matmul_nt", {{3, 4}, {2, 4}}, [](Tape&, auto& v) { return sum(tanh(matmul_nt(v[0], v[1]))); }},
      {"add/sub/mul", {{2, 3}, {2, 3}},
       [](Tape&, auto& v) { return sum(mul(add(v[0], v[1]), sub(v[0], tanh(v[1])))); }},
      {"add_row", {{3, 4}, {1, 4}}, [](Tape&, auto& v) { return sum(square(add_row(v[0], v[1]))); }},
      {"mul_col", {{3, 4}, {3, 1}}, [](Tape&, auto& v) { return sum(tanh(mul_col(v[0], v[1]))); }},
      {"sigmoid/softplus", {{2, 5}},
       [](Tape&, auto& v) { return sum(mul(sigmoid(v[0]), softplus(scale(v[0], 2.0)))); }},
      {"log_sigmoid", {{2, 5}}, [](Tape&, auto& v) { return sum(log_sigmoid(scale(v[0], 3.0))); }},
      {"exp/log", {{2, 3}},
       [](Tape&, auto& v) { return sum(log(add_scalar(exp(v[0]), 1.0))); }},
      {"relu", {{3, 3}}, [](Tape&, auto& v) { return sum(square(relu(v[0]))); }},
      {"clamp", {{3, 3}}, [](Tape&, auto& v) { return sum(square(clamp(scale(v[0], 3.0), -1.0, 1.0))); }},
      {"mean/row_sum", {{3, 4}}, [](Tape&, auto& v) { return mean(square(row_sum(v[0]))); }},
      {"segment_mean_rows", {{6, 2}},
       [](Tape&, auto& v) { return sum(square(segment_mean_rows(tanh(v[0]), 3))); }},
      {"transpose/reshape", {{2, 3}, {2, 3}},
       [](Tape&, auto& v) { return sum(tanh(matmul(v[0], reshape(transpose(v[1]), {3, 2})))); }},
      {"concat/slice", {{3, 2}, {3, 3}},
       [](Tape&, auto& v) {
         Var c = concat_cols({v[0], tanh(v[1])});
         return sum(square(slice_cols(c, 1, 3)));
       }},
      {"gather_rows", {{3, 2}}, [perm](Tape&, auto& v) { return sum(square(gather_rows(v[0], perm))); }},
      {"gather_elems", {{2, 2}},
       [](Tape&, auto& v) { return sum(square(gather_elems(v[0], {3, -1, 0, 3}, {2, 2}))); }},
      {"softmax_rows", {{3, 4}, {3, 4}},
       [](Tape&, auto& v) { return sum(mul(softmax_rows(v[0]), v[1])); }},
      {"block_matmul", {{4, 2}, {4, 3}},
       [](Tape&, auto& v) { return sum(tanh(block_matmul(v[0], v[1], 2))); }},
      {"gcn_normalize", {{6, 3}, {6, 3}},
       [](Tape&, auto& v) { return sum(mul(gcn_normalize(square(v[0]), 3), v[1])); }},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      RngStream rng(seed, c.name);
      std::vector<Tensor> in;
      for (auto [r, k] : c.shapes) in.push_back(random_tensor(r, k, rng));
      worst = std::max(worst, check_input_gradients(in, c.f));
    }
    INFO(c.name);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("straight-through: binary forward, identity backward") {
  Tape t;
  Var x = t.leaf(Tensor::row({0.2, 0.7, 0.5}));
  Var y = straight_through(x, 0.5);
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 1.0);
  CHECK(y.value()[2] == 0.0);
  t.backward(sum(scale(y, 2.0)));
  const Tensor g = t.grad(x);
  for (double v : g.values()) CHECK(v == 2.0);
}

TEST_CASE("gcn_normalize rejects negative entries") {
  Tape t;
  Var a = t.constant(Tensor::from_rows({{0.0, -0.1}, {-0.1, 0.0}}));
  CHECK_THROWS_AS(gcn_normalize(a, 2), std::invalid_argument);
}

TEST_CASE("shape mismatches throw") {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 3));
  Var b = t.constant(Tensor::matrix(2, 3));
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, t.constant(Tensor::matrix(3, 2))), ShapeError);
}

TEST_CASE("NaN-scan mode names the producing op") {
  Tape t;
  t.set_nan_check(true);
  Var x = t.constant(Tensor::row({-1.0}));
  try {
    (void)log(x);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("'log'") != std::string::npos);
  }
  Tape quiet;
  quiet.set_nan_check(false);
  Var y = log(quiet.constant(Tensor::row({-1.0})));
  CHECK(std::isnan(y.value()[0]));
}

TEST_CASE("RngStream: equal seeds give equal first 10^6 draws") {
  RngStream a(42), b(42);
  bool equal = true;
  for (int i = 0; i < 1'000'000; ++i) equal = equal && (a.next_u64() == b.next_u64());
  CHECK(equal);
  RngStream c(43);
  CHECK(RngStream(42).next_u64() != c.next_u64());
}

TEST_CASE("RngStream: substreams are independent of parent draws") {
  RngStream a(7);
  RngStream s1 = a.substream("graph");
  (void)a.next_u64();
  RngStream s2 = a.substream("graph");
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(a.substream("graph").next_u64() != a.substream("latent").next_u64());
}

TEST_CASE("RngStream: uniform/normal/logistic moments") {
  RngStream rng(3);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sl = 0, sl2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_MESSAGE((u > 0.0 && u < 1.0), "uniform out of open interval");
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    const double l = rng.logistic();
    sl += l;
    sl2 += l * l;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sl / n) < 0.02);
  CHECK(sl2 / n == doctest::Approx(M_PI * M_PI / 3.0).epsilon(0.03));
}

TEST_CASE("ParamStore: unique names, immutable shapes, groups") {
  ParamStore s(1);
  s.add("nn_h.l0.W", {3, 2});
  s.add("nn_h.l0.b", {3}, Init::kZeros);
  s.add("pte.gru_fwd.W_z", {4, 1});
  CHECK_THROWS(s.add("nn_h.l0.W", {3, 2}));
  CHECK_THROWS_AS(s.set("nn_h.l0.W", Tensor::matrix(2, 3)), ShapeError);
  CHECK(s.groups() == std::vector<std::string>{"nn_h", "pte"});
  for (double v : s.at("nn_h.l0.b").value.values()) CHECK(v == 0.0);
  const double bound = 1.0 / std::sqrt(2.0);
  for (double v : s.at("nn_h.l0.W").value.values()) CHECK(std::abs(v) <= bound);
  // Initialization of one name ignores what else is registered.
  ParamStore other(1);
  other.add("zzz", {5});
  other.add("nn_h.l0.W", {3, 2});
  CHECK(other.at("nn_h.l0.W").value.values() == s.at("nn_h.l0.W").value.values());
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore s(1);
  s.add("w", {3});
  const Tensor before = s.at("w").value;
  adam_step(s);
  CHECK(s.at("w").value.values() == before.values());
  CHECK(s.at("w").step == 1);
}

TEST_CASE("adam: first step is about lr * sign(g)") {
  ParamStore s;
  s.add("w", Tensor::scalar(1.0));
  s.at("w").grad[0] = 0.5;
  adam_step(s, {.lr = 0.001});
  CHECK(s.at("w").value[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
  CHECK(s.at("w").grad[0] == 0.0);
}

TEST_CASE("adam: two-step trace matches hand recurrences") {
  ParamStore s;
  s.add("w", Tensor::scalar(0.0));
  // Hand evaluation, g = 1 both steps:
  // t=1: m=0.1, v=0.001, m^=1, v^=1 -> w = -0.001/(1+1e-8)
  // t=2: m=0.19, v=0.001999, m^=0.19/0.19=1, v^=0.001999/0.001999=1 -> same step again
  const double step = 0.001 / (1.0 + 1e-8);
  s.at("w").grad[0] = 1.0;
  adam_step(s);
  CHECK(s.at("w").value[0] == doctest::Approx(-step).epsilon(1e-12));
  s.at("w").grad[0] = 1.0;
  adam_step(s);
  CHECK(s.at("w").value[0] == doctest::Approx(-2.0 * step).epsilon(1e-12));
  CHECK(s.at("w").m[0] == doctest::Approx(0.19));
  CHECK(s.at("w").v[0] == doctest::Approx(0.001999));
}

TEST_CASE("adam: NaN gradient aborts naming the parameter") {
  ParamStore s;
  s.add("good", Tensor::scalar(1.0));
  s.add("nn_g1.l0.W", Tensor::scalar(1.0));
  s.at("nn_g1.l0.W").grad[0] = std::nan("");
  s.at("good").grad[0] = 1.0;
  try {
    adam_step(s);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("nn_g1.l0.W") != std::string::npos);
  }
  CHECK(s.at("good").value[0] == 1.0);
}

TEST_CASE("tensor finite check") {
  Tensor t = Tensor::row({1.0, INFINITY});
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.check_finite("t"), NumericalError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}
