#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "stoic/errors.hpp"
#include "stoic/layers.hpp"

using namespace stoic;
using namespace stoic::ad;
using namespace stoic::nn;
using stoic::testing::random_tensor;

namespace {

void set_scalar_gru(ParamStore& s, const std::string& prefix, std::array<double, 9> v) {
  const char* names[] = {".W_z", ".U_z", ".b_z", ".W_r", ".U_r", ".b_r", ".W_h", ".U_h", ".b_h"};
  for (int i = 0; i < 9; ++i) {
    Parameter& p = s.at(prefix + names[i]);
    p.value.fill(v[i]);
  }
}

const std::array<double, 9> kFwd = {0.5, -0.3, 0.1, 0.2, 0.4, -0.1, 1.0, 0.6, 0.05};
const std::array<double, 9> kBwd = {-0.4, 0.2, 0.0, 0.3, -0.5, 0.2, 0.7, -0.8, -0.1};

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor y = Tensor::matrix(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(perm[i], j);
  return y;
}

}  // namespace

TEST_CASE("mlp: zero weights with identity output give zeros") {
  ParamStore s(1);
  MlpSpec spec{{3, 4, 2}};
  add_mlp(s, "m", spec);
  for (const auto& n : s.names()) s.at(n).value.fill(0.0);
  Tape t;
  Var y = mlp_forward(t, s, "m", spec, t.constant(Tensor::row({1.0, -2.0, 3.0})));
  for (double v : y.value().values()) CHECK(v == 0.0);
}

TEST_CASE("mlp: identity-initialized single layer passes x through") {
  ParamStore s(1);
  MlpSpec spec{{3, 3}};
  add_mlp(s, "m", spec);
  s.set("m.l0.W", Tensor::identity(3));
  Tape t;
  const Tensor x = Tensor::row({0.3, -1.5, 2.0});
  Var y = mlp_forward(t, s, "m", spec, t.constant(x));
  CHECK(y.value().values() == x.values());
}

TEST_CASE("mlp: fixed 2x2 weights") {
  ParamStore s(1);
  MlpSpec spec{{2, 2}};
  add_mlp(s, "m", spec);
  s.set("m.l0.W", Tensor::from_rows({{1, 2}, {3, 4}}));
  s.set("m.l0.b", Tensor({2}, std::vector<double>{0.5, -0.5}));
  Tape t;
  Var y = mlp_forward(t, s, "m", spec, t.constant(Tensor::row({1.0, 1.0})));
  CHECK(y.value()[0] == 3.5);
  CHECK(y.value()[1] == 6.5);
}

TEST_CASE("mlp: input width mismatch") {
  ParamStore s(1);
  MlpSpec spec{{2, 2}};
  add_mlp(s, "m", spec);
  Tape t;
  CHECK_THROWS_AS(mlp_forward(t, s, "m", spec, t.constant(Tensor::row({1.0, 2.0, 3.0}))),
                  ShapeError);
}

TEST_CASE("gru_cell: zero weights and zero state stay at zero") {
  ParamStore s(1);
  add_gru(s, "g", 2, 4);
  for (const auto& n : s.names()) s.at(n).value.fill(0.0);
  Tape t;
  Var h = gru_cell(t, s, "g", t.constant(Tensor::row({5.0, -3.0})), t.constant(Tensor::matrix(1, 4)));
  for (double v : h.value().values()) CHECK(v == 0.0);
}

TEST_CASE("gru_cell: closed update gate copies the state") {
  ParamStore s(1);
  add_gru(s, "g", 1, 3);
  s.at("g.b_z").value.fill(-1000.0);
  Tape t;
  const Tensor h0 = Tensor::row({0.25, -0.5, 0.75});
  Var h = gru_cell(t, s, "g", t.constant(Tensor::row({2.0})), t.constant(h0));
  CHECK(h.value().values() == h0.values());
}

TEST_CASE("gru_cell: scalar hand evaluation") {
  ParamStore s(1);
  add_gru(s, "g", 1, 1);
  set_scalar_gru(s, "g", kFwd);
  Tape t;
  Var h = gru_cell(t, s, "g", t.constant(Tensor::row({0.8})), t.constant(Tensor::row({0.3})));
  CHECK(h.item() == doctest::Approx(0.56382454761685552).epsilon(1e-14));
}

TEST_CASE("gru_cell: shape mismatch") {
  ParamStore s(1);
  add_gru(s, "g", 1, 3);
  Tape t;
  CHECK_THROWS_AS(gru_cell(t, s, "g", t.constant(Tensor::row({1.0})), t.constant(Tensor::matrix(1, 2))),
                  ShapeError);
}

TEST_CASE("bigru: output width, single step symmetry, palindrome symmetry") {
  ParamStore s(3);
  add_bigru(s, "e", 1, 5);
  // Share forward weights into the backward direction.
  for (const auto& n : s.names()) {
    if (n.find("gru_fwd") != std::string::npos) {
      std::string b = n;
      b.replace(b.find("gru_fwd"), 7, "gru_bwd");
      s.set(b, s.at(n).value);
    }
  }
  {
    Tape t;
    Var out = bigru_encode(t, s, "e", Tensor::from_rows({{0.7}, {-0.2}}));
    REQUIRE(out.cols() == 10);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t j = 0; j < 5; ++j) CHECK(out.value()(r, j) == out.value()(r, 5 + j));
  }
  {
    Tape t;
    Var out = bigru_encode(t, s, "e", Tensor::from_rows({{0.1, -0.4, 0.9, -0.4, 0.1}}));
    for (std::size_t j = 0; j < 5; ++j) CHECK(out.value()(0, j) == out.value()(0, 5 + j));
  }
}

TEST_CASE("bigru: reversing the sequence swaps the halves") {
  ParamStore s(4);
  add_bigru(s, "e", 1, 4);
  Tape t;
  Var a = bigru_encode(t, s, "e", Tensor::from_rows({{0.3, -1.1, 0.5, 2.0}}));
  // Swap parameter groups and feed the reversed sequence.
  ParamStore swapped(4);
  add_bigru(swapped, "e", 1, 4);
  for (const auto& n : s.names()) {
    std::string m = n;
    if (m.find("gru_fwd") != std::string::npos) m.replace(m.find("gru_fwd"), 7, "gru_bwd");
    else m.replace(m.find("gru_bwd"), 7, "gru_fwd");
    swapped.set(m, s.at(n).value);
  }
  Tape t2;
  Var b = bigru_encode(t2, swapped, "e", Tensor::from_rows({{2.0, 0.5, -1.1, 0.3}}));
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(a.value()(0, j) == b.value()(0, 4 + j));
    CHECK(a.value()(0, 4 + j) == b.value()(0, j));
  }
}

TEST_CASE("bigru: L=3 scalar manual unroll") {
  ParamStore s(1);
  add_bigru(s, "e", 1, 1);
  set_scalar_gru(s, "e.gru_fwd", kFwd);
  set_scalar_gru(s, "e.gru_bwd", kBwd);
  Tape t;
  Var out = bigru_encode(t, s, "e", Tensor::from_rows({{0.5, -1.0, 2.0}}));
  CHECK(out.value()[0] == doctest::Approx(0.70816637523775994).epsilon(1e-14));
  CHECK(out.value()[1] == doctest::Approx(-0.017353771553207858).epsilon(1e-12));
}

TEST_CASE("bigru: empty sequence") {
  ParamStore s(1);
  add_bigru(s, "e", 1, 2);
  Tape t;
  CHECK_THROWS_AS(bigru_encode(t, s, "e", std::vector<Var>{}), std::invalid_argument);
}

TEST_CASE("gcn: no edges reduces to activation(H W)") {
  RngStream rng(9);
  const Tensor h = random_tensor(3, 2, rng), w = random_tensor(2, 4, rng);
  Tape t;
  Var out = gcn_layer(t.constant(h), t.constant(Tensor::matrix(3, 3)), t.constant(w),
                      Activation::kTanh, 3);
  Var ref = ad::tanh(ad::matmul(t.constant(h), t.constant(w)));
  for (std::size_t i = 0; i < out.value().size(); ++i) CHECK(out.value()[i] == ref.value()[i]);
}

TEST_CASE("gcn: two-node hand computation") {
  Tape t;
  Var out = gcn_layer(t.constant(Tensor::from_rows({{2, 0}, {0, 2}})),
                      t.constant(Tensor::from_rows({{0, 1}, {1, 0}})),
                      t.constant(Tensor::identity(2)), Activation::kIdentity, 2);
  for (double v : out.value().values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gcn: node permutation equivariance") {
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RngStream rng(seed);
    const Tensor h = random_tensor(5, 3, rng), w = random_tensor(3, 2, rng);
    Tensor a = Tensor::matrix(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) a(i, j) = a(j, i) = rng.uniform();
    Tensor pa = Tensor::matrix(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) pa(i, j) = a(perm[i], perm[j]);
    Tape t;
    Var base = gcn_layer(t.constant(h), t.constant(a), t.constant(w), Activation::kRelu, 5);
    Var moved = gcn_layer(t.constant(permute_rows(h, perm)), t.constant(pa), t.constant(w),
                          Activation::kRelu, 5);
    const Tensor expect = permute_rows(base.value(), perm);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(moved.value()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("layer gradients match finite differences over 20 seeds") {
  double mlp_err = 0, gru_err = 0, bigru_err = 0, gcn_err = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RngStream rng(seed, "layer-fd");
    {
      ParamStore s(seed);
      MlpSpec spec{{3, 4, 2}, Activation::kTanh};
      add_mlp(s, "m", spec);
      stoic::testing::randomize(s, rng.substream("p"));
      const Tensor x = random_tensor(4, 3, rng);
      auto r = stoic::testing::check_param_gradients(s, [&](Tape& t, ParamStore& st) {
        return ad::sum(ad::square(mlp_forward(t, st, "m", spec, t.constant(x))));
      });
      mlp_err = std::max(mlp_err, r.worst);
    }
    {
      ParamStore s(seed);
      add_gru(s, "g", 2, 3);
      stoic::testing::randomize(s, rng.substream("p"));
      const Tensor x = random_tensor(2, 2, rng), h = random_tensor(2, 3, rng);
      auto r = stoic::testing::check_param_gradients(s, [&](Tape& t, ParamStore& st) {
        return ad::sum(ad::square(gru_cell(t, st, "g", t.constant(x), t.constant(h))));
      });
      gru_err = std::max(gru_err, r.worst);
      gru_err = std::max(gru_err, stoic::testing::check_input_gradients(
                                      {x, h}, [&](Tape& t, const std::vector<Var>& v) {
                                        return ad::sum(ad::square(gru_cell(t, s, "g", v[0], v[1])));
                                      }));
    }
    {
      ParamStore s(seed);
      add_bigru(s, "e", 1, 3);
      stoic::testing::randomize(s, rng.substream("p"));
      const Tensor seq = random_tensor(2, 4, rng);
      auto r = stoic::testing::check_param_gradients(s, [&](Tape& t, ParamStore& st) {
        return ad::sum(ad::square(bigru_encode(t, st, "e", seq)));
      });
      bigru_err = std::max(bigru_err, r.worst);
    }
    {
      const Tensor h = random_tensor(4, 3, rng), w = random_tensor(3, 2, rng);
      Tensor a = Tensor::matrix(4, 4);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) a(i, j) = 0.1 + 0.9 * rng.uniform();
      gcn_err = std::max(gcn_err, stoic::testing::check_input_gradients(
                                      {h, a, w}, [](Tape&, const std::vector<Var>& v) {
                                        return ad::sum(ad::square(
                                            gcn_layer(v[0], v[1], v[2], Activation::kTanh, 4)));
                                      }));
    }
  }
  CHECK(mlp_err < 1e-4);
  CHECK(gru_err < 1e-4);
  CHECK(bigru_err < 1e-4);
  CHECK(gcn_err < 1e-4);
}
