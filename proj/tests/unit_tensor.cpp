#include <cmath>
#include <vector>

#include "doctest.h"
#include "gsamr/error.hpp"
#include "gsamr/gradcheck.hpp"
#include "gsamr/nn.hpp"
#include "gsamr/tensor.hpp"

using namespace gsamr;

namespace {

Tensor randn(const Shape& shape, Rng& rng, bool requires_grad = false) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.normal();
  return Tensor::leaf(shape, std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  Tensor t = Tensor::from_values({2}, {0.0, 0.0});
  Tensor s = softmax_rows(t);
  CHECK(s.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.values()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and masked entries are exactly zero") {
  Rng rng(7);
  Tensor t = randn({5, 9}, rng);
  std::vector<std::uint8_t> mask(45, 1);
  mask[3] = 0;
  mask[9 + 7] = 0;
  Tensor s = softmax_rows_masked(t, mask);
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 9; ++j) sum += s.values()[i * 9 + j];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(s.values()[3] == 0.0);
  CHECK(s.values()[9 + 7] == 0.0);
}

TEST_CASE("fully masked softmax row raises") {
  Tensor t = Tensor::from_values({1, 3}, {1.0, 2.0, 3.0});
  std::vector<std::uint8_t> mask(3, 0);
  CHECK_THROWS_AS(softmax_rows_masked(t, mask), NumericError);
}

TEST_CASE("gradient of sum(softmax(x)) vanishes") {
  Rng rng(3);
  Tensor x = randn({6}, rng, true);
  Tensor loss = sum_all(softmax_rows(x));
  loss.backward();
  for (double g : x.grad()) CHECK(std::fabs(g) < 1e-12);
}

TEST_CASE("layer norm of a constant vector is zero before affine") {
  ParameterStore store;
  Rng rng(1);
  Tensor gain = Tensor::leaf({4}, {1, 1, 1, 1}, false);
  Tensor bias = Tensor::leaf({4}, {0, 0, 0, 0}, false);
  Tensor x = Tensor::from_values({1, 4}, {3.5, 3.5, 3.5, 3.5});
  Tensor y = layer_norm_rows(x, gain, bias);
  for (double v : y.values()) CHECK(std::fabs(v) < 1e-9);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(11);
  Tensor a = randn({3, 4}, rng);
  Tensor b = randn({4, 2}, rng);
  double err = grad_check(
      [](const std::vector<Tensor>& in) { return sum_all(matmul(in[0], in[1])); }, {a, b});
  CHECK(err < 1e-6);
}

TEST_CASE("softmax plus cross entropy gradient matches finite differences") {
  Rng rng(12);
  Tensor logits = randn({7}, rng);
  double err = grad_check(
      [](const std::vector<Tensor>& in) {
        Tensor p = softmax_rows(in[0]);
        return neg(log_of(at(p, 2)));
      },
      {logits});
  CHECK(err < 1e-6);
}

TEST_CASE("core op gradients pass finite-difference checks") {
  Rng rng(13);
  auto check = [](const char* what, double err) {
    INFO(what);
    CHECK(err <= 1e-4);
  };
  check("add-broadcast", grad_check(
                             [](const std::vector<Tensor>& in) {
                               return sum_all(mul(add(in[0], in[1]), add(in[0], in[1])));
                             },
                             {randn({3, 5}, rng), randn({5}, rng)}));
  check("transpose-mul", grad_check(
                             [](const std::vector<Tensor>& in) {
                               return sum_all(matmul(transpose(in[0]), in[0]));
                             },
                             {randn({4, 3}, rng)}));
  check("relu", grad_check([](const std::vector<Tensor>& in) { return sum_all(relu(in[0])); },
                           {randn({17}, rng)}));
  check("layer-norm", grad_check(
                          [](const std::vector<Tensor>& in) {
                            Tensor y = layer_norm_rows(in[0], in[1], in[2]);
                            return sum_all(mul(y, y));
                          },
                          {randn({3, 6}, rng), randn({6}, rng), randn({6}, rng)}));
  check("masked-softmax", grad_check(
                              [](const std::vector<Tensor>& in) {
                                std::vector<std::uint8_t> mask(12, 1);
                                mask[1] = 0;
                                mask[7] = 0;
                                Tensor s = softmax_rows_masked(in[0], mask);
                                return sum_all(mul(s, s));
                              },
                              {randn({3, 4}, rng)}));
  check("log-softmax", grad_check(
                           [](const std::vector<Tensor>& in) {
                             return neg(at(log_softmax_vec(in[0]), 1));
                           },
                           {randn({5}, rng)}));
  check("max-over-rows", grad_check(
                             [](const std::vector<Tensor>& in) {
                               Tensor m = max_over_rows(in[0]);
                               return sum_all(mul(m, m));
                             },
                             {randn({4, 6}, rng)}));
  check("maximum", grad_check(
                       [](const std::vector<Tensor>& in) {
                         return sum_all(mul(maximum(in[0], in[1]), maximum(in[0], in[1])));
                       },
                       {randn({8}, rng), randn({8}, rng)}));
  check("unfold", grad_check(
                      [](const std::vector<Tensor>& in) {
                        Tensor u = unfold_rows(in[0], 3);
                        return sum_all(mul(u, u));
                      },
                      {randn({6, 2}, rng)}));
  check("concat-slice", grad_check(
                            [](const std::vector<Tensor>& in) {
                              Tensor c = concat_cols({in[0], in[1]});
                              Tensor s = slice_cols(c, 1, 3);
                              return sum_all(mul(s, s));
                            },
                            {randn({2, 2}, rng), randn({2, 3}, rng)}));
  check("gather-sum", grad_check(
                          [](const std::vector<Tensor>& in) {
                            return gather_sum(mul(in[0], in[0]), {0, 2, 2, 4});
                          },
                          {randn({6}, rng)}));
  check("embed", grad_check(
                     [](const std::vector<Tensor>& in) {
                       Tensor e = embed_rows(in[0], {1, 0, 1});
                       return sum_all(mul(e, e));
                     },
                     {randn({3, 4}, rng)}));
  check("clamp", grad_check(
                     [](const std::vector<Tensor>& in) {
                       return sum_all(clamp_min(in[0], 0.25));
                     },
                     {randn({9}, rng)}));
}

TEST_CASE("scaled dot attention against hand-computed two-head case") {
  // Two heads of width 2 (d_k = 2), three keys. Computed independently with
  // explicit loops below.
  Rng rng(21);
  Tensor q = randn({1, 4}, rng);
  Tensor k = randn({3, 4}, rng);
  Tensor v = randn({3, 4}, rng);
  AttentionOutput out = scaled_dot_attention(q, k, v, 2, nullptr);

  const double inv = 1.0 / std::sqrt(2.0);
  std::vector<double> expect_ctx(4, 0.0);
  std::vector<double> expect_w(6, 0.0);
  for (int h = 0; h < 2; ++h) {
    double scores[3];
    double mx = -1e300;
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int t = 0; t < 2; ++t) {
        s += q.values()[h * 2 + t] * k.values()[j * 4 + h * 2 + t];
      }
      scores[j] = s * inv;
      mx = std::max(mx, scores[j]);
    }
    double denom = 0.0;
    for (int j = 0; j < 3; ++j) denom += std::exp(scores[j] - mx);
    for (int j = 0; j < 3; ++j) {
      const double w = std::exp(scores[j] - mx) / denom;
      expect_w[h * 3 + j] = w;
      for (int t = 0; t < 2; ++t) expect_ctx[h * 2 + t] += w * v.values()[j * 4 + h * 2 + t];
    }
  }
  for (int i = 0; i < 4; ++i) CHECK(out.context.values()[i] == doctest::Approx(expect_ctx[i]).epsilon(1e-12));
  for (int i = 0; i < 6; ++i) CHECK(out.weights.values()[i] == doctest::Approx(expect_w[i]).epsilon(1e-12));
}

TEST_CASE("attention with one key puts full weight on it") {
  Rng rng(22);
  Tensor q = randn({2, 4}, rng);
  Tensor k = randn({1, 4}, rng);
  Tensor v = randn({1, 4}, rng);
  AttentionOutput out = scaled_dot_attention(q, k, v, 2, nullptr);
  for (double w : out.weights.values()) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("attention with identical keys is uniform") {
  Rng rng(23);
  Tensor q = randn({1, 4}, rng);
  std::vector<double> krow(4);
  for (auto& x : krow) x = rng.normal();
  std::vector<double> kv;
  for (int i = 0; i < 5; ++i) kv.insert(kv.end(), krow.begin(), krow.end());
  Tensor k = Tensor::from_values({5, 4}, kv);
  Tensor v = randn({5, 4}, rng);
  AttentionOutput out = scaled_dot_attention(q, k, v, 1, nullptr);
  for (double w : out.weights.values()) CHECK(w == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("dropout is identity in eval mode and scales in train mode") {
  Rng rng(31);
  Tensor x = randn({1000}, rng);
  Tensor eval_out = dropout(x, 0.4, false, nullptr);
  CHECK(eval_out.values() == x.values());

  Rng drng(5);
  Tensor train_out = dropout(x, 0.4, true, &drng);
  int kept = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    if (train_out.values()[i] != 0.0) {
      ++kept;
      CHECK(train_out.values()[i] == doctest::Approx(x.values()[i] / 0.6).epsilon(1e-12));
    }
  }
  CHECK(kept > 500);
  CHECK(kept < 700);
}

TEST_CASE("char cnn output size is fixed and differentiable") {
  ParameterStore store;
  Rng rng(41);
  CharCnn cnn(store, "cnn", 10, 4, 8, 3, 5, rng);
  Tensor a = cnn.apply({1, 2, 3, 4, 5}, 0);
  CHECK(a.shape() == Shape{5});
  Tensor b = cnn.apply({1}, 0);  // shorter than the window; padded
  CHECK(b.shape() == Shape{5});

  // Gradient check through the full char-cnn stack on a 3-char word.
  ParameterStore s2;
  Rng r2(42);
  CharCnn tiny(s2, "cnn", 6, 3, 4, 3, 2, r2);
  std::vector<Tensor> params;
  for (const auto& [name, t] : s2.all()) params.push_back(t);
  double err = grad_check_params(
      [&] {
        Tensor o = tiny.apply({1, 2, 3}, 0);
        return sum_all(mul(o, o));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("parameter store counting") {
  ParameterStore store;
  Rng rng(51);
  store.create("emb", {10, 4}, Init::NormalScaled, rng);
  CHECK(store.parameter_count() == 40);
  store.create("w", {2, 2}, Init::XavierUniform, rng);
  CHECK(store.parameter_count() == 44);
}

TEST_CASE("non-finite values are rejected") {
  Tensor a = Tensor::from_values({2}, {1e308, 1e308});
  CHECK_THROWS_AS(add(a, a), NumericError);
  CHECK_THROWS_AS(log_of(Tensor::from_values({1}, {0.0})), NumericError);
}

TEST_CASE("transformer layer incremental path matches batch path") {
  ParameterStore store;
  Rng rng(61);
  TransformerLayer layer(store, "layer", 8, 2, 16, 0.0, true, rng);
  Tensor memory = randn({4, 8}, rng);
  Tensor x = randn({5, 8}, rng);

  // Batch with causal mask.
  std::vector<std::uint8_t> mask(25, 0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j <= i; ++j) mask[i * 5 + j] = 1;
  Runtime rt;
  Tensor batch_out = layer.apply(x, &mask, &memory, rt);

  // Incremental, one row at a time.
  auto [mk, mv] = layer.project_memory(memory);
  Tensor ck, cv;
  for (int i = 0; i < 5; ++i) {
    Tensor xi = slice_rows(x, i, 0 + 1);
    Tensor yi = layer.apply_incremental(xi, ck, cv, &mk, &mv, rt);
    for (int j = 0; j < 8; ++j) {
      CHECK(yi.values()[j] == doctest::Approx(batch_out.values()[i * 8 + j]).epsilon(1e-9));
    }
  }
}
