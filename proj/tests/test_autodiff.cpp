#include <catch2/catch_amalgamated.hpp>

#include "simvc/autodiff.hpp"
#include "simvc/prng.hpp"

using namespace simvc;
using ad::Mat;
using ad::Value;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

/// Central finite differences of `f` against the analytic gradient of the
/// leaf produced through `build`.
template <typename Build>
double fd_check(Mat theta, Build&& build, double step = 1e-6) {
  Value leaf = ad::leaf(theta);
  Value loss = build(leaf);
  ad::backward(loss);
  const Mat analytic = leaf->grad;

  double max_rel = 0.0;
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      auto eval = [&](double v) {
        Mat t = theta;
        t(r, c) = v;
        return build(ad::constant(t))->val(0, 0);
      };
      const double fd = (eval(theta(r, c) + step) - eval(theta(r, c) - step)) / (2 * step);
      const double rel = std::abs(analytic(r, c) - fd) /
                         std::max({std::abs(analytic(r, c)), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace

TEST_CASE("gradients of every primitive match finite differences") {
  Rng rng(1234);
  const Mat A = random_mat(3, 4, rng);
  const Mat B = random_mat(4, 2, rng);
  const Mat C = random_mat(3, 4, rng);
  const Mat row = random_mat(1, 5, rng);

  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::matmul(x, ad::constant(B))); }) < 1e-7);
  CHECK(fd_check(B, [&](Value x) { return ad::sum(ad::matmul(ad::constant(A), x)); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::add(x, ad::constant(C))); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::sub(ad::constant(C), x)); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::cmul(x, ad::constant(C))); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) {
          return ad::sum(ad::cdiv(ad::constant(C), ad::add(x, ad::constant(Mat::Constant(3, 4, 3.0)))));
        }) < 1e-6);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::scale(x, -2.5)); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::transpose(x)); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::leaky_relu(x, 0.2)); }) < 1e-6);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::elu(x)); }) < 1e-6);
  const Mat mix = random_mat(1, 5, rng);
  const Mat other = random_mat(1, 5, rng);
  CHECK(fd_check(row, [&](Value x) { return ad::sum(ad::cmul(ad::softmax_row(x), ad::constant(mix))); }) < 1e-6);
  CHECK(fd_check(row, [&](Value x) { return ad::dot(x, ad::constant(mix)); }) < 1e-7);
  CHECK(fd_check(row, [&](Value x) { return ad::sum(ad::eexp(ad::scale(x, 0.5))); }) < 1e-6);
  CHECK(fd_check(row, [&](Value x) {
          return ad::sum(ad::elog(ad::add(ad::eexp(x), ad::constant(Mat::Constant(1, 5, 1.0)))));
        }) < 1e-6);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::gather_rows(x, {2, 0, 2})); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::element(x, 1, 3); }) < 1e-7);
  CHECK(fd_check(row, [&](Value x) { return ad::cross_entropy_logits(ad::hconcat({x, ad::scale(x, 0.5)}), 3); }) < 1e-6);
  CHECK(fd_check(row, [&](Value x) { return ad::cosine(x, ad::constant(other)); }) < 1e-6);
  CHECK(fd_check(A, [&](Value x) {
          return ad::sum(ad::vstack({ad::row(x, 0), ad::row(x, 2)}));
        }) < 1e-7);
  const Mat s = Mat::Constant(1, 1, 0.7);
  CHECK(fd_check(s, [&](Value x) { return ad::sum(ad::scalar_mul(ad::constant(A), x)); }) < 1e-7);
  CHECK(fd_check(A, [&](Value x) { return ad::sum(ad::scalar_mul(x, ad::constant(s))); }) < 1e-7);
  CHECK(fd_check(s, [&](Value x) { return ad::sum(ad::add_scalar(ad::constant(row), x)); }) < 1e-7);
}

TEST_CASE("composite expression gradient matches finite differences") {
  Rng rng(77);
  const Mat W = random_mat(4, 3, rng);
  const Mat X = random_mat(5, 4, rng);
  const Mat a_vec = random_mat(3, 1, rng);
  const Mat w_cls = random_mat(3, 2, rng);
  auto build_fixed = [&](Value w) {
    Value h = ad::elu(ad::matmul(ad::constant(X), w));
    Value attn = ad::softmax_row(ad::transpose(ad::matmul(h, ad::constant(a_vec))));
    Value pooled = ad::matmul(attn, h);
    return ad::cross_entropy_logits(ad::matmul(pooled, ad::constant(w_cls)), 1);
  };
  CHECK(fd_check(W, build_fixed) < 1e-6);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Mat x = random_mat(1, 1 + Eigen::Index(rng.below(9)), rng) * 10.0;
    const auto y = ad::softmax_row(ad::constant(x));
    CHECK(std::abs(y->val.sum() - 1.0) < 1e-9);
    CHECK(y->val.minCoeff() >= 0.0);
  }
}

TEST_CASE("backward accumulates into shared leaves used twice") {
  const Mat x = Mat::Constant(1, 1, 2.0);
  Value leaf = ad::leaf(x);
  // f = x*x => df/dx = 2x = 4
  Value y = ad::cmul(leaf, leaf);
  ad::backward(y);
  CHECK(leaf->grad(0, 0) == Catch::Approx(4.0));
}

TEST_CASE("shape mismatches raise typed errors") {
  const auto a = ad::constant(Mat::Zero(2, 3));
  const auto b = ad::constant(Mat::Zero(2, 2));
  CHECK_THROWS_AS(ad::add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(ad::matmul(a, a), ShapeMismatch);
  CHECK_THROWS_AS(ad::softmax_row(ad::constant(Mat::Zero(2, 2))), ShapeMismatch);
  CHECK_THROWS_AS(ad::backward(ad::constant(Mat::Zero(1, 2))), ShapeMismatch);
}
