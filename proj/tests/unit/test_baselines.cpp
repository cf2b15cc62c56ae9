#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "combandit/baselines.hpp"
#include "combandit/errors.hpp"
#include "test_util.hpp"

using namespace combandit;

TEST_CASE("fresh state gives pure exploration widths") {
  const LinearState s(3, 4.0);
  Matrix x(3, 2);
  x << 1, 0, 0, 2, 0, 0;
  const Vector u = comblinucb_scores(s, x, 1.5);
  CHECK(u[0] == doctest::Approx(1.5 * 1.0 / 2.0));
  CHECK(u[1] == doctest::Approx(1.5 * 2.0 / 2.0));
}

TEST_CASE("one observation hand example") {
  LinearState s(2, 1.0);
  Matrix x(2, 1);
  x << 1, 0;
  const std::vector<double> v{1.0};
  s.observe(x, v);
  CHECK(s.theta_hat()[0] == doctest::Approx(0.5));
  CHECK(s.theta_hat()[1] == 0.0);
  CHECK(comblinucb_scores(s, x, 1.0)[0] == doctest::Approx(0.5 + 1.0 / std::sqrt(2.0)));
  CHECK(comblinucb_scores(s, x, 1.0)[0] == doctest::Approx(1.2071).epsilon(1e-4));
  CHECK(comblinucb_scores(s, x, 0.0)[0] == doctest::Approx(0.5));
}

TEST_CASE("ridge estimate matches a direct solve") {
  testutil::Rng rng(41);
  const int d = 6;
  const double lambda = 0.7;
  LinearState s(d, lambda);
  Matrix v = lambda * Matrix::Identity(d, d);
  Vector b = Vector::Zero(d);
  for (int t = 0; t < 60; ++t) {
    Matrix x(d, 3);
    for (int j = 0; j < 3; ++j) x.col(j) = testutil::unit_vector(d, rng);
    const auto r = testutil::uniform_scores(3, rng);
    s.observe(x, r);
    for (int j = 0; j < 3; ++j) {
      v += x.col(j) * x.col(j).transpose();
      b += r[static_cast<std::size_t>(j)] * x.col(j);
    }
  }
  const Vector theta = v.ldlt().solve(b);
  CHECK((s.theta_hat() - theta).norm() < 1e-10);
  CHECK((s.gram() * s.gram_inverse() - Matrix::Identity(d, d)).norm() < 1e-8);
  CHECK_THROWS_AS(s.observe(Matrix::Zero(d, 2), std::vector<double>{1.0}), ContractError);
}

TEST_CASE("observation batching does not matter") {
  testutil::Rng rng(42);
  LinearState together(4, 1.0);
  LinearState apart(4, 1.0);
  Matrix x(4, 3);
  for (int j = 0; j < 3; ++j) x.col(j) = testutil::unit_vector(4, rng);
  const std::vector<double> r{0.1, -0.4, 0.9};
  together.observe(x, r);
  for (int j = 0; j < 3; ++j) {
    apart.observe(x.col(j), std::vector<double>{r[static_cast<std::size_t>(j)]});
  }
  CHECK((together.theta_hat() - apart.theta_hat()).norm() < 1e-12);
  CHECK((together.gram_inverse() - apart.gram_inverse()).norm() < 1e-12);
}

TEST_CASE("Thompson draws") {
  testutil::Rng rng(43);
  LinearState s(3, 1.0);
  for (int t = 0; t < 10; ++t) {
    Matrix x(3, 2);
    for (int j = 0; j < 2; ++j) x.col(j) = testutil::unit_vector(3, rng);
    s.observe(x, testutil::uniform_scores(2, rng));
  }
  Matrix probe(3, 2);
  probe.col(0) = testutil::unit_vector(3, rng);
  probe.col(1) = testutil::unit_vector(3, rng);

  SUBCASE("nu 0 is the ridge prediction") {
    const Vector scores = comblints_scores(s, probe, 0.0, rng);
    const Vector ridge = probe.transpose() * s.theta_hat();
    CHECK((scores - ridge).norm() < 1e-14);
  }
  SUBCASE("same seed, same draw") {
    testutil::Rng a(7);
    testutil::Rng b(7);
    CHECK(sample_linear_parameter(s, 1.0, a) == sample_linear_parameter(s, 1.0, b));
  }
  SUBCASE("sample covariance matches nu^2 V^-1") {
    const double nu = 1.5;
    const int n = 10000;
    Vector mean = Vector::Zero(3);
    Matrix second = Matrix::Zero(3, 3);
    for (int i = 0; i < n; ++i) {
      const Vector th = sample_linear_parameter(s, nu, rng);
      mean += th;
      second += th * th.transpose();
    }
    mean /= n;
    const Matrix cov = second / n - mean * mean.transpose();
    const Matrix expected = nu * nu * s.gram_inverse();
    CHECK((cov - expected).norm() / expected.norm() < 0.1);
    CHECK((mean - s.theta_hat()).norm() < 0.05);
  }
}
