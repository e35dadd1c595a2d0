#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "prnn/matrix.hpp"
#include "prnn/rng.hpp"

using namespace prnn;

TEST_SUITE_BEGIN("numkernel");

namespace {

// Naive triple-loop product, the independent oracle for matmul.
Matrix matmul_naive(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      out(i, j) = acc;
    }
  return out;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = scale * (2.0 * rng.next_double() - 1.0);
  return m;
}

// Reference xoshiro256** + splitmix64 transcribed independently from the
// published algorithm, to pin the stream our Rng must produce.
struct RefXoshiro {
  std::uint64_t s[4];
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& v : s) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      v = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

}  // namespace

TEST_CASE("matmul hand examples") {
  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  Matrix ones(2, 1, 1.0);
  Matrix p = matmul(a, ones);
  CHECK(p(0, 0) == doctest::Approx(3.0));
  CHECK(p(1, 0) == doctest::Approx(7.0));

  Matrix eye = Matrix::identity(2);
  CHECK(matmul(a, eye) == a);
}

TEST_CASE("matmul matches naive oracle") {
  Rng rng(101);
  Matrix a = random_matrix(rng, 7, 5);
  Matrix b = random_matrix(rng, 5, 3);
  Matrix got = matmul(a, b);
  Matrix want = matmul_naive(a, b);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);
}

TEST_CASE("matmul shape error names both shapes") {
  Matrix a(2, 3), b(4, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = random_matrix(rng, 4, 6);
    Matrix b = random_matrix(rng, 6, 5);
    Matrix c = random_matrix(rng, 5, 3);
    Matrix left = matmul(matmul(a, b), c);
    Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
      const double denom = std::max(1.0, std::abs(left.data()[i]));
      CHECK(std::abs(left.data()[i] - right.data()[i]) / denom < 1e-9);
    }
  }
}

TEST_CASE("transpose-fused products match explicit transposes") {
  Rng rng(55);
  Matrix a = random_matrix(rng, 6, 4);
  Matrix b = random_matrix(rng, 6, 3);
  Matrix tn(4, 3);
  matmul_tn_acc(tn, a, b);
  Matrix want = matmul(transpose(a), b);
  for (std::size_t i = 0; i < tn.size(); ++i)
    CHECK(tn.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));

  Matrix c = random_matrix(rng, 5, 4);
  Matrix nt(6, 5);
  matmul_nt_acc(nt, a, c);
  Matrix want2 = matmul(a, transpose(c));
  for (std::size_t i = 0; i < nt.size(); ++i)
    CHECK(nt.data()[i] == doctest::Approx(want2.data()[i]).epsilon(1e-12));
}

TEST_CASE("activation fixed points") {
  Matrix zero(1, 1, 0.0);
  CHECK(activate(zero, Act::sigmoid)(0, 0) == doctest::Approx(0.5));
  CHECK(activate(zero, Act::tanh)(0, 0) == doctest::Approx(0.0));
  Matrix half(1, 1, 0.5);
  CHECK(activate_grad_from_y(half, Act::sigmoid)(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("activation derivatives pass central finite differences") {
  const double h = 1e-5;
  for (Act kind : {Act::sigmoid, Act::tanh}) {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
      Matrix xm(1, 1, x), xp(1, 1, x + h), xn(1, 1, x - h);
      const double y = activate(xm, kind)(0, 0);
      const double analytic = activate_grad_from_y(Matrix(1, 1, y), kind)(0, 0);
      const double numeric =
          (activate(xp, kind)(0, 0) - activate(xn, kind)(0, 0)) / (2.0 * h);
      CHECK(std::abs(analytic - numeric) < 1e-8);
    }
  }
}

TEST_CASE("activation saturates without NaN") {
  Matrix big(1, 2);
  big(0, 0) = 1e4;
  big(0, 1) = -1e4;
  Matrix y = activate(big, Act::sigmoid);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y.all_finite());
}

TEST_CASE("rng matches the reference xoshiro256** stream") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
    Rng rng(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 1000; ++i) CHECK(rng.next_u64() == ref.next());
  }
}

TEST_CASE("rng reproducibility and stream splitting") {
  Rng a(31415), b(31415);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(9);
  Rng c1 = base.split(kStreamDataGen);
  Rng c2 = base.split(kStreamDropout);
  Rng c1_again = base.split(kStreamDataGen);
  CHECK(c1.next_u64() == c1_again.next_u64());
  CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("glorot limit and determinism") {
  Rng rng(3);
  Matrix m = glorot_uniform(rng, 3, 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.data()[i] >= -1.0);
    CHECK(m.data()[i] <= 1.0);
  }
  Rng r1(77), r2(77);
  CHECK(glorot_uniform(r1, 4, 6) == glorot_uniform(r2, 4, 6));
  CHECK_THROWS_AS(glorot_uniform(rng, 0, 3), std::invalid_argument);
}

TEST_CASE("glorot sample mean near zero") {
  Rng rng(12);
  const std::size_t n = 100000;
  Matrix m = glorot_uniform(rng, 100, 100);
  // 10 draws per matrix entry to reach 1e5 samples
  double sum = 0.0;
  std::size_t count = 0;
  for (int rep = 0; rep < 10; ++rep) {
    Matrix d = glorot_uniform(rng, 100, 100);
    for (std::size_t i = 0; i < d.size(); ++i) sum += d.data()[i];
    count += d.size();
  }
  CHECK(count == n);
  const double limit = std::sqrt(6.0 / 200.0);
  const double se = limit / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / static_cast<double>(n)) < 3.0 * se);
}

TEST_CASE("gaussian draws") {
  Rng rng(5);
  auto flat = gaussian(rng, 2.5, 0.0, 64);
  for (double v : flat) CHECK(v == 2.5);

  auto big = gaussian(rng, 0.0, 1.0, 100000);
  double mean = 0.0;
  for (double v : big) mean += v;
  mean /= static_cast<double>(big.size());
  double var = 0.0;
  for (double v : big) var += (v - mean) * (v - mean);
  var /= static_cast<double>(big.size());
  CHECK(std::sqrt(var) > 0.99);
  CHECK(std::sqrt(var) < 1.01);

  Rng r1(88), r2(88);
  CHECK(gaussian(r1, 0.0, 2.0, 33) == gaussian(r2, 0.0, 2.0, 33));
  CHECK_THROWS_AS(gaussian(rng, 0.0, -1.0, 4), std::invalid_argument);
}

TEST_SUITE_END();
