#include <doctest.h>

#include <numeric>
#include <stdexcept>

#include "prnn/perseveration.hpp"

using namespace prnn;

TEST_SUITE_BEGIN("perseveration");

namespace {
Matrix sequence_of(std::initializer_list<double> vals) {
  Matrix m(vals.size(), 1);
  std::size_t i = 0;
  for (double v : vals) m(i++, 0) = v;
  return m;
}
}  // namespace

TEST_CASE("expand [a,b] with k=3") {
  Matrix inputs = sequence_of({10.0, 20.0});
  std::vector<double> targets{1.0, 1.0};
  ExpandedSequence e = expand_sequence(inputs, targets, 3);
  REQUIRE(e.inputs.rows() == 6);
  const double want[6] = {10, 10, 10, 20, 20, 20};
  for (std::size_t i = 0; i < 6; ++i) CHECK(e.inputs(i, 0) == want[i]);
  REQUIRE(e.keep_indices.size() == 2);
  CHECK(e.keep_indices[0] == 2);
  CHECK(e.keep_indices[1] == 5);
}

TEST_CASE("k=1 is the identity") {
  Matrix inputs = sequence_of({1, 2, 3, 4});
  std::vector<double> targets{0, 0, 0, 0};
  ExpandedSequence e = expand_sequence(inputs, targets, 1);
  CHECK(e.inputs == inputs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(e.keep_indices[i] == i);
}

TEST_CASE("single step, k=4") {
  Matrix inputs = sequence_of({7.0});
  std::vector<double> targets{1.0};
  ExpandedSequence e = expand_sequence(inputs, targets, 4);
  REQUIRE(e.inputs.rows() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(e.inputs(i, 0) == 7.0);
  REQUIRE(e.keep_indices.size() == 1);
  CHECK(e.keep_indices[0] == 3);
}

TEST_CASE("k bounds enforced") {
  Matrix inputs = sequence_of({1.0});
  std::vector<double> targets{1.0};
  CHECK_THROWS_AS(expand_sequence(inputs, targets, 0), std::invalid_argument);
  CHECK_THROWS_AS(expand_sequence(inputs, targets, kMaxPerseveration + 1),
                  std::invalid_argument);
}

TEST_CASE("expansion structure for all n<=20, k<=8") {
  for (std::size_t n = 1; n <= 20; ++n) {
    Matrix inputs(n, 2);
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
      inputs(i, 0) = static_cast<double>(i);
      inputs(i, 1) = static_cast<double>(2 * i);
      targets[i] = static_cast<double>(i % 2);
    }
    for (std::size_t k = 1; k <= kMaxPerseveration; ++k) {
      ExpandedSequence e = expand_sequence(inputs, targets, k);
      REQUIRE(e.inputs.rows() == n * k);
      REQUIRE(e.keep_indices.size() == n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(e.keep_indices[i] == i * k + (k - 1));
        for (std::size_t j = 0; j < k; ++j) {
          CHECK(e.inputs(i * k + j, 0) == inputs(i, 0));
          CHECK(e.inputs(i * k + j, 1) == inputs(i, 1));
          CHECK(e.targets[i * k + j] == targets[i]);
        }
      }
    }
  }
}

TEST_CASE("loss weights are uniform and sum to 1") {
  auto w = build_loss_weights(2, 3);
  REQUIRE(w.size() == 6);
  for (double v : w) CHECK(v == doctest::Approx(1.0 / 6.0));

  auto w5 = build_loss_weights(5, 1);
  REQUIRE(w5.size() == 5);
  for (double v : w5) CHECK(v == doctest::Approx(0.2));

  for (std::size_t n = 1; n <= 12; ++n)
    for (std::size_t k = 1; k <= 8; ++k) {
      auto weights = build_loss_weights(n, k);
      const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("select final outputs") {
  std::vector<double> outputs{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> keep{2, 5};
  auto sel = select_final_outputs(outputs, keep);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0] == 0.2);
  CHECK(sel[1] == 0.5);

  std::vector<std::size_t> keep1{0, 1, 2};
  std::vector<double> out1{0.7, 0.8, 0.9};
  CHECK(select_final_outputs(out1, keep1) == out1);

  std::vector<std::size_t> bad{1, 3};
  CHECK_THROWS_AS(select_final_outputs(outputs, bad), std::invalid_argument);
}

TEST_SUITE_END();
