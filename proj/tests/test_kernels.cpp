#include "doctest.h"

#include <random>
#include <vector>

#include "credal/annotations.hpp"
#include "credal/kernels.hpp"
#include "credal/parallel.hpp"
#include "oracles.hpp"

using namespace credal;

namespace {

// Runs the body with several OpenMP threads, restoring the old count after.
struct ThreadScope {
  int old;
  explicit ThreadScope(int n) : old(max_threads()) { set_threads(n); }
  ~ThreadScope() { set_threads(old); }
};

AnnotationTable random_hard(std::mt19937_64& rng, int classes, int k, int n) {
  std::uniform_int_distribution<int> lab(0, classes - 1);
  std::normal_distribution<double> x;
  AnnotationTable t(LabelKind::hard, classes, k);
  std::vector<int> row(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    for (auto& v : row) v = lab(rng);
    t.add_hard(x(rng), row);
  }
  return t;
}

}  // namespace

TEST_CASE("disagreement counts agree between serial and parallel") {
  std::mt19937_64 rng(83);
  for (int threads : {1, 3, 4}) {
    ThreadScope scope(threads);
    for (int classes : {2, 3, 5}) {
      // Sizes straddle the 64-sample word boundary of the packed kernel.
      for (int n : {1, 63, 64, 65, 1000, 4097}) {
        for (int k : {2, 3, 7}) {
          const auto t = random_hard(rng, classes, k, n);
          const auto ser = kernels::disagreement_counts_serial(t);
          CHECK(kernels::disagreement_counts_omp(t) == ser);
          for (int j = 0; j < k; ++j) {
            CHECK(ser[static_cast<std::size_t>(j * k + j)] == 0);
            std::int64_t direct = 0;
            for (std::size_t i = 0; i < t.size(); ++i) direct += t.hard(i, j) != t.hard(i, (j + 1) % k);
            CHECK(ser[static_cast<std::size_t>(j * k + (j + 1) % k)] == direct);
          }
        }
      }
    }
  }
}

TEST_CASE("soft sums agree bitwise between serial and parallel") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> x;
  for (int threads : {1, 4}) {
    ThreadScope scope(threads);
    for (int classes : {2, 4}) {
      const int k = 4;
      AnnotationTable t(LabelKind::soft, classes, k);
      for (int i = 0; i < 3000; ++i) {
        std::vector<double> probs;
        for (int j = 0; j < k; ++j) {
          const auto p = oracle::random_simplex(rng, static_cast<std::size_t>(classes));
          probs.insert(probs.end(), p.begin(), p.end());
        }
        t.add_soft(x(rng), probs);
      }
      const auto ser = kernels::soft_l1_sums_serial(t);
      const auto par = kernels::soft_l1_sums_omp(t);
      CHECK(par == ser);
    }
  }
}

TEST_CASE("kernels reject the wrong label kind") {
  AnnotationTable soft(LabelKind::soft, 2, 2);
  soft.add_soft(0.0, std::vector{0.5, 0.5, 0.2, 0.8});
  CHECK_THROWS_AS(kernels::disagreement_counts_serial(soft), std::invalid_argument);
  CHECK_THROWS_AS(kernels::disagreement_counts_omp(soft), std::invalid_argument);
  std::mt19937_64 rng(1);
  const auto hard = random_hard(rng, 2, 2, 5);
  CHECK_THROWS_AS(kernels::soft_l1_sums_serial(hard), std::invalid_argument);
  CHECK_THROWS_AS(kernels::soft_l1_sums_omp(hard), std::invalid_argument);
}

TEST_CASE("joint distances over vertex pairs agree between serial and parallel") {
  ThreadScope scope(4);
  const CredalSpec spec({Environment::gaussian(0.0, 1.0), Environment::gaussian(1.0, 1.5),
                         Environment::gaussian(-0.5, 0.7)},
                        {Labeler::threshold(0.0), Labeler::sigmoid(3.0, 0.5), Labeler::noisy(Labeler::threshold(0.4), 0.1)});
  const auto pairs = spec.distinct_pairs();
  const auto ser = kernels::joint_tv_pairs(spec, pairs, {}, Exec::serial);
  const auto par = kernels::joint_tv_pairs(spec, pairs, {}, Exec::parallel);
  REQUIRE(ser.size() == pairs.size());
  CHECK(par == ser);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    CHECK(ser[i] == joint_tv_exact(spec.env(p.a.env), spec.labeler(p.a.lab), spec.env(p.b.env),
                                   spec.labeler(p.b.lab), {}));
  }
}

TEST_CASE("worker exceptions reach the caller") {
  ThreadScope scope(4);
  QuadratureConfig tiny;
  tiny.method = QuadMethod::adaptive_simpson;
  tiny.max_evals = 1000;
  tiny.abs_tol = 1e-14;
  const CredalSpec spec({Environment::gaussian(0.0, 1.0), Environment::gaussian(1.0, 2.0)},
                        {Labeler::sigmoid(2.0, 0.0), Labeler::sigmoid(-1.0, 0.3)});
  const auto pairs = spec.distinct_pairs();
  CHECK_THROWS_AS(kernels::joint_tv_pairs(spec, pairs, tiny, Exec::parallel), QuadratureError);
}
