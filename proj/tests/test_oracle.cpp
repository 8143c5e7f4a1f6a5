#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mbmm/error.hpp"
#include "mbmm/oracle.hpp"
#include "mbmm/random.hpp"
#include "mbmm/verify.hpp"

using namespace mbmm;

TEST_CASE("degenerate generator settings") {
  SyntheticSpec spec;
  spec.n = 50;
  spec.pi_true = Eigen::VectorXd::Ones(1);
  spec.theta_true = Eigen::MatrixXd::Zero(4, 1);
  const SyntheticData d = generate_synthetic(spec);
  CHECK(d.data.x.cast<int>().sum() == 0);
  CHECK(d.data.fully_observed());
  CHECK((d.z_true.array() == 0).all());
}

TEST_CASE("component frequencies follow pi") {
  SyntheticSpec spec;
  spec.n = 10000;
  spec.pi_true = Eigen::Vector2d(0.3, 0.7);
  spec.theta_true = Eigen::MatrixXd::Constant(2, 2, 0.5);
  spec.seed = 4;
  const SyntheticData d = generate_synthetic(spec);
  const double first = (d.z_true.array() == 0).cast<double>().mean();
  CHECK(std::abs(first - 0.3) <= 0.02);
}

TEST_CASE("cells follow theta of their component and MCAR masking") {
  SyntheticSpec spec = recovery_benchmark_spec(6);
  spec.n = 6000;
  spec.missing_rate = 0.2;
  const SyntheticData d = generate_synthetic(spec);
  const double missing = static_cast<double>(d.data.missing_count()) / (6000.0 * 10.0);
  CHECK(std::abs(missing - 0.2) <= 0.01);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index j = 0; j < 10; ++j) {
      double ones = 0, seen = 0;
      for (Eigen::Index i = 0; i < 6000; ++i) {
        if (d.z_true[i] != c || !d.data.observed(i, j)) continue;
        ones += d.data.x(i, j);
        seen += 1;
      }
      CHECK(std::abs(ones / seen - spec.theta_true(j, c)) <= 0.05);
    }
  }
}

TEST_CASE("generator is reproducible per seed and validates its spec") {
  const SyntheticSpec spec = recovery_benchmark_spec(2);
  CHECK(generate_synthetic(spec).data.x == generate_synthetic(spec).data.x);
  SyntheticSpec bad = spec;
  bad.pi_true = Eigen::Vector3d(0.5, 0.5, 0.5);
  CHECK_THROWS_AS(generate_synthetic(bad), ValidationError);
  bad = spec;
  bad.theta_true(0, 0) = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), ValidationError);
  bad = spec;
  bad.missing_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(bad), ValidationError);
  bad = spec;
  bad.theta_true = Eigen::MatrixXd::Constant(10, 2, 0.5);
  CHECK_THROWS_AS(generate_synthetic(bad), ValidationError);
}

TEST_CASE("a single unit always occupies one component") {
  const BinaryDataset one = BinaryDataset::from_matrix(BinaryMatrix::Ones(1, 2));
  for (const int k_max : {1, 2, 4}) {
    Priors priors;
    priors.k_max = k_max;
    priors.lambda = 3.0;
    const ExactPosterior e = brute_force_posterior(one, priors);
    CHECK(e.k_nonempty[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("one-unit evidence equals the Beta-Bernoulli marginal") {
  BinaryMatrix x(1, 3);
  x << 1, 0, 1;
  const BinaryDataset d = BinaryDataset::from_matrix(x);
  Priors priors;
  priors.k_max = 4;
  priors.alpha = 2.0;
  priors.beta = 3.0;
  const ExactPosterior e = brute_force_posterior(d, priors);
  CHECK(e.log_evidence == doctest::Approx(std::log(0.4 * 0.6 * 0.4)).epsilon(1e-12));
}

TEST_CASE("identical units under an agreement-favouring prior cluster together") {
  const BinaryDataset d = BinaryDataset::from_matrix(BinaryMatrix::Ones(2, 4));
  Priors priors;
  priors.k_max = 3;
  priors.alpha = 0.1;
  priors.beta = 0.1;
  const ExactPosterior e = brute_force_posterior(d, priors);
  CHECK(e.co_clustering(0, 1) > 1.0 - e.co_clustering(0, 1));
  CHECK(e.k_nonempty[0] > e.k_nonempty[1]);
  CHECK(e.co_clustering(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("enumeration probabilities sum to one") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const BinaryDataset d = random_tiny_dataset(3 + static_cast<Eigen::Index>(seed), 2, seed);
    Priors priors;
    priors.k_max = 3;
    const ExactPosterior e = brute_force_posterior(d, priors);
    CHECK(std::abs(e.total_probability - 1.0) <= 1e-10);
    CHECK(std::abs(e.k_total.sum() - 1.0) <= 1e-10);
    CHECK(std::abs(e.k_nonempty.sum() - 1.0) <= 1e-10);
    double partitions = 0.0;
    for (const auto& entry : e.partitions) partitions += entry.second;
    CHECK(std::abs(partitions - 1.0) <= 1e-10);
  }
}

TEST_CASE("enumeration guards name their bounds") {
  Priors priors;
  priors.k_max = 3;
  CHECK_THROWS_WITH_AS(brute_force_posterior(random_tiny_dataset(11, 1, 1), priors),
                       doctest::Contains("n <= 10"), ValidationError);
  priors.k_max = 5;
  CHECK_THROWS_WITH_AS(brute_force_posterior(random_tiny_dataset(3, 1, 1), priors),
                       doctest::Contains("4"), ValidationError);
}

TEST_CASE("the enumeration posterior is exchangeable in the units") {
  const BinaryDataset d = random_tiny_dataset(6, 2, 9);
  Priors priors;
  priors.k_max = 3;
  const ExactPosterior e = brute_force_posterior(d, priors);
  std::vector<Eigen::Index> order(6);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_stream(9, Stream::verification);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(order.begin(), order.end(), rng);
    BinaryMatrix shuffled(6, 2);
    for (Eigen::Index i = 0; i < 6; ++i) shuffled.row(i) = d.x.row(order[static_cast<std::size_t>(i)]);
    const ExactPosterior s = brute_force_posterior(BinaryDataset::from_matrix(shuffled), priors);
    CHECK((s.k_nonempty - e.k_nonempty).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.log_evidence == doctest::Approx(e.log_evidence).epsilon(1e-12));
    for (Eigen::Index a = 0; a < 6; ++a) {
      for (Eigen::Index b = 0; b < 6; ++b) {
        CHECK(s.co_clustering(a, b) ==
              doctest::Approx(e.co_clustering(order[static_cast<std::size_t>(a)],
                                              order[static_cast<std::size_t>(b)]))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("canonical partitions and total variation") {
  Eigen::VectorXi z(5);
  z << 2, 2, 0, 1, 0;
  CHECK(canonical_partition(z) == std::vector<int>{0, 0, 1, 2, 1});
  CHECK(total_variation(Eigen::Vector3d(0.5, 0.5, 0), Eigen::Vector3d(0, 0.5, 0.5)) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(total_variation(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)), DomainError);
}

TEST_CASE("exact posterior serializes to JSON tables") {
  Priors priors;
  priors.k_max = 2;
  const auto json = brute_force_posterior(random_tiny_dataset(3, 1, 2), priors).to_json();
  CHECK(json["k_nonempty"].size() == 2);
  CHECK(json["co_clustering"].size() == 3);
  CHECK(json["partitions"].size() == 4);
  CHECK(json["partitions"][0]["partition"][0] == 1);
}
