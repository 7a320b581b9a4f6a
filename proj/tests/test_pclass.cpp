#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pens/pclass.hpp"

using namespace pens;

namespace {

FuzzyRule make_rule(const Vector& center, const Matrix& inv_cov, const Matrix& w, long support = 1) {
  FuzzyRule r;
  r.center = center;
  r.inv_cov = inv_cov;
  r.support = support;
  r.consequent = w;
  r.rls_cov = 1e5 * Matrix::Identity(w.rows(), w.rows());
  return r;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

}  // namespace

TEST_SUITE("pclass") {
  TEST_CASE("fire") {
    const auto r = make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Zero(2, 2));
    CHECK(fire(r, Vector::Zero(1)) == 1.0);
    CHECK(fire(r, Vector::Constant(1, std::sqrt(2.0))) == doctest::Approx(0.36788).epsilon(1e-5));
    CHECK(fire(r, Vector::Constant(1, std::sqrt(2.0 * std::log(2.0)))) == doctest::Approx(0.5));

    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const double f = fire(r, Vector::Constant(1, rng.uniform(-30, 30)));
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }

  TEST_CASE("infer single rule is the raw consequent") {
    Matrix w(3, 2);
    w << 0.1, 0.9, 0.5, -0.5, 0.2, 0.3;
    RuleBase rb;
    rb.rules.push_back(make_rule(vec({1.0, -1.0}), Matrix::Identity(2, 2) * 4.0, w));
    const Vector x = vec({0.3, 0.7});
    const auto inf = infer(rb, x);
    const Vector want = w.transpose() * extend(x);
    CHECK((inf.scores - want).norm() < 1e-15);
  }

  TEST_CASE("infer hand example and ties") {
    // phi = (1, e^-1) with class outputs (1,0) and (0,1).
    Matrix w0 = Matrix::Zero(2, 2);
    w0(0, 0) = 1.0;
    Matrix w1 = Matrix::Zero(2, 2);
    w1(0, 1) = 1.0;
    RuleBase rb;
    rb.rules.push_back(make_rule(Vector::Zero(1), Matrix::Identity(1, 1), w0));
    rb.rules.push_back(make_rule(Vector::Constant(1, std::sqrt(2.0)), Matrix::Identity(1, 1), w1));
    const auto inf = infer(rb, Vector::Zero(1));
    CHECK(inf.scores(0) == doctest::Approx(0.731).epsilon(1e-3));
    CHECK(inf.scores(1) == doctest::Approx(0.269).epsilon(1e-3));
    CHECK(inf.label == 0);

    // Equal firing gives the mean of the consequents; equal scores tie to class 0.
    const auto mid = infer(rb, Vector::Constant(1, std::sqrt(2.0) / 2.0));
    CHECK(mid.scores(0) == doctest::Approx(0.5));
    CHECK(mid.scores(1) == doctest::Approx(0.5));
    CHECK(mid.label == 0);

    RuleBase empty;
    CHECK_THROWS_AS(infer(empty, Vector::Zero(1)), UntrainedError);
  }

  TEST_CASE("infer scores are a convex combination") {
    Rng rng(21);
    const auto rb = oracle::random_expert(rng, 3, 4);
    for (int t = 0; t < 20; ++t) {
      Vector x(3);
      for (int j = 0; j < 3; ++j) x(j) = rng.uniform(-2, 2);
      const Vector xe = extend(x);
      Vector num = Vector::Zero(2);
      double den = 0.0;
      for (const auto& r : rb.rules) {
        const double phi = std::exp(-0.5 * (x - r.center).dot(r.inv_cov * (x - r.center)));
        num += phi * (r.consequent.transpose() * xe);
        den += phi;
      }
      CHECK((infer(rb, x).scores - num / den).norm() < 1e-12);
    }
  }

  TEST_CASE("firing far from every rule stays normalized") {
    RuleBase rb;
    rb.rules.push_back(make_rule(Vector::Zero(2), Matrix::Identity(2, 2) * 100.0, Matrix::Identity(3, 2)));
    rb.rules.push_back(make_rule(Vector::Constant(2, 1.0), Matrix::Identity(2, 2) * 100.0, Matrix::Zero(3, 2)));
    const Vector lambda = normalized_firing(rb, Vector::Constant(2, 50.0));
    CHECK(lambda.allFinite());
    CHECK(lambda.sum() == doctest::Approx(1.0));
    CHECK(lambda(1) == doctest::Approx(1.0));
  }

  TEST_CASE("winning rule") {
    RuleBase rb;
    rb.rules.push_back(make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Zero(2, 2), 1));
    CHECK(winning_rule(rb, Vector::Constant(1, 3.0)) == 0);
    rb.rules.push_back(make_rule(Vector::Constant(1, 2.0), Matrix::Identity(1, 1), Matrix::Zero(2, 2), 1));
    // x = 1 fires both equally: exact tie goes to rule 0.
    CHECK(winning_rule(rb, Vector::Constant(1, 1.0)) == 0);
    rb.rules[0].support = 1;
    rb.rules[1].support = 10;
    CHECK(winning_rule(rb, Vector::Constant(1, 1.0)) == 1);
    rb.rules[0].support = 10;
    rb.rules[1].support = 1;
    CHECK(winning_rule(rb, Vector::Constant(1, 1.0)) == 0);
  }

  TEST_CASE("datum significance") {
    LearnerParams params;
    RuleBase rb;
    // Rule at the origin with unit widths; candidate at (2,0) gets k_ov * 2 = 1.
    rb.rules.push_back(make_rule(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Zero(3, 2)));
    const Vector x = vec({2.0, 0.0});
    const Vector ranges = Vector::Constant(2, 4.0);

    const auto none = datum_significance(rb, x, Vector::Zero(2), ranges, params);
    CHECK(none.ds == 0.0);
    CHECK_FALSE(none.grow);

    const auto half = datum_significance(rb, x, vec({1.0, 0.0}), ranges, params);
    CHECK(half.ds == doctest::Approx(0.5));
    CHECK(half.grow);

    // Rule volume 9 against candidate volume 1: ratio 0.1.
    rb.rules[0].inv_cov = Matrix::Identity(2, 2) / 9.0;  // volume 9
    const auto small = datum_significance(rb, x, vec({0.01, 0.0}), ranges, params);
    CHECK(small.ds == doctest::Approx(0.001));
    CHECK_FALSE(small.grow);
  }

  TEST_CASE("data quality") {
    DensityAccumulators acc;
    acc.push(vec({3.0}), 1.0);
    RuleBase empty;
    const auto first = data_quality(acc, empty, vec({3.0}));
    CHECK(first.density == doctest::Approx(1.0));
    CHECK(first.novelty);

    DensityAccumulators three;
    for (double x : {0.0, 1.0, 2.0}) three.push(vec({x}), 1.0);
    // Direct summation: mean squared distance from 1 is (1 + 0 + 1)/3.
    CHECK(three.density(vec({1.0})) == doctest::Approx(1.0 / std::sqrt(1.0 + 2.0 / 3.0)));
    CHECK(three.density(vec({1.0})) == doctest::Approx(0.7745967));

    RuleBase rb;
    rb.rules.push_back(make_rule(vec({0.0}), Matrix::Identity(1, 1), Matrix::Zero(2, 2)));
    rb.rules.push_back(make_rule(vec({2.0}), Matrix::Identity(1, 1), Matrix::Zero(2, 2)));
    CHECK(data_quality(three, rb, vec({40.0})).novelty);
    CHECK(data_quality(three, rb, vec({1.0})).novelty);   // densest point of the cloud
    CHECK_FALSE(data_quality(three, rb, vec({0.0})).novelty);  // same density as rule 0
  }

  TEST_CASE("density accumulators agree with direct summation") {
    Rng rng(8);
    DensityAccumulators acc;
    std::vector<std::pair<Vector, double>> pts;
    for (int i = 0; i < 50; ++i) {
      Vector x(3);
      for (int j = 0; j < 3; ++j) x(j) = rng.normal();
      const double w = rng.uniform();
      acc.push(x, w);
      pts.emplace_back(x, w);
    }
    const Vector z = vec({0.3, -0.2, 1.0});
    double tw = 0.0, sd = 0.0;
    for (const auto& [x, w] : pts) {
      tw += w;
      sd += w * (z - x).squaredNorm();
    }
    CHECK(acc.density(z) == doctest::Approx(1.0 / std::sqrt(1.0 + sd / tw)).epsilon(1e-12));
    CHECK(acc.sq_sum >= acc.sum.squaredNorm() / acc.weight);
  }

  TEST_CASE("volume guard") {
    RuleBase rb;
    const Vector ranges = vec({10.0, 10.0});
    rb.rules.push_back(make_rule(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Zero(3, 2)));  // width 1
    CHECK(volume_guard(rb, 0, ranges, 0.3));
    rb.rules[0].inv_cov = Matrix::Identity(2, 2) / 25.0;  // width 5 = 0.5 x range
    CHECK_FALSE(volume_guard(rb, 0, ranges, 0.3));
    // A constant axis drops out of the range mean instead of forcing zero.
    CHECK(volume_guard(rb, 0, vec({20.0, 0.0}), 0.3));
  }

  TEST_CASE("grow rule") {
    LearnerParams params;
    RuleBase rb;
    grow_rule(rb, vec({1.0, 2.0}), std::nullopt, vec({10.0, 0.0}), params, 2);
    REQUIRE(rb.size() == 1);
    CHECK(rb.rules[0].center == vec({1.0, 2.0}));
    CHECK(rb.rules[0].inv_cov(0, 0) == doctest::Approx(1.0));                 // 0.1 x range = 1
    CHECK(rb.rules[0].inv_cov(1, 1) == doctest::Approx(1.0 / (0.5 * 0.5)));  // constant axis
    CHECK(rb.rules[0].consequent.isZero());
    CHECK(rb.rules[0].rls_cov.isApprox(1e5 * Matrix::Identity(3, 3)));
    CHECK(rb.rules[0].support == 1);

    rb.rules[0].consequent.setConstant(0.25);
    grow_rule(rb, vec({3.0, 2.0}), 0, vec({10.0, 0.0}), params, 2);
    REQUIRE(rb.size() == 2);
    CHECK(rb.rules[1].inv_cov.isApprox(Matrix::Identity(2, 2)));  // sigma = 0.5 x 2
    CHECK(rb.rules[1].consequent == rb.rules[0].consequent);
  }

  TEST_CASE("premise update basics") {
    auto r = make_rule(vec({1.0, 1.0}), Matrix::Identity(2, 2), Matrix::Zero(3, 2));
    REQUIRE(update_premise(r, vec({1.0, 1.0})));
    CHECK(r.support == 2);
    CHECK(r.center == vec({1.0, 1.0}));
    CHECK(r.inv_cov.isApprox(2.0 * Matrix::Identity(2, 2)));

    auto big = make_rule(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Zero(3, 2), 999);
    const Vector x = vec({3.0, -4.0});
    update_premise(big, x);
    CHECK((big.center - Vector::Zero(2)).norm() <= x.norm() / 1000.0 + 1e-15);

    auto broken = make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Zero(2, 2));
    const FuzzyRule before = broken;
    CHECK_FALSE(update_premise(broken, Vector::Constant(1, std::numeric_limits<double>::infinity())));
    CHECK(broken.center == before.center);
    CHECK(broken.inv_cov == before.inv_cov);
    CHECK(broken.support == before.support);
  }

  TEST_CASE("premise update matches explicit inversion") {
    Rng rng(123);
    for (int n : {1, 2, 4, 6}) {
      Matrix cov0 = Matrix::Identity(n, n) * 0.5;
      auto rule = make_rule(Vector::Zero(n), cov0.inverse(), Matrix::Zero(n + 1, 2));
      oracle::CovariancePremise ref{Vector::Zero(n), cov0, 1};
      for (int t = 0; t < 500; ++t) {
        Vector x(n);
        for (int j = 0; j < n; ++j) x(j) = rng.normal() + (j == 0 ? 1.0 : 0.0);
        REQUIRE(update_premise(rule, x));
        ref.push(x);
      }
      CHECK((rule.center - ref.center).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((rule.inv_cov - ref.precision()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("fwgrls") {
    auto r = make_rule(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Constant(3, 2, 0.3));
    const FuzzyRule before = r;
    fwgrls_update(r, extend(vec({1.0, 2.0})), vec({1.0, 0.0}), 0.0, 1e-4);
    CHECK(r.consequent == before.consequent);
    CHECK(r.rls_cov == before.rls_cov);

    // Exact prediction with no decay leaves W unchanged.
    Matrix w(3, 2);
    w << 0.5, 0.5, 0.25, -0.25, 0.0, 0.0;
    auto exact = make_rule(Vector::Zero(2), Matrix::Identity(2, 2), w);
    fwgrls_update(exact, extend(vec({2.0, 7.0})), vec({1.0, 0.0}), 1.0, 0.0);
    CHECK((exact.consequent - w).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("fwgrls with lambda 1 and no decay equals batch least squares") {
    Rng rng(77);
    const int n = 3;
    auto r = make_rule(Vector::Zero(n), Matrix::Identity(n, n), Matrix::Zero(n + 1, 2));
    Matrix X(200, n + 1);
    Matrix T(200, 2);
    for (int t = 0; t < 200; ++t) {
      Vector x(n);
      for (int j = 0; j < n; ++j) x(j) = rng.uniform(-1, 1);
      const int label = x.sum() + 0.3 * rng.normal() > 0 ? 1 : 0;
      X.row(t) = extend(x).transpose();
      T.row(t) = one_hot(label, 2).transpose();
      fwgrls_update(r, extend(x), one_hot(label, 2), 1.0, 0.0);
    }
    CHECK((r.consequent - oracle::normal_equations(X, T)).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("ers prune") {
    RuleBase one;
    one.rules.push_back(make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Zero(2, 2)));
    CHECK(ers_prune(one, 0.1) == 0);

    RuleBase twins;
    twins.rules.push_back(make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Ones(2, 2)));
    twins.rules.push_back(twins.rules[0]);
    CHECK(ers_prune(twins, 0.1) == 0);
    CHECK(twins.size() == 2);

    RuleBase mixed;
    mixed.rules.push_back(make_rule(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Ones(2, 2)));
    mixed.rules.push_back(make_rule(Vector::Ones(1), Matrix::Identity(1, 1), Matrix::Zero(2, 2)));
    CHECK(ers_prune(mixed, 0.1) == 1);
    CHECK(mixed.size() == 1);
    CHECK(mixed.reserve.size() == 1);
    CHECK(mixed.rules[0].consequent == Matrix::Ones(2, 2));
  }

  TEST_CASE("pplus prune and recall") {
    RuleBase rb;
    Matrix w_far = Matrix::Constant(2, 2, 0.7);
    rb.rules.push_back(make_rule(vec({0.0}), Matrix::Identity(1, 1), Matrix::Ones(2, 2)));
    rb.rules.push_back(make_rule(vec({-20.0}), Matrix::Identity(1, 1), w_far));
    DensityAccumulators acc;
    for (int i = 0; i < 20; ++i) acc.push(vec({0.0}), 1.0);
    const auto res = pplus_step(rb, acc, vec({0.0}), 0.1);
    CHECK(res.pruned == 1);
    CHECK(res.recalled == 0);
    REQUIRE(rb.reserve.size() == 1);
    CHECK(rb.reserve[0].consequent == w_far);

    // The distribution returns to the parked region.
    DensityAccumulators back;
    for (int i = 0; i < 20; ++i) back.push(vec({-20.0}), 1.0);
    const auto rec = pplus_step(rb, back, vec({-10.0}), 0.1);
    CHECK(rec.recalled == 1);
    CHECK(std::any_of(rb.rules.begin(), rb.rules.end(), [&](const FuzzyRule& r) { return r.consequent == w_far; }));

    RuleBase solo;
    solo.rules.push_back(make_rule(vec({0.0}), Matrix::Identity(1, 1), Matrix::Ones(2, 2)));
    const auto quiet = pplus_step(solo, acc, vec({0.0}), 0.1);
    CHECK(quiet.recalled == 0);
    CHECK(solo.size() == 1);
  }

  TEST_CASE("reserve rules never fire") {
    RuleBase rb;
    rb.rules.push_back(make_rule(vec({0.0}), Matrix::Identity(1, 1), Matrix::Ones(2, 2)));
    const auto before = infer(rb, vec({0.0})).scores;
    rb.reserve.push_back(make_rule(vec({0.0}), Matrix::Identity(1, 1), Matrix::Constant(2, 2, 9.0)));
    CHECK(infer(rb, vec({0.0})).scores == before);
  }

  TEST_CASE("pclass training") {
    PClass first(2, 2, LearnerParams{});
    first.train_sample(vec({0.5, 0.5}), 1);
    CHECK(first.rules().size() == 1);

    PClass same(2, 2, LearnerParams{});
    for (int i = 0; i < 100; ++i) same.train_sample(vec({0.5, -0.5}), i % 2);
    CHECK(same.rules().size() == 1);

    PClass blobs(2, 2, LearnerParams{});
    Rng rng(4);
    for (int i = 0; i < 250; ++i) {
      const int c = i % 2;
      const double m = c ? 3.0 : -3.0;
      blobs.train_sample(vec({m + 0.3 * rng.normal(), m + 0.3 * rng.normal()}), c);
    }
    CHECK(blobs.rules().size() >= 2);
    CHECK(blobs.predict(vec({-3.0, -3.0})).label == 0);
    CHECK(blobs.predict(vec({3.0, 3.0})).label == 1);

    CHECK_THROWS_AS(blobs.train_sample(vec({1.0}), 0), DataError);
    CHECK_THROWS_AS(blobs.train_sample(vec({1.0, 1.0}), 2), DataError);
  }

  TEST_CASE("rule count never drops below one") {
    PClass p(2, 2, LearnerParams{});
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
      const double shift = i < 250 ? 0.0 : 8.0;
      p.train_sample(vec({shift + rng.normal(), rng.normal()}), rng.uniform() < 0.5 ? 0 : 1);
      REQUIRE(p.rules().size() >= 1);
      if (i % 50 == 0) p.prune_insignificant();
      REQUIRE(p.rules().size() >= 1);
    }
  }
}
