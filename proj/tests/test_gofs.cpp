#include "doctest.h"
#include "oracles.hpp"
#include "pens/gofs.hpp"

using namespace pens;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

RuleBase single(const Matrix& w) {
  RuleBase rb;
  FuzzyRule r;
  r.center = Vector::Zero(w.rows() - 1);
  r.inv_cov = Matrix::Identity(w.rows() - 1, w.rows() - 1);
  r.consequent = w;
  r.rls_cov = Matrix::Identity(w.rows(), w.rows());
  rb.rules.push_back(r);
  return rb;
}

}  // namespace

TEST_SUITE("gofs") {
  TEST_CASE("feature mask construction") {
    const auto all = FeatureMask::all(3);
    CHECK(all.size() == 3);
    CHECK(all.weights() == Vector::Ones(3));

    const auto m = FeatureMask::of(4, {3, 1});
    CHECK(m.selected() == std::vector<int>{1, 3});
    CHECK(m.contains(3));
    CHECK_FALSE(m.contains(0));
    CHECK_THROWS_AS(FeatureMask::of(3, {0, 0}), ConfigError);
    CHECK_THROWS_AS(FeatureMask::of(3, {5}), ConfigError);

    const auto top = FeatureMask::top(vec({0.1, 0.4, 0.4, 0.1}), 2);
    CHECK(top.selected() == std::vector<int>{1, 2});
    const auto tie = FeatureMask::top(vec({0.25, 0.25, 0.25, 0.25}), 2);
    CHECK(tie.selected() == std::vector<int>{0, 1});
    CHECK(FeatureMask::top(vec({0.2, 0.8}), 5).size() == 2);
  }

  TEST_CASE("apply mask") {
    const Vector z = vec({1.5, -2.0});
    CHECK(apply_mask(FeatureMask::all(2), z) == z);
    CHECK(apply_mask(FeatureMask::of(2, {0}), z) == vec({1.5, 0.0}));
    CHECK(apply_mask(FeatureMask::of(2, {1}), Vector::Zero(2)) == Vector::Zero(2));
    CHECK_THROWS_AS(apply_mask(FeatureMask::all(3), z), DataError);
  }

  TEST_CASE("feature contributions") {
    Matrix w(3, 2);
    w << 100.0, -50.0, 2.0, -1.0, 0.5, 0.5;  // feature sums 3 and 1
    RuleBase rb = single(w);
    ConstRulePool pool{&rb};
    const Vector k = feature_contributions(pool, 2);
    CHECK(k(0) == doctest::Approx(0.75));
    CHECK(k(1) == doctest::Approx(0.25));

    RuleBase big = single(w);
    big.rules[0].consequent.row(0).setConstant(1e9);
    ConstRulePool big_pool{&big};
    CHECK(feature_contributions(big_pool, 2).isApprox(k));

    RuleBase flat = single(Matrix::Ones(3, 2));
    ConstRulePool flat_pool{&flat};
    CHECK(feature_contributions(flat_pool, 2).isApprox(Vector::Constant(2, 0.5)));

    RuleBase zero = single(Matrix::Zero(3, 2));
    ConstRulePool zero_pool{&zero};
    CHECK(feature_contributions(zero_pool, 2).isApprox(Vector::Constant(2, 0.5)));

    // Two experts pool their rules.
    ConstRulePool both{&rb, &flat};
    const Vector kb = feature_contributions(both, 2);
    CHECK(kb.sum() == doctest::Approx(1.0));
    CHECK(kb(0) == doctest::Approx(5.0 / 8.0));
  }

  TEST_CASE("correct prediction only decays") {
    GofsState st;
    st.budget = 1;
    st.mask = FeatureMask::of(2, {1});
    RuleBase rb = single(Matrix::Constant(3, 2, 2.0));
    RulePool pool{&rb};
    gofs_step(st, pool, Vector::Zero(2), extend(Vector::Zero(2)), extend(Vector::Zero(2)), vec({1.0, 0.0}), true);
    CHECK(rb.rules[0].consequent.isApprox(Matrix::Constant(3, 2, 2.0 * 0.998)));
    CHECK(st.mask.selected() == std::vector<int>{1});
  }

  TEST_CASE("projection onto the ball") {
    GofsState st;
    st.budget = 1;
    // Target equals the current output, so only decay and projection act.
    Matrix w = Matrix::Zero(3, 2);
    w(0, 0) = 20.0;
    RuleBase rb = single(w);
    RulePool pool{&rb};
    const Vector x = Vector::Zero(2);
    gofs_step(st, pool, x, extend(x), extend(x), vec({20.0, 0.0}), false);
    CHECK(rb.rules[0].consequent(0, 0) == doctest::Approx(10.0));
    CHECK(pooled_norm(ConstRulePool{&rb}) <= 10.0 + 1e-12);

    Matrix small = Matrix::Zero(3, 2);
    small(0, 0) = 5.0;
    RuleBase inside = single(small);
    RulePool ipool{&inside};
    gofs_step(st, ipool, x, extend(x), extend(x), vec({5.0, 0.0}), false);
    CHECK(inside.rules[0].consequent(0, 0) == doctest::Approx(5.0 * 0.998));
  }

  TEST_CASE("wrong prediction follows the pooled gradient") {
    GofsState st;
    st.budget = 1;
    Rng rng(12);
    RuleBase a = oracle::random_expert(rng, 2, 2);
    RuleBase b = oracle::random_expert(rng, 2, 1);
    RuleBase a0 = a, b0 = b;
    RulePool pool{&a, &b};
    const Vector x = vec({0.2, -0.4});
    const Vector xe = extend(x);
    const Vector target = vec({0.0, 1.0});
    gofs_step(st, pool, x, xe, xe, target, false);

    std::vector<const FuzzyRule*> rules{&a0.rules[0], &a0.rules[1], &b0.rules[0]};
    std::vector<double> phi;
    double sum = 0.0;
    for (auto* r : rules) {
      phi.push_back(std::exp(-0.5 * (x - r->center).dot(r->inv_cov * (x - r->center))));
      sum += phi.back();
    }
    Vector score = Vector::Zero(2);
    for (std::size_t i = 0; i < rules.size(); ++i) score += phi[i] / sum * (rules[i]->consequent.transpose() * xe);
    const Vector err = target - score;
    std::vector<Matrix> want;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      want.push_back(0.998 * rules[i]->consequent + 0.2 * phi[i] / sum * xe * err.transpose());
    }
    double norm = 0.0;
    for (const auto& m : want) norm += m.squaredNorm();
    norm = std::sqrt(norm);
    const double f = std::min(1.0, 10.0 / norm);
    CHECK(a.rules[0].consequent.isApprox(f * want[0], 1e-12));
    CHECK(a.rules[1].consequent.isApprox(f * want[1], 1e-12));
    CHECK(b.rules[0].consequent.isApprox(f * want[2], 1e-12));
    CHECK(st.initialized);
    CHECK(st.mask.size() == 1);
    CHECK(st.kappa.sum() == doctest::Approx(1.0));
    CHECK((st.kappa.array() >= 0.0).all());
  }

  TEST_CASE("masked features can come back") {
    // The model regressor hides feature 1, yet the error keeps training it.
    GofsState st;
    st.budget = 1;
    st.mask = FeatureMask::of(2, {0});
    Matrix w = Matrix::Zero(3, 2);
    w(1, 0) = 0.01;
    RuleBase rb = single(w);
    rb.rules[0].inv_cov = Matrix::Identity(2, 2) * 1e-4;
    RulePool pool{&rb};
    Rng rng(14);
    for (int t = 0; t < 200; ++t) {
      const Vector x = vec({rng.normal(), rng.normal()});
      const Vector target = x(1) > 0 ? vec({1.0, 0.0}) : vec({0.0, 1.0});
      gofs_step(st, pool, x, extend(apply_mask(st.mask, x)), extend(x), target, false);
    }
    CHECK(st.mask.selected() == std::vector<int>{1});
  }
}
