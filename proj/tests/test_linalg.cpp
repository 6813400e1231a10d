#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "eclqr/linalg.hpp"
#include "support/reference.hpp"

using namespace eclqr;
using linalg::Mat;
using linalg::RowWeight;
using linalg::Vec;
using linalg::WeightedSystem;

namespace {

WeightedSystem make_sys(const Mat& a, const Vec& b, const std::vector<RowWeight>& w) {
  return WeightedSystem{a, b, w};
}

Vec solve_full(const WeightedSystem& sys) {
  auto fact = linalg::eliminate_block(sys, sys.cols());
  linalg::EliminatedBlock blk;
  blk.id = 0;
  blk.frontal = fact.eliminated.a;
  blk.rhs = fact.eliminated.b;
  return linalg::back_solve({blk}).at(0);
}

/// Stacks sqrt(precision)-scaled finite rows of eliminated + remainder.
std::pair<Mat, Vec> whitened_stack(const linalg::PartialFactorization& f) {
  const Eigen::Index cols = f.eliminated.a.cols();
  Mat r(f.eliminated.rows() + f.remainder.rows(), cols);
  Vec d(r.rows());
  Eigen::Index at = 0;
  for (const auto* part : {&f.eliminated, &f.remainder}) {
    for (Eigen::Index i = 0; i < part->rows(); ++i) {
      const double s = std::sqrt(part->weights[i].precision());
      r.row(at) = s * part->a.row(i);
      d(at) = s * part->b(i);
      ++at;
    }
  }
  return {r, d};
}

}  // namespace

TEST_CASE("RowWeight rejects non-positive precision") {
  CHECK_THROWS_AS(RowWeight::finite(0.0), std::invalid_argument);
  CHECK_THROWS_AS(RowWeight::finite(-1.0), std::invalid_argument);
  CHECK(RowWeight::constrained().is_constrained());
  CHECK(RowWeight::finite(2.0).precision() == 2.0);
}

TEST_CASE("single hard constraint pins the variable") {
  auto sys = make_sys(Mat::Constant(1, 1, 1.0), Vec::Constant(1, 5.0),
                      {RowWeight::constrained()});
  auto fact = linalg::eliminate_block(sys, 1);
  REQUIRE(fact.eliminated.rows() == 1);
  CHECK(fact.eliminated.a(0, 0) == 1.0);
  CHECK(fact.eliminated.b(0) == 5.0);
  CHECK(fact.eliminated.weights[0].is_constrained());
  CHECK(fact.remainder.rows() == 0);
}

TEST_CASE("state elimination: dynamics pivot, objective pushed onto separator") {
  // Columns [x2 (2) | u1 (1) | x1 (2)], terminal cost Q = diag(4, 9).
  const Mat q_sqrt = Vec{{2.0, 3.0}}.asDiagonal();
  const Mat fu{{0.5}, {1.0}};
  const Mat fx{{1.0, 0.1}, {0.0, 1.0}};

  Mat a = Mat::Zero(4, 5);
  a.block(0, 0, 2, 2) = q_sqrt;
  a.block(2, 0, 2, 2) = Mat::Identity(2, 2);
  a.block(2, 2, 2, 1) = -fu;
  a.block(2, 3, 2, 2) = -fx;
  Vec b = Vec::Zero(4);
  auto sys = make_sys(a, b,
                      {RowWeight::finite(1.0), RowWeight::finite(1.0), RowWeight::constrained(),
                       RowWeight::constrained()});

  auto fact = linalg::eliminate_block(sys, 2);
  REQUIRE(fact.eliminated.rows() == 2);
  CHECK(fact.eliminated.weights[0].is_constrained());
  CHECK(fact.eliminated.weights[1].is_constrained());
  CHECK(fact.eliminated.a.leftCols(2).isApprox(Mat::Identity(2, 2)));
  CHECK(fact.eliminated.a.middleCols(2, 1).isApprox(-fu));
  CHECK(fact.eliminated.a.middleCols(3, 2).isApprox(-fx));

  REQUIRE(fact.remainder.rows() == 2);
  CHECK(fact.remainder.a.leftCols(2).isZero(0.0));
  CHECK(fact.remainder.a.middleCols(2, 1).isApprox(q_sqrt * fu));
  CHECK(fact.remainder.a.middleCols(3, 2).isApprox(q_sqrt * fx));
  CHECK(!fact.remainder.weights[0].is_constrained());
}

TEST_CASE("finite 2x2 system matches the normal equations") {
  const Mat a{{2.0, 1.0}, {0.0, 3.0}};
  const Vec b{{4.0, 3.0}};
  auto sys = make_sys(a, b, {RowWeight::finite(1.0), RowWeight::finite(1.0)});

  auto fact = linalg::eliminate_block(sys, 2);
  CHECK(fact.remainder.rows() == 0);
  CHECK(fact.eliminated.a(0, 0) == 1.0);
  CHECK(fact.eliminated.a(1, 1) == 1.0);
  CHECK(fact.eliminated.a(1, 0) == 0.0);

  // A'Ax = A'b gives x = [1.5, 1] by hand.
  const Vec x = solve_full(sys);
  CHECK(x(0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("back_solve applies rows in order") {
  SUBCASE("single pinned variable") {
    linalg::EliminatedBlock blk;
    blk.id = 7;
    blk.frontal = Mat::Identity(1, 1);
    blk.rhs = Vec::Constant(1, 5.0);
    auto got = linalg::back_solve({blk});
    CHECK(got.at(7)(0) == 5.0);
  }

  SUBCASE("affine chain x1 = 2, u1 = -0.5 x1, x2 = 1.01 x1 + 0.01 u1") {
    linalg::EliminatedBlock x1{0, Mat::Identity(1, 1), {}, Vec::Constant(1, 2.0)};
    linalg::EliminatedBlock u1{1, Mat::Identity(1, 1), {{0, Mat::Constant(1, 1, 0.5)}},
                               Vec::Zero(1)};
    linalg::EliminatedBlock x2{2,
                               Mat::Identity(1, 1),
                               {{1, Mat::Constant(1, 1, -0.01)}, {0, Mat::Constant(1, 1, -1.01)}},
                               Vec::Zero(1)};
    auto got = linalg::back_solve({x1, u1, x2});
    CHECK(got.at(1)(0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(got.at(2)(0) == doctest::Approx(2.01).epsilon(1e-15));
  }

  SUBCASE("unresolved parent") {
    linalg::EliminatedBlock blk{0, Mat::Identity(1, 1), {{9, Mat::Identity(1, 1)}}, Vec::Zero(1)};
    CHECK_THROWS_AS(linalg::back_solve({blk}), MissingParent);
  }
}

TEST_CASE("error paths") {
  SUBCASE("underdetermined column") {
    auto sys = make_sys(Mat::Zero(2, 1), Vec::Zero(2),
                        {RowWeight::finite(1.0), RowWeight::finite(1.0)});
    CHECK_THROWS_AS(linalg::eliminate_block(sys, 1), Underdetermined);
  }
  SUBCASE("underdetermined reports the dead column") {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 0) = 1.0;
    auto sys = make_sys(a, Vec::Zero(2), {RowWeight::finite(1.0), RowWeight::finite(1.0)});
    try {
      linalg::eliminate_block(sys, 2);
      FAIL("expected Underdetermined");
    } catch (const Underdetermined& e) {
      CHECK(e.column == 1);
    }
  }
  SUBCASE("contradictory constraints are infeasible") {
    auto sys = make_sys(Mat::Ones(2, 1), Vec{{0.0, 1.0}},
                        {RowWeight::constrained(), RowWeight::constrained()});
    CHECK_THROWS_AS(linalg::eliminate_block(sys, 1), Infeasible);
  }
  SUBCASE("row count mismatch") {
    auto sys = make_sys(Mat::Ones(2, 1), Vec::Zero(1),
                        {RowWeight::finite(1.0), RowWeight::finite(1.0)});
    CHECK_THROWS_AS(linalg::eliminate_block(sys, 1), DimensionMismatch);
  }
  SUBCASE("k beyond width") {
    auto sys = make_sys(Mat::Ones(1, 1), Vec::Zero(1), {RowWeight::finite(1.0)});
    CHECK_THROWS_AS(linalg::eliminate_block(sys, 2), DimensionMismatch);
  }
}

TEST_CASE("round trip against weighted normal equations") {
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> prec(0.2, 5.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int c = std::uniform_int_distribution<int>(1, 6)(rng);
    const int r = std::uniform_int_distribution<int>(c, 12)(rng);
    const Mat a = testref::random_well_conditioned(rng, r, c);
    const Vec b = testref::random_vec(rng, r);
    Vec w(r);
    std::vector<RowWeight> weights;
    for (int i = 0; i < r; ++i) {
      w(i) = prec(rng);
      weights.push_back(RowWeight::finite(w(i)));
    }
    const Vec expected = testref::weighted_lsq(a, b, w);
    const Vec got = solve_full(make_sys(a, b, weights));
    CHECK((got - expected).norm() <= 1e-9 * std::max(1.0, expected.norm()));
  }
}

TEST_CASE("information preservation for finite systems, full and partial") {
  std::mt19937 rng(72);
  std::uniform_real_distribution<double> prec(0.2, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = std::uniform_int_distribution<int>(2, 6)(rng);
    const int r = std::uniform_int_distribution<int>(c, 12)(rng);
    const Mat a = testref::random_well_conditioned(rng, r, c);
    const Vec b = testref::random_vec(rng, r);
    Vec w(r);
    std::vector<RowWeight> weights;
    for (int i = 0; i < r; ++i) {
      w(i) = prec(rng);
      weights.push_back(RowWeight::finite(w(i)));
    }
    const Mat info = a.transpose() * w.asDiagonal() * a;
    const Vec info_rhs = a.transpose() * w.asDiagonal() * b;

    for (Eigen::Index k : {static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c / 2)}) {
      auto fact = linalg::eliminate_block(make_sys(a, b, weights), k);
      auto [rmat, rrhs] = whitened_stack(fact);
      CHECK((rmat.transpose() * rmat - info).norm() <= 1e-10 * info.norm());
      CHECK((rmat.transpose() * rrhs - info_rhs).norm() <=
            1e-10 * std::max(1.0, info_rhs.norm()));
      CHECK(fact.remainder.a.leftCols(k).isZero(0.0));
    }
  }
}

TEST_CASE("mixed systems: constraints eliminated exactly, minimizer matches KKT") {
  std::mt19937 rng(73);
  std::uniform_real_distribution<double> prec(0.2, 5.0);
  for (int trial = 0; trial < 120; ++trial) {
    const int c = std::uniform_int_distribution<int>(1, 6)(rng);
    const int rc = std::uniform_int_distribution<int>(0, c)(rng);
    const int rf = std::uniform_int_distribution<int>(c, 12)(rng);

    const Mat af = testref::random_well_conditioned(rng, rf, c);
    const Vec bf = testref::random_vec(rng, rf);
    const Mat cmat = rc > 0 ? testref::random_well_conditioned(rng, rc, c) : Mat::Zero(0, c);
    const Vec x_feas = testref::random_vec(rng, c);
    const Vec d = cmat * x_feas;

    // Interleave constraint rows among the finite rows.
    Mat a(rf + rc, c);
    Vec b(rf + rc);
    Vec w = Vec::Ones(rf + rc);
    std::vector<RowWeight> weights;
    int fi = 0, ci = 0;
    for (int i = 0; i < rf + rc; ++i) {
      const bool take_con = ci < rc && (i % 3 == 1 || fi >= rf);
      if (take_con) {
        a.row(i) = cmat.row(ci);
        b(i) = d(ci);
        weights.push_back(RowWeight::constrained());
        ++ci;
      } else {
        a.row(i) = af.row(fi);
        b(i) = bf(fi);
        w(i) = prec(rng);
        weights.push_back(RowWeight::finite(w(i)));
        ++fi;
      }
    }

    Vec wf(rf);
    int at = 0;
    for (int i = 0; i < rf + rc; ++i)
      if (!weights[i].is_constrained()) wf(at++) = w(i);

    const Vec expected = testref::constrained_lsq(af, bf, wf, cmat, d);
    const Vec got = solve_full(make_sys(a, b, weights));
    CHECK((got - expected).norm() <= 1e-8 * std::max(1.0, expected.norm()));
    if (rc > 0) CHECK((cmat * got - d).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("constraint pivot selection: largest magnitude, then lowest row") {
  SUBCASE("larger entry wins") {
    const Mat a{{1.0, 5.0}, {-2.0, 7.0}};
    const Vec b{{3.0, 3.0}};
    auto fact = linalg::eliminate_block(
        make_sys(a, b, {RowWeight::constrained(), RowWeight::constrained()}), 1);
    CHECK(fact.eliminated.a(0, 0) == 1.0);
    CHECK(fact.eliminated.a(0, 1) == doctest::Approx(-3.5));
    CHECK(fact.eliminated.b(0) == doctest::Approx(-1.5));
  }
  SUBCASE("tied entries go to the lowest row") {
    const Mat a{{1.0, 5.0}, {1.0, 7.0}};
    const Vec b{{3.0, 3.0}};
    auto fact = linalg::eliminate_block(
        make_sys(a, b, {RowWeight::constrained(), RowWeight::constrained()}), 1);
    CHECK(fact.eliminated.a(0, 1) == doctest::Approx(5.0));
    CHECK(fact.remainder.a(0, 1) == doctest::Approx(2.0));
  }
}

TEST_CASE("factorization is deterministic") {
  std::mt19937 rng(74);
  const Mat a = testref::random_mat(rng, 8, 4);
  const Vec b = testref::random_vec(rng, 8);
  std::vector<RowWeight> weights;
  for (int i = 0; i < 8; ++i)
    weights.push_back(i % 3 == 0 ? RowWeight::constrained() : RowWeight::finite(1.0 + i));
  auto sys = make_sys(a, b, weights);

  auto f1 = linalg::eliminate_block(sys, 4);
  auto f2 = linalg::eliminate_block(sys, 4);
  CHECK((f1.eliminated.a.array() == f2.eliminated.a.array()).all());
  CHECK((f1.eliminated.b.array() == f2.eliminated.b.array()).all());
  CHECK((f1.remainder.a.array() == f2.remainder.a.array()).all());
  CHECK((f1.remainder.b.array() == f2.remainder.b.array()).all());
  REQUIRE(f1.eliminated.weights.size() == f2.eliminated.weights.size());
  for (std::size_t i = 0; i < f1.eliminated.weights.size(); ++i)
    CHECK(f1.eliminated.weights[i] == f2.eliminated.weights[i]);
}

TEST_CASE("mac counter advances and resets") {
  linalg::reset_mac_count();
  CHECK(linalg::mac_count() == 0);
  std::mt19937 rng(75);
  const Mat a = testref::random_mat(rng, 6, 3);
  const Vec b = testref::random_vec(rng, 6);
  std::vector<RowWeight> weights(6, RowWeight::finite(1.0));
  solve_full(make_sys(a, b, weights));
  CHECK(linalg::mac_count() > 0);
  linalg::reset_mac_count();
  CHECK(linalg::mac_count() == 0);
}
