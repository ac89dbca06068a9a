#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mvsel/graphlap.hpp"
#include "oracles.hpp"

using namespace mvsel;

TEST_SUITE("graphlap") {

TEST_CASE("small graphs by hand") {
  GraphSpec pair{2, {{0, 1, 1.0}}};
  const auto lp = build_laplacian(pair);
  const Matrix expect = (Matrix(2, 2) << 1, -1, -1, 1).finished();
  CHECK(lp.L == expect);
  CHECK(lp.normalized == expect);
  CHECK(lp.degrees(0) == 1.0);

  GraphSpec tri{3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}};
  const auto lt = build_laplacian(tri);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(lt.normalized(i, j) == doctest::Approx(i == j ? 1.0 : -0.5).epsilon(1e-15));

  GraphSpec empty{4, {}};
  const auto le = build_laplacian(empty);
  CHECK(le.L.isZero(0));
  CHECK(le.normalized.isZero(0));
}

TEST_CASE("edge list parsing") {
  const auto g = parse_edge_list("0 1\n1 2\n", 3);
  CHECK(g.edges.size() == 2);
  const auto l = build_laplacian(g);
  CHECK(l.degrees(0) == 1.0);
  CHECK(l.degrees(1) == 2.0);
  CHECK(l.degrees(2) == 1.0);

  const auto w = parse_edge_list("# comment\n0 1 0.5\n", 2);
  REQUIRE(w.edges.size() == 1);
  CHECK(w.edges[0].w == 0.5);

  CHECK_THROWS(parse_edge_list("0 0 1\n", 2));
  CHECK_THROWS(parse_edge_list("0 5\n", 3));
  CHECK_THROWS(parse_edge_list("0 1\n1 0\n", 3));
  CHECK_THROWS(parse_edge_list("0 1 -2\n", 3));
  CHECK_THROWS(parse_edge_list("0 x\n", 3));
  try {
    parse_edge_list("0 1\n\n2 2\n", 3);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  const GraphSpec round = parse_edge_list(format_edge_list(w), 2);
  CHECK(round.edges.size() == 1);
  CHECK(round.edges[0].w == 0.5);
}

TEST_CASE("random graphs against the brute-force oracle") {
  Rng rng(404);
  for (int t = 0; t < 200; ++t) {
    const Index p = 1 + static_cast<Index>(rng.below(12));
    const auto g = oracle::random_graph(p, rng.uniform(0.0, 0.8), rng);
    const auto lap = build_laplacian(g);
    Matrix l_ref;
    const Matrix n_ref = oracle::brute_force_normalized_laplacian(g, &l_ref);
    REQUIRE((lap.normalized - n_ref).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((lap.L - l_ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((lap.L * Vector::Ones(p)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(lap.normalized == lap.normalized.transpose());
    for (Index v = 0; v < p; ++v)
      if (lap.degrees(v) == 0) {
        CHECK(lap.normalized.row(v).isZero(0));
        CHECK(lap.normalized.col(v).isZero(0));
      }
    Eigen::SelfAdjointEigenSolver<Matrix> es(lap.normalized);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK(es.eigenvalues().maxCoeff() <= 2 + 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> esl(lap.L);
    CHECK(esl.eigenvalues().minCoeff() >= -1e-10);
  }
}

}
