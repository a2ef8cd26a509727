#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <vector>

#include "coltrack/sen/feature.hpp"
#include "helpers.hpp"

using namespace coltrack;
using sen::Normalization;
using sen::build_feature;
using sen::stack_feature;
namespace th = coltrack::testing;

namespace {

ColonoscopeShape shape_with_equal_dirs(Rng& rng, std::size_t n) {
  ColonoscopeShape shape;
  shape.points = th::random_points(rng, n);
  const UnitVec3 d = th::random_direction(rng);
  shape.directions.assign(n, d);
  return shape;
}

}  // namespace

TEST_SUITE("sen_feature") {

TEST_CASE("A rows hold normalized position and direction") {
  ColonoscopeShape shape;
  shape.points = {{10, 20, 30}, {40, 50, 60}};
  shape.directions = {{1, 0, 0}, {0, 1, 0}};
  const Normalization norm{{10, 10, 10}, 10.0};
  const auto f = build_feature(shape, norm);

  REQUIRE(f.A.rows() == 2);
  REQUIRE(f.A.cols() == 6);
  CHECK(f.A(0, 0) == doctest::Approx(0.0));
  CHECK(f.A(0, 1) == doctest::Approx(1.0));
  CHECK(f.A(0, 2) == doctest::Approx(2.0));
  CHECK(f.A(0, 3) == doctest::Approx(1.0));
  CHECK(f.A(1, 0) == doctest::Approx(3.0));
  CHECK(f.A(1, 4) == doctest::Approx(1.0));
  CHECK(f.A(1, 5) == doctest::Approx(0.0));
}

TEST_CASE("equal directions give an all-ones D") {
  Rng rng(61);
  const auto shape = shape_with_equal_dirs(rng, 6);
  const auto f = build_feature(shape, {{0, 0, 0}, 100.0});
  for (Eigen::Index i = 0; i < f.D.rows(); ++i)
    for (Eigen::Index j = 0; j < f.D.cols(); ++j)
      CHECK(f.D(i, j) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("P is invariant to translation, D exactly so") {
  Rng rng(62);
  auto shape = th::synthetic_scope(rng, 6);
  const Normalization norm{{5, -3, 2}, 80.0};
  const auto base = build_feature(shape, norm);

  for (auto& p : shape.points) p += {17.0, -140.0, 2.5};
  const auto moved = build_feature(shape, norm);
  CHECK((moved.P - base.P).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((moved.D - base.D).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("P matches a direct Gram computation") {
  Rng rng(63);
  const auto shape = th::synthetic_scope(rng, 6);
  const Normalization norm{{0, 0, 0}, 120.0};
  const auto f = build_feature(shape, norm);

  Point3 centroid{0, 0, 0};
  for (const auto& p : shape.points) centroid += p;
  centroid = centroid * (1.0 / 6.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const Point3 a = shape.points[i] - centroid;
      const Point3 b = shape.points[j] - centroid;
      const double expected =
          (a.x * b.x + a.y * b.y + a.z * b.z) / (norm.scale * norm.scale);
      CHECK(f.P(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("D matches pairwise direction dot products") {
  Rng rng(64);
  const auto shape = th::synthetic_scope(rng, 5);
  const auto f = build_feature(shape, {{0, 0, 0}, 50.0});
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(f.D(i, j) ==
            doctest::Approx(shape.directions[i].dot(shape.directions[j]))
                .epsilon(1e-12));
}

TEST_CASE("feature matrices are symmetric with unit D diagonal") {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const auto shape = th::synthetic_scope(rng, 6);
    const auto f = build_feature(shape, {{0, 0, 0}, 90.0});
    CHECK((f.P - f.P.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((f.D - f.D.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index i = 0; i < f.D.rows(); ++i)
      CHECK(f.D(i, i) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("P is positive semi-definite") {
  Rng rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    const auto shape = th::synthetic_scope(rng, 6);
    const auto f = build_feature(shape, {{0, 0, 0}, 75.0});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.P);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-7);
  }
}

TEST_CASE("P and D are invariant under joint rotation") {
  Rng rng(67);
  auto shape = th::synthetic_scope(rng, 6);
  const Normalization norm{{0, 0, 0}, 100.0};
  const auto base = build_feature(shape, norm);

  const auto rot = th::random_transform(rng, 3.0, 0.0);
  for (auto& p : shape.points) p = rot.apply(p);
  for (auto& d : shape.directions) d = rot.apply(d);
  const auto turned = build_feature(shape, norm);
  CHECK((turned.P - base.P).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((turned.D - base.D).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("stack_feature pads planes to a common canvas") {
  Rng rng(68);
  const auto small = th::synthetic_scope(rng, 4);
  const auto f = build_feature(small, {{0, 0, 0}, 60.0});
  const auto planes = stack_feature(f);

  for (const auto& plane : planes) {
    CHECK(plane.rows() == 4);
    CHECK(plane.cols() == 6);
  }
  CHECK((planes[0] - f.A).cwiseAbs().maxCoeff() == 0.0);
  // P and D sit top-left; the two extra columns stay zero.
  CHECK((planes[1].block(0, 0, 4, 4) - f.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK(planes[1].block(0, 4, 4, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((planes[2].block(0, 0, 4, 4) - f.D).cwiseAbs().maxCoeff() == 0.0);
  CHECK(planes[2].block(0, 4, 4, 2).cwiseAbs().maxCoeff() == 0.0);

  const auto wide = th::synthetic_scope(rng, 8);
  const auto fw = build_feature(wide, {{0, 0, 0}, 60.0});
  const auto wide_planes = stack_feature(fw);
  for (const auto& plane : wide_planes) {
    CHECK(plane.rows() == 8);
    CHECK(plane.cols() == 8);
  }
  CHECK((wide_planes[0].block(0, 0, 8, 6) - fw.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK(wide_planes[0].block(0, 6, 8, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_feature validates its inputs") {
  Rng rng(69);
  const auto shape = th::synthetic_scope(rng, 6);
  CHECK_COLTRACK_ERROR(build_feature(shape, {{0, 0, 0}, 0.0}), InvalidInput);
  CHECK_COLTRACK_ERROR(build_feature(shape, {{0, 0, 0}, -5.0}), InvalidInput);

  ColonoscopeShape bad;
  bad.points = {{0, 0, 0}};
  bad.directions = {{0, 0, 1}};
  CHECK_COLTRACK_ERROR(build_feature(bad, {{0, 0, 0}, 1.0}), InvalidInput);
}

}  // TEST_SUITE
