#include "mmrad/meshing_functional.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace mmrad;

namespace {

// Smooth SPD monitor attached to the mesh with Taylor gradients.
MonitorField smooth_monitor_on(const MovingMesh& mesh) {
  SymTensorField M(mesh.grid.M, mesh.grid.N);
  M.xx = 1.5 + (2.0 * mesh.x).sin() * mesh.y;
  M.xy = 0.3 * (mesh.x - mesh.y);
  M.yy = 2.0 + mesh.x * mesh.x;
  return make_monitor_field(M, mesh, 1.0, true);
}

double relative_gradient_error(const MovingMesh& mesh, const MonitorField& mon, double theta) {
  const auto cg = functional_coordinate_gradient(mesh, mon, theta);
  const double eps = 1e-6;
  double err = 0.0, scale = 0.0;
  for (Index n = 0; n < mesh.grid.N; ++n) {
    for (Index m = 0; m < mesh.grid.M; ++m) {
      for (int comp = 0; comp < 2; ++comp) {
        MovingMesh p = mesh, q = mesh;
        (comp == 0 ? p.x : p.y)(m, n) += eps;
        (comp == 0 ? q.x : q.y)(m, n) -= eps;
        const double fd = (functional_value(p, mon, theta) - functional_value(q, mon, theta)) / (2 * eps);
        const double an = comp == 0 ? cg.gx(m, n) : cg.gy(m, n);
        err = std::max(err, std::abs(fd - an));
        scale = std::max(scale, std::abs(fd));
      }
    }
  }
  return err / scale;
}

}  // namespace

TEST_CASE("corner energy closed forms") {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  CHECK(corner_energy<double>(I, I, 0.1) == doctest::Approx(3.6));
  for (double c : {0.5, 2.0, 7.0}) {
    CHECK(corner_energy<double>(I, c * I, 0.1) == doctest::Approx(0.1 * c * (2 / c) * (2 / c) + 3.2 / c));
    CHECK(corner_energy<double>(I, c * I, 0.1) == doctest::Approx(3.6 / c));
  }
}

TEST_CASE("corner energy gradient against finite differences") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 20; ++k) {
    Eigen::Matrix2d F, B;
    F << 1 + u(rng), u(rng), u(rng), 1 + u(rng);
    B << u(rng), u(rng), u(rng), u(rng);
    const Eigen::Matrix2d M = B * B.transpose() + 0.5 * Eigen::Matrix2d::Identity();
    const auto g = corner_energy_gradient<double>(F, M, 0.1);
    const double eps = 1e-6;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Eigen::Matrix2d Fp = F, Fm = F;
        Fp(i, j) += eps;
        Fm(i, j) -= eps;
        const double fd = (corner_energy<double>(Fp, M, 0.1) - corner_energy<double>(Fm, M, 0.1)) / (2 * eps);
        CHECK(g.dF(i, j) == doctest::Approx(fd).epsilon(1e-6));
        Eigen::Matrix2d Mp = M, Mm = M;
        Mp(i, j) += eps;
        Mm(i, j) -= eps;
        const double fm = (corner_energy<double>(F, Mp, 0.1) - corner_energy<double>(F, Mm, 0.1)) / (2 * eps);
        CHECK(g.dM(i, j) == doctest::Approx(fm).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("functional value on uniform meshes") {
  const auto mesh = uniform_mesh(make_grid(9, 7));
  CHECK(functional_value(mesh, constant_monitor(mesh, Eigen::Matrix2d::Identity())) == doctest::Approx(3.6));
  const double c = 2.5;
  CHECK(functional_value(mesh, constant_monitor(mesh, c * Eigen::Matrix2d::Identity())) ==
        doctest::Approx(3.6 / c));
  const auto perturbed = testing::random_mesh(9, 7, 0.2, 1);
  const auto mon = constant_monitor(perturbed, Eigen::Matrix2d::Identity());
  CHECK(functional_value(perturbed, mon) > functional_value(mesh, mon));

  auto folded = mesh;
  folded.x.row(3).swap(folded.x.row(4));
  CHECK(std::isinf(functional_value(folded, mon)));
  CHECK_THROWS_AS(functional_coordinate_gradient(folded, mon), MeshFoldError);
}

TEST_CASE("gradient vanishes on the uniform mesh with a constant monitor") {
  const auto mesh = uniform_mesh(make_grid(8, 8));
  const auto mon = constant_monitor(mesh, 3.0 * Eigen::Matrix2d::Identity());
  const auto g = functional_gradient(mesh, mon);
  const auto cg = functional_coordinate_gradient(mesh, mon);
  for (Index n = 1; n < 7; ++n) {
    for (Index m = 1; m < 7; ++m) {
      CHECK(std::abs(g.d_xi(m, n)) < 1e-12);
      CHECK(std::abs(g.d_eta(m, n)) < 1e-12);
      CHECK(std::abs(cg.gx(m, n)) < 1e-12);
    }
  }
}

TEST_CASE("coordinate gradient against finite differences of the functional") {
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const auto mesh = testing::random_mesh(7, 7, 0.25, seed);
    CHECK(relative_gradient_error(mesh, smooth_monitor_on(mesh), 0.1) <= 1e-4);
    CHECK(relative_gradient_error(mesh, constant_monitor(mesh, Eigen::Matrix2d::Identity()), 0.3) <= 1e-4);
  }
}

TEST_CASE("variational derivative is the transformed coordinate gradient") {
  const auto mesh = testing::random_mesh(7, 7, 0.2, 8);
  const auto mon = smooth_monitor_on(mesh);
  const auto cg = functional_coordinate_gradient(mesh, mon);
  const auto g = functional_gradient(mesh, mon);
  const auto mt = compute_metrics(mesh);
  const Field w = trapezoid_weights(mesh.grid);
  for (Index n = 0; n < 7; ++n) {
    for (Index m = 0; m < 7; ++m) {
      const Eigen::Vector2d gv(cg.gx(m, n), cg.gy(m, n));
      const Eigen::Vector2d d = -mt.jacobian_matrix(m, n).transpose() * gv / (mt.J(m, n) * w(m, n));
      CHECK(g.d_xi(m, n) == doctest::Approx(d(0)));
      CHECK(g.d_eta(m, n) == doctest::Approx(d(1)));
    }
  }
}

TEST_CASE("a displaced node is pulled back") {
  auto mesh = uniform_mesh(make_grid(7, 7));
  const auto mon = constant_monitor(mesh, Eigen::Matrix2d::Identity());
  const double dx = 0.3 * mesh.grid.dxi(), dy = -0.2 * mesh.grid.deta();
  mesh.x(3, 3) += dx;
  mesh.y(3, 3) += dy;
  const auto cg = functional_coordinate_gradient(mesh, mon);
  CHECK(cg.gx(3, 3) * dx + cg.gy(3, 3) * dy > 0.0);
  auto back = mesh;
  back.x(3, 3) -= 1e-3 * cg.gx(3, 3);
  back.y(3, 3) -= 1e-3 * cg.gy(3, 3);
  CHECK(functional_value(back, mon) < functional_value(mesh, mon));
}

TEST_CASE("Hessian is symmetric, positive semidefinite and translation invariant") {
  const auto mesh = testing::random_mesh(6, 6, 0.25, 2);
  const auto mon = smooth_monitor_on(mesh);
  const Eigen::MatrixXd H(functional_hessian(mesh, mon));
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-10 * H.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
  Eigen::VectorXd tx = Eigen::VectorXd::Zero(H.rows()), ty = tx;
  for (Index k = 0; k < mesh.grid.size(); ++k) {
    tx(2 * k) = 1.0;
    ty(2 * k + 1) = 1.0;
  }
  CHECK((H * tx).cwiseAbs().maxCoeff() < 1e-10 * H.cwiseAbs().maxCoeff());
  CHECK((H * ty).cwiseAbs().maxCoeff() < 1e-10 * H.cwiseAbs().maxCoeff());
}

