#include "mmrad/discretization.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace mmrad;
using mmrad::testing::kPi;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

// Independent reference derivatives: central inside, second-order one-sided
// at the ends.
double diff_xi(const Field& u, Index m, Index n, double h) {
  const Index M = u.rows();
  if (m == 0) return (-3 * u(0, n) + 4 * u(1, n) - u(2, n)) / (2 * h);
  if (m == M - 1) return (3 * u(M - 1, n) - 4 * u(M - 2, n) + u(M - 3, n)) / (2 * h);
  return (u(m + 1, n) - u(m - 1, n)) / (2 * h);
}

double diff_eta(const Field& u, Index m, Index n, double h) {
  const Index N = u.cols();
  if (n == 0) return (-3 * u(m, 0) + 4 * u(m, 1) - u(m, 2)) / (2 * h);
  if (n == N - 1) return (3 * u(m, N - 1) - 4 * u(m, N - 2) + u(m, N - 3)) / (2 * h);
  return (u(m, n + 1) - u(m, n - 1)) / (2 * h);
}

// Brute-force flux-form diffusion: each face flux formed explicitly, then
// differenced over the (half) control width of each node.
Field diffusion_oracle(const Field& u, const Field& D, const MovingMesh& mesh) {
  const Index M = mesh.grid.M, N = mesh.grid.N;
  const double hx = mesh.grid.dxi(), he = mesh.grid.deta();
  Field xx(M, N), xe(M, N), yx(M, N), ye(M, N);
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      xx(m, n) = diff_xi(mesh.x, m, n, hx);
      xe(m, n) = diff_eta(mesh.x, m, n, he);
      yx(m, n) = diff_xi(mesh.y, m, n, hx);
      ye(m, n) = diff_eta(mesh.y, m, n, he);
    }
  }
  const Field J = xx * ye - xe * yx;
  const Field k11 = D * (xe * xe + ye * ye) / J;
  const Field k12 = -D * (xx * xe + yx * ye) / J;
  const Field k22 = D * (xx * xx + yx * yx) / J;

  Field out = Field::Zero(M, N);
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      const double cw_x = (m == 0 || m == M - 1) ? hx / 2 : hx;
      const double cw_e = (n == 0 || n == N - 1) ? he / 2 : he;
      auto flux_xi = [&](Index a) {  // face between a and a + 1
        return 0.5 * (k11(a, n) + k11(a + 1, n)) * (u(a + 1, n) - u(a, n)) / hx +
               0.5 * (k12(a, n) + k12(a + 1, n)) * 0.5 *
                   (diff_eta(u, a, n, he) + diff_eta(u, a + 1, n, he));
      };
      auto flux_eta = [&](Index b) {
        return 0.5 * (k22(m, b) + k22(m, b + 1)) * (u(m, b + 1) - u(m, b)) / he +
               0.5 * (k12(m, b) + k12(m, b + 1)) * 0.5 *
                   (diff_xi(u, m, b, hx) + diff_xi(u, m, b + 1, hx));
      };
      const double fr = m + 1 < M ? flux_xi(m) : 0.0;
      const double fl = m > 0 ? flux_xi(m - 1) : 0.0;
      const double ft = n + 1 < N ? flux_eta(n) : 0.0;
      const double fb = n > 0 ? flux_eta(n - 1) : 0.0;
      out(m, n) = ((fr - fl) / cw_x + (ft - fb) / cw_e) / J(m, n);
    }
  }
  return out;
}

Eigen::MatrixXd diffusion_oracle_matrix(const Field& D, const MovingMesh& mesh) {
  const Index K = mesh.grid.size();
  Eigen::MatrixXd A(K, K);
  for (Index j = 0; j < K; ++j) {
    Field e = Field::Zero(mesh.grid.M, mesh.grid.N);
    e(j) = 1.0;
    A.col(j) = diffusion_oracle(e, D, mesh).reshaped();
  }
  return A;
}

SparseMatrix diffusion_matrix(const Field& D, const MovingMesh& mesh) {
  Assembly a(mesh.grid);
  assemble_diffusion(a, FieldBlock::E, D, compute_metrics(mesh));
  return SparseMatrix(a.matrix().topLeftCorner(mesh.grid.size(), mesh.grid.size()));
}

ProblemSetup insulated_setup() {
  ProblemSetup s;
  s.boundary.kind = BoundaryKind::fully_insulated;
  return s;
}

}  // namespace

TEST_CASE("gradient magnitude") {
  const auto id = uniform_mesh(make_grid(9, 9));
  const auto mt = compute_metrics(id);
  CHECK((gradient_magnitude(id.x, mt) - 1.0).abs().maxCoeff() < 1e-12);
  const auto rnd = testing::random_mesh(9, 9, 0.25, 2);
  CHECK(gradient_magnitude(Field::Constant(9, 9, 3.0), compute_metrics(rnd)).maxCoeff() < 1e-12);

  // x = xi + 0.1 xi eta is bilinear and E = x^2 is quadratic in each
  // reference direction, so the three-point differences are exact.
  {
    const auto mesh = testing::mapped_mesh(21, 21, [](double xi, double eta) {
      return std::pair{xi + 0.1 * xi * eta, eta};
    });
    const Field g = gradient_magnitude(mesh.x.square(), compute_metrics(mesh));
    CHECK((g - 2.0 * mesh.x).abs().maxCoeff() < 1e-11);
  }
  auto err = [](Index M) {
    const auto mesh = testing::mapped_mesh(M, M, [](double xi, double eta) {
      return std::pair{xi + 0.1 * xi * eta, eta};
    });
    const Field E = (2.0 * mesh.x + mesh.y).sin();
    const Field g = gradient_magnitude(E, compute_metrics(mesh));
    return (g - std::sqrt(5.0) * (2.0 * mesh.x + mesh.y).cos().abs()).abs().maxCoeff();
  };
  const double e1 = err(21), e2 = err(41);
  CHECK(e2 < 1e-2);
  CHECK(std::log2(e1 / e2) > 1.8);
}

TEST_CASE("diffusion on the identity mesh is the 5-point Laplacian") {
  const auto mesh = uniform_mesh(make_grid(5, 5));
  const double D = 2.0, h = 0.25;
  const Eigen::MatrixXd A = dense(diffusion_matrix(Field::Constant(5, 5, D), mesh));
  const auto& g = mesh.grid;
  const Index c = g.node(2, 2);
  CHECK(A(c, c) == doctest::Approx(-4 * D / (h * h)));
  for (Index nb : {g.node(1, 2), g.node(3, 2), g.node(2, 1), g.node(2, 3)}) {
    CHECK(A(c, nb) == doctest::Approx(D / (h * h)));
  }
  for (Index nb : {g.node(1, 1), g.node(3, 3), g.node(1, 3), g.node(3, 1)}) CHECK(A(c, nb) == 0.0);
  CHECK(A.row(c).sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("diffusion annihilates constants") {
  const auto mesh = testing::random_mesh(7, 7, 0.25, 9);
  const Field D = testing::nodal(mesh, [](double x, double y) { return 0.5 + x * x + 0.3 * y; });
  const SparseMatrix A = diffusion_matrix(D, mesh);
  const Vector r = A * Vector::Constant(49, 2.5);
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("diffusion matrix equals the dense brute-force assembly") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto mesh = testing::random_mesh(7, 7, 0.25, seed);
    const Field D = testing::nodal(mesh, [](double x, double y) { return 0.3 + std::exp(x - y) / 4; });
    const Eigen::MatrixXd A = dense(diffusion_matrix(D, mesh));
    const Eigen::MatrixXd B = diffusion_oracle_matrix(D, mesh);
    CHECK((A - B).lpNorm<Eigen::Infinity>() <= 1e-12 * B.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("diffusion is second-order accurate on a smooth mapped mesh") {
  auto err = [](Index M) {
    const auto mesh = testing::mapped_mesh(M, M, [](double xi, double eta) {
      return std::pair{xi + 0.1 * std::sin(kPi * xi) * std::sin(kPi * eta),
                       eta + 0.05 * std::sin(2 * kPi * xi) * std::sin(kPi * eta)};
    });
    const Field u = testing::nodal(mesh, [](double x, double y) { return std::cos(2 * x) * std::exp(y); });
    const Field D = testing::nodal(mesh, [](double x, double y) { return 1.0 + 0.5 * x * y; });
    const Field Lu = diffusion_oracle(u, D, mesh);
    const Vector Lu_matrix = diffusion_matrix(D, mesh) * Vector(u.reshaped());
    // Next to the boundary the one-sided metric differences change the error
    // constant, which drops the local truncation order there.
    double e = 0.0;
    for (Index n = 2; n + 2 < M; ++n) {
      for (Index m = 2; m + 2 < M; ++m) {
        const double x = mesh.x(m, n), y = mesh.y(m, n);
        // div((1 + xy/2) grad u) for u = cos(2x) e^y.
        const double ux = -2 * std::sin(2 * x) * std::exp(y), uy = std::cos(2 * x) * std::exp(y);
        const double lap = -4 * std::cos(2 * x) * std::exp(y) + uy;
        const double exact = (1.0 + 0.5 * x * y) * lap + 0.5 * y * ux + 0.5 * x * uy;
        e = std::max(e, std::abs(Lu_matrix(mesh.grid.node(m, n)) - exact));
      }
    }
    CHECK((Lu.reshaped() - Lu_matrix.array()).abs().maxCoeff() < 1e-8 * (1.0 + Lu.abs().maxCoeff()));
    return e;
  };
  const double e1 = err(21), e2 = err(41);
  CHECK(std::log2(e1 / e2) > 1.8);
}

TEST_CASE("weighted diffusion is symmetric on the identity mesh") {
  const auto mesh = uniform_mesh(make_grid(6, 5));
  const Field D = testing::nodal(mesh, [](double x, double y) { return 1.0 + x + 2 * y * y; });
  const Eigen::MatrixXd A = dense(diffusion_matrix(D, mesh));
  const Eigen::VectorXd w = trapezoid_weights(mesh.grid).reshaped();
  const Eigen::MatrixXd S = w.asDiagonal() * A;
  CHECK((S - S.transpose()).lpNorm<Eigen::Infinity>() < 1e-12 * S.lpNorm<Eigen::Infinity>());
}

TEST_CASE("non-positive diffusion coefficient is rejected") {
  const auto mesh = uniform_mesh(make_grid(4, 4));
  Field D = Field::Ones(4, 4);
  D(1, 2) = 0.0;
  Assembly a(mesh.grid);
  CHECK_THROWS_AS(assemble_diffusion(a, FieldBlock::T, D, compute_metrics(mesh)), std::domain_error);
}

TEST_CASE("convection") {
  const auto mesh = uniform_mesh(make_grid(5, 5));
  {
    Assembly a(mesh.grid);
    assemble_convection(a, FieldBlock::E, compute_metrics(mesh));
    CHECK(Eigen::MatrixXd(a.matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    MeshVelocity v{Field::Ones(5, 5), Field::Zero(5, 5)};
    Assembly a(mesh.grid);
    assemble_convection(a, FieldBlock::T, compute_metrics(mesh, v));
    Vector u = Vector::Zero(50);
    u.tail(25) = mesh.x.reshaped();
    const Vector r = a.matrix() * u;
    CHECK((r.tail(25).array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(r.head(25).norm() == 0.0);
  }
  {
    // Moving mesh: compare with b . grad_hat u from the reference differences.
    const auto from = testing::random_mesh(6, 6, 0.2, 4);
    auto to = testing::random_mesh(6, 6, 0.2, 5);
    to.t = 0.1;
    const auto motion = make_motion(from, to);
    const auto mid = mesh_at_time(motion, 0.05);
    const auto mt = compute_metrics(mid, motion_velocity(motion));
    const Field u = testing::nodal(mid, [](double x, double y) { return std::sin(3 * x) + y * y; });
    Assembly a(mid.grid);
    assemble_convection(a, FieldBlock::E, mt);
    Vector uv = Vector::Zero(72);
    uv.head(36) = u.reshaped();
    const Vector r = a.matrix() * uv;
    double err = 0.0;
    for (Index n = 0; n < 6; ++n) {
      for (Index m = 0; m < 6; ++m) {
        const double ref = mt.b1(m, n) * diff_xi(u, m, n, 0.2) + mt.b2(m, n) * diff_eta(u, m, n, 0.2);
        err = std::max(err, std::abs(r(mid.grid.node(m, n)) - ref));
      }
    }
    CHECK(err < 1e-12);
  }
}

TEST_CASE("coupling") {
  const auto mesh = testing::random_mesh(5, 5, 0.2, 8);
  const auto mt = compute_metrics(mesh);
  MaterialMap mat{{{0.2, 0.6, 0.2, 0.6, 5.0}}, 1.0};
  const Field Ts = testing::nodal(mesh, [](double x, double y) { return 0.5 + x + y * y; });
  const Field Es = testing::nodal(mesh, [](double x, double y) { return 0.2 + x * y; });
  const auto fc = freeze_coefficients(Es, Ts, mesh, mt, mat, {});

  for (bool weighted : {false, true}) {
    Assembly a(mesh.grid);
    assemble_coupling(a, fc, mt, weighted);
    const Vector r = a.matrix() * stack_fields(Es, Ts);
    for (Index n = 0; n < 5; ++n) {
      for (Index m = 0; m < 5; ++m) {
        const double z = mat.at(mesh.x(m, n), mesh.y(m, n));
        const auto s = coupling_source(Es(m, n), Ts(m, n), z);
        const double c = weighted ? mt.J(m, n) : 1.0;
        const Index k = mesh.grid.node(m, n);
        CHECK(r(k) == doctest::Approx(c * s.s_E).epsilon(1e-12));
        CHECK(r(25 + k) == -r(k));
      }
    }
  }

  const Field Teq = Field::Constant(5, 5, 1.3);
  const Field Eeq = Teq.pow(4.0);
  const auto feq = freeze_coefficients(Eeq, Teq, mesh, mt, mat, {});
  Assembly a(mesh.grid);
  assemble_coupling(a, feq, mt, false);
  CHECK((a.matrix() * stack_fields(Eeq, Teq)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("boundary residuals") {
  const auto id = uniform_mesh(make_grid(6, 6));
  const auto mt = compute_metrics(id);
  const Field sigma = Field::Ones(6, 6);
  {
    const auto res = boundary_residuals(Field::Constant(6, 6, 4.0), Field::Ones(6, 6),
                                        BoundarySpec{BoundaryKind::marshak_inflow_outflow, 1.0}, mt, sigma);
    for (const auto& r : res) {
      if (r.side == BoundarySide::xi_min && r.field == FieldBlock::E) CHECK(r.value == doctest::Approx(0.0));
      if (r.side == BoundarySide::xi_max && r.field == FieldBlock::E) CHECK(r.value == doctest::Approx(1.0));
      if (r.field == FieldBlock::T || r.side == BoundarySide::eta_min || r.side == BoundarySide::eta_max) {
        CHECK(r.value == doctest::Approx(0.0));
      }
    }
  }
  {
    const auto res = boundary_residuals(Field::Constant(6, 6, 0.7), Field::Constant(6, 6, 2.0),
                                        BoundarySpec{BoundaryKind::fully_insulated, 1.0}, mt, sigma);
    CHECK(res.size() == 4 * 6 * 2);
    for (const auto& r : res) CHECK(std::abs(r.value) < 1e-12);
  }
  {
    // Skewed mesh with x_eta != 0 on the eta edges; for u linear in (x, y)
    // the expansion reduces to u_y exactly.
    const auto mesh = testing::mapped_mesh(7, 7, [](double xi, double eta) {
      return std::pair{xi + 0.2 * xi * (1 - xi) * eta, eta};
    });
    const auto ms = compute_metrics(mesh);
    CHECK(std::abs(ms.x_eta(3, 0)) > 0.01);
    const Field u = 2.0 * mesh.x + 3.0 * mesh.y;
    const auto res = boundary_residuals(u, 2.0 * mesh.x, BoundarySpec{BoundaryKind::fully_insulated, 1.0},
                                        ms, Field::Ones(7, 7));
    for (const auto& r : res) {
      if (r.side != BoundarySide::eta_min && r.side != BoundarySide::eta_max) continue;
      CHECK(r.value == doctest::Approx(r.field == FieldBlock::E ? 3.0 : 0.0).epsilon(1e-10));
      const double oracle = (-ms.x_eta(r.m, r.n) / (ms.x_xi(r.m, r.n) * ms.y_eta(r.m, r.n))) *
                                diff_xi(r.field == FieldBlock::E ? u : Field(2.0 * mesh.x), r.m, r.n, 1.0 / 6) +
                            diff_eta(r.field == FieldBlock::E ? u : Field(2.0 * mesh.x), r.m, r.n, 1.0 / 6) /
                                ms.y_eta(r.m, r.n);
      CHECK(r.value == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("coupled operator: equilibrium is steady under insulation") {
  const auto mesh = testing::random_mesh(8, 8, 0.2, 6);
  const Field E = Field::Constant(8, 8, 2.0);
  const Field T = E.sqrt().sqrt();
  const auto op = build_coupled_operator(E, T, mesh, zero_velocity(mesh.grid), insulated_setup(), 0.0);
  CHECK((op.L * stack_fields(E, T) + op.g).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("coupled operator on a 5x5 identity mesh equals the hand-assembled reference") {
  const auto mesh = uniform_mesh(make_grid(5, 5));
  const Field one = Field::Ones(5, 5);
  const auto op = build_coupled_operator(one, one, mesh, zero_velocity(mesh.grid), insulated_setup(), 0.0);

  const double h = 0.25;
  Eigen::MatrixXd L1 = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    if (i > 0) L1(i, i - 1) += 1.0 / (h * h);
    if (i < 4) L1(i, i + 1) += 1.0 / (h * h);
    L1(i, i) = -L1.row(i).sum();
  }
  L1.row(0) *= 2.0;  // half control volumes
  L1.row(4) *= 2.0;
  const Eigen::MatrixXd I5 = Eigen::MatrixXd::Identity(5, 5);
  Eigen::MatrixXd lap(25, 25);
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) lap.block(5 * a, 5 * b, 5, 5) = L1(a, b) * I5 + (a == b ? L1 : Eigen::MatrixXd::Zero(5, 5));
  }
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(50, 50);
  const Eigen::MatrixXd I25 = Eigen::MatrixXd::Identity(25, 25);
  ref.topLeftCorner(25, 25) = lap / 3.0 - I25;
  ref.topRightCorner(25, 25) = I25;
  ref.bottomLeftCorner(25, 25) = I25;
  ref.bottomRightCorner(25, 25) = 0.01 * lap - I25;
  CHECK((dense(op.L) - ref).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(op.g.norm() == 0.0);
}

TEST_CASE("coupled operator: Marshak inflow rows of example 1") {
  const auto mesh = uniform_mesh(make_grid(11, 11));
  const auto s = initial_state(Preset::example1, mesh);
  ProblemSetup setup;
  setup.material = preset_material(Preset::example1);
  const auto op = build_coupled_operator(s.E, s.T, mesh, zero_velocity(mesh.grid), setup, 0.0);
  const auto mt = compute_metrics(mesh);
  const auto fc = freeze_coefficients(s.E, s.T, mesh, mt, setup.material, setup.physics);
  const double h = 0.1;
  for (Index n = 0; n < 11; ++n) {
    const Index k = mesh.grid.node(0, n);
    // (1/4)E - E_x / (6 sigma) = 1 gives the outer flux D E_x = 6 D sigma (E/4 - 1).
    CHECK(op.g(k) == doctest::Approx(6.0 * fc.D_r(0, n) * fc.sigma(0, n) * 1.0 / (h / 2)));
    CHECK(op.g(mesh.grid.node(10, n)) == 0.0);
    CHECK(op.g(121 + k) == 0.0);
  }
  for (Index n = 1; n < 10; ++n) {
    for (Index m = 1; m < 10; ++m) CHECK(op.g(mesh.grid.node(m, n)) == 0.0);
  }
  // Every row couples at most 18 unknowns.
  for (Index r = 0; r < op.L.rows(); ++r) CHECK(op.L.outerIndexPtr()[r + 1] - op.L.outerIndexPtr()[r] <= 18);
}

TEST_CASE("coupled operator conserves the J-weighted total under insulation") {
  const auto mesh = testing::random_mesh(9, 9, 0.25, 12);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Field E(9, 9), T(9, 9), Es(9, 9), Ts(9, 9);
  for (Index k = 0; k < 81; ++k) {
    E(k) = u(rng);
    T(k) = u(rng);
    Es(k) = u(rng);
    Ts(k) = u(rng);
  }
  ProblemSetup setup = insulated_setup();
  setup.material = preset_material(Preset::example3);
  const auto op = build_coupled_operator(Es, Ts, mesh, zero_velocity(mesh.grid), setup, 0.0);
  const Vector r = op.L * stack_fields(E, T) + op.g;
  const Field w = trapezoid_weights(mesh.grid) * op.J;
  double total = 0.0, scale = 0.0;
  for (Index k = 0; k < 81; ++k) {
    total += w(k) * (r(k) + r(81 + k));
    scale += w(k) * (std::abs(r(k)) + std::abs(r(81 + k)));
  }
  CHECK(std::abs(total) <= 1e-12 * scale);
}

TEST_CASE("prescribed boundary flux enters as an outward flux") {
  // u = x on the identity mesh: D u_x = D through x = 1 (outward) and -D
  // through x = 0; with these fluxes the operator is exact for u = x.
  const auto mesh = uniform_mesh(make_grid(6, 6));
  ProblemSetup setup = insulated_setup();
  setup.physics.kappa = 1.0;
  const Field T = Field::Ones(6, 6);
  const Field E = T;
  setup.forcing.flux_T = [](double, double, double, BoundarySide side) {
    if (side == BoundarySide::xi_max) return 1.0;
    if (side == BoundarySide::xi_min) return -1.0;
    return 0.0;
  };
  const auto op = build_coupled_operator(E, T, mesh, zero_velocity(mesh.grid), setup, 0.0);
  const Field u = mesh.x;
  Vector v = stack_fields(Field::Zero(6, 6), u);
  Vector r = op.L * v + op.g;
  // Remove the coupling contribution, leaving diffusion + boundary flux.
  for (Index k = 0; k < 36; ++k) r(36 + k) += u(k);
  CHECK(r.tail(36).lpNorm<Eigen::Infinity>() < 1e-10);
}
