#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/vector.hpp"
#include "uzawa/solvers/saddle_system.hpp"

namespace uzawa {

/// Convection field w = (w1, w2) for the Oseen operator.
struct WindSpec {
  enum class Kind { zero, cavity, constant, discrete };

  Kind kind = Kind::cavity;
  double c1 = 0.0, c2 = 0.0;  ///< for `constant`
  Vector velocity;            ///< for `discrete`: MAC velocity vector (u block, then v block)

  static WindSpec zero() { return {Kind::zero, 0.0, 0.0, {}}; }
  /// w = [8x(1-x)(2y-1), -8y(1-y)(2x-1)].
  static WindSpec cavity() { return {Kind::cavity, 0.0, 0.0, {}}; }
  static WindSpec constant(double w1, double w2) { return {Kind::constant, w1, w2, {}}; }
  static WindSpec discrete(Vector v) { return {Kind::discrete, 0.0, 0.0, std::move(v)}; }
};

struct OseenSpec {
  enum class DMode { none, pressure_stabilization };
  enum class PressureFix { pin_first_dof, project_constants };

  std::size_t grid_n = 16;
  double nu = 1.0;
  WindSpec wind = WindSpec::cavity();
  DMode d_mode = DMode::none;
  double eps = 1e-2;
  PressureFix pressure_fix = PressureFix::pin_first_dof;
  /// Tangential velocity of the top wall.
  double lid_velocity = 1.0;

  void validate() const {
    if (grid_n < 4) throw ConfigError("oseen: grid_n must be at least 4");
    if (!(nu > 0.0)) throw ConfigError("oseen: nu must be positive");
    if (d_mode == DMode::pressure_stabilization && !(eps > 0.0))
      throw ConfigError("oseen: eps must be positive");
    if (wind.kind == WindSpec::Kind::discrete &&
        wind.velocity.size() != 2 * grid_n * (grid_n - 1))
      throw ConfigError("oseen: discrete wind has the wrong length");
  }
};

/// Index maps of the MAC grid with N cells per side and h = 1/N.
///   u(i, j) at (i h, (j + 1/2) h), i = 1..N-1, j = 0..N-1
///   v(i, j) at ((i + 1/2) h, j h), i = 0..N-1, j = 1..N-1
///   p(i, j) at ((i + 1/2) h, (j + 1/2) h)
struct MacGrid {
  std::size_t N;

  double h() const { return 1.0 / static_cast<double>(N); }
  std::size_t num_u() const { return (N - 1) * N; }
  std::size_t num_v() const { return N * (N - 1); }
  std::size_t num_velocity() const { return num_u() + num_v(); }
  std::size_t num_cells() const { return N * N; }
  std::size_t u_index(std::size_t i, std::size_t j) const { return j * (N - 1) + (i - 1); }
  std::size_t v_index(std::size_t i, std::size_t j) const { return num_u() + (j - 1) * N + i; }
  std::size_t p_index(std::size_t i, std::size_t j) const { return j * N + i; }

  /// u(i, j) with the wall values u = 0 at i = 0 and i = N.
  double u_value(const Vector& vel, long i, long j) const {
    const long n = static_cast<long>(N);
    if (i <= 0 || i >= n || j < 0 || j >= n) return 0.0;
    return vel[u_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
  }

  /// v(i, j) with the wall values v = 0 at j = 0 and j = N.
  double v_value(const Vector& vel, long i, long j) const {
    const long n = static_cast<long>(N);
    if (j <= 0 || j >= n || i < 0 || i >= n) return 0.0;
    return vel[v_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
  }
};

namespace detail {

/// Wind components at half-index coordinates (X, Y) = (2x/h, 2y/h).
class WindSampler {
 public:
  WindSampler(const WindSpec& w, const MacGrid& g) : w_(w), g_(g) {}

  double w1(long X, long Y) const {
    switch (w_.kind) {
      case WindSpec::Kind::zero: return 0.0;
      case WindSpec::Kind::constant: return w_.c1;
      case WindSpec::Kind::cavity: {
        const double x = coord(X), y = coord(Y);
        return 8.0 * x * (1.0 - x) * (2.0 * y - 1.0);
      }
      case WindSpec::Kind::discrete:
        if (X % 2 != 0 && Y % 2 != 0) {  // cell center
          const long i = (X - 1) / 2, j = (Y - 1) / 2;
          return 0.5 * (g_.u_value(w_.velocity, i, j) + g_.u_value(w_.velocity, i + 1, j));
        }
        if (X % 2 == 0 && Y % 2 == 0) {  // grid node
          const long i = X / 2, j = Y / 2;
          return 0.5 * (g_.u_value(w_.velocity, i, j - 1) + g_.u_value(w_.velocity, i, j));
        }
        if (X % 2 == 0) return g_.u_value(w_.velocity, X / 2, (Y - 1) / 2);
        break;
    }
    throw Error("wind sampler: w1 requested off the staggered lattice");
  }

  double w2(long X, long Y) const {
    switch (w_.kind) {
      case WindSpec::Kind::zero: return 0.0;
      case WindSpec::Kind::constant: return w_.c2;
      case WindSpec::Kind::cavity: {
        const double x = coord(X), y = coord(Y);
        return -8.0 * y * (1.0 - y) * (2.0 * x - 1.0);
      }
      case WindSpec::Kind::discrete:
        if (X % 2 != 0 && Y % 2 != 0) {
          const long i = (X - 1) / 2, j = (Y - 1) / 2;
          return 0.5 * (g_.v_value(w_.velocity, i, j) + g_.v_value(w_.velocity, i, j + 1));
        }
        if (X % 2 == 0 && Y % 2 == 0) {
          const long i = X / 2, j = Y / 2;
          return 0.5 * (g_.v_value(w_.velocity, i - 1, j) + g_.v_value(w_.velocity, i, j));
        }
        if (Y % 2 == 0) return g_.v_value(w_.velocity, (X - 1) / 2, Y / 2);
        break;
    }
    throw Error("wind sampler: w2 requested off the staggered lattice");
  }

 private:
  double coord(long X) const { return 0.5 * static_cast<double>(X) * g_.h(); }

  const WindSpec& w_;
  const MacGrid& g_;
};

}  // namespace detail

/// Velocity block pieces, kept apart so tests can inspect them:
/// A = nu * laplacian + convection, f = nu * f_laplacian + f_convection.
struct OseenParts {
  MacGrid grid;
  CsrMatrix laplacian;   ///< discrete -Laplacian (SPD), unscaled by nu
  CsrMatrix convection;  ///< skew part of (w . grad) plus wall corrections
  CsrMatrix gradient;    ///< all N^2 pressure columns
  Vector f_laplacian;
  Vector f_convection;
};

/// Assembles the MAC velocity operators. Neighbors beyond a wall normal to the
/// component are known zeros; tangential walls use the ghost value 2 u_b - u_P.
/// Convection uses face fluxes w_f / (2h) with no diagonal term, so it is skew
/// except at wall faces with nonzero normal wind.
inline OseenParts assemble_oseen_parts(const OseenSpec& spec) {
  spec.validate();
  const MacGrid g{spec.grid_n};
  const long N = static_cast<long>(g.N);
  const double h = g.h(), h2 = h * h;
  const detail::WindSampler wind(spec.wind, g);
  std::vector<Triplet> lap, conv, grad;
  Vector fl(g.num_velocity(), 0.0), fc(g.num_velocity(), 0.0);

  struct Neighbor {
    bool unknown;
    bool ghost;
    double boundary_value;
    std::size_t index;
    double flux;  // face wind, signed for the direction
  };

  auto emit = [&](std::size_t row, const Neighbor (&nbs)[4]) {
    double diag_lap = 4.0;
    double diag_conv = 0.0;
    for (const Neighbor& nb : nbs) {
      const double c = nb.flux / (2.0 * h);
      if (nb.unknown) {
        lap.push_back({row, nb.index, -1.0 / h2});
        if (c != 0.0) conv.push_back({row, nb.index, c});
      } else if (nb.ghost) {
        diag_lap += 1.0;
        fl[row] += 2.0 * nb.boundary_value / h2;
        diag_conv -= c;
        fc[row] -= 2.0 * c * nb.boundary_value;
      }
    }
    lap.push_back({row, row, diag_lap / h2});
    if (diag_conv != 0.0) conv.push_back({row, row, diag_conv});
  };

  for (long j = 0; j < N; ++j)
    for (long i = 1; i < N; ++i) {
      const std::size_t row = g.u_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const long X = 2 * i, Y = 2 * j + 1;
      Neighbor nbs[4] = {
          {i + 1 < N, false, 0.0, i + 1 < N ? g.u_index(i + 1, j) : 0, wind.w1(X + 1, Y)},
          {i - 1 > 0, false, 0.0, i - 1 > 0 ? g.u_index(i - 1, j) : 0, -wind.w1(X - 1, Y)},
          {j + 1 < N, j + 1 == N, spec.lid_velocity, j + 1 < N ? g.u_index(i, j + 1) : 0,
           wind.w2(X, Y + 1)},
          {j > 0, j == 0, 0.0, j > 0 ? g.u_index(i, j - 1) : 0, -wind.w2(X, Y - 1)},
      };
      emit(row, nbs);
      grad.push_back({row, g.p_index(i, j), 1.0 / h});
      grad.push_back({row, g.p_index(i - 1, j), -1.0 / h});
    }

  for (long j = 1; j < N; ++j)
    for (long i = 0; i < N; ++i) {
      const std::size_t row = g.v_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const long X = 2 * i + 1, Y = 2 * j;
      Neighbor nbs[4] = {
          {i + 1 < N, i + 1 == N, 0.0, i + 1 < N ? g.v_index(i + 1, j) : 0, wind.w1(X + 1, Y)},
          {i > 0, i == 0, 0.0, i > 0 ? g.v_index(i - 1, j) : 0, -wind.w1(X - 1, Y)},
          {j + 1 < N, false, 0.0, j + 1 < N ? g.v_index(i, j + 1) : 0, wind.w2(X, Y + 1)},
          {j - 1 > 0, false, 0.0, j - 1 > 0 ? g.v_index(i, j - 1) : 0, -wind.w2(X, Y - 1)},
      };
      emit(row, nbs);
      grad.push_back({row, g.p_index(i, j), 1.0 / h});
      grad.push_back({row, g.p_index(i, j - 1), -1.0 / h});
    }

  const std::size_t nv = g.num_velocity();
  return {g,
          CsrMatrix::from_triplets(nv, nv, std::move(lap)),
          CsrMatrix::from_triplets(nv, nv, std::move(conv)),
          CsrMatrix::from_triplets(nv, g.num_cells(), std::move(grad)),
          std::move(fl),
          std::move(fc)};
}

/// nu * (vector Laplacian) as assembled for the generator.
inline CsrMatrix vector_laplacian(const OseenSpec& spec) {
  OseenParts parts = assemble_oseen_parts(spec);
  return linear_combination(spec.nu, parts.laplacian, 0.0, parts.laplacian);
}

namespace detail {

inline CsrMatrix drop_first_column(const CsrMatrix& B) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < B.rows(); ++i) {
    auto c = B.row_cols(i);
    auto v = B.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (c[k] > 0) t.push_back({i, c[k] - 1, v[k]});
  }
  return CsrMatrix::from_triplets(B.rows(), B.cols() - 1, std::move(t));
}

}  // namespace detail

/// MAC discretization of -nu Lap u + (w . grad) u + grad p = 0, -div u = 0 on
/// the unit square with u = 1 on the lid y = 1 and no-slip elsewhere.
inline SaddleSystem generate_oseen(const OseenSpec& spec) {
  OseenParts parts = assemble_oseen_parts(spec);
  SaddleSystem sys;
  sys.A = linear_combination(spec.nu, parts.laplacian, 1.0, parts.convection);
  sys.f = parts.f_convection;
  axpy(spec.nu, parts.f_laplacian, sys.f);
  if (spec.pressure_fix == OseenSpec::PressureFix::pin_first_dof) {
    sys.B = detail::drop_first_column(parts.gradient);
  } else {
    sys.B = std::move(parts.gradient);
    sys.constant_pressure_nullspace = true;
  }
  const std::size_t m = sys.B.cols();
  const double h = parts.grid.h();
  sys.D = spec.d_mode == OseenSpec::DMode::pressure_stabilization
              ? CsrMatrix::diagonal(Vector(m, spec.eps * h * h))
              : CsrMatrix::zero(m, m);
  sys.g.assign(m, 0.0);
  return sys;
}

/// Largest |div_h w| over cells, with w sampled at the u- and v-points.
inline double wind_divergence_max(const OseenSpec& spec) {
  const MacGrid g{spec.grid_n};
  const detail::WindSampler wind(spec.wind, g);
  const long N = static_cast<long>(g.N);
  const double h = g.h();
  double worst = 0.0;
  for (long j = 0; j < N; ++j)
    for (long i = 0; i < N; ++i) {
      const long X = 2 * i + 1, Y = 2 * j + 1;
      const double div = (wind.w1(X + 1, Y) - wind.w1(X - 1, Y)) / h +
                         (wind.w2(X, Y + 1) - wind.w2(X, Y - 1)) / h;
      worst = std::max(worst, std::abs(div));
    }
  return worst;
}

/// Pressure on all N^2 cells, re-inserting the pinned value 0 if needed.
inline Vector full_pressure(const OseenSpec& spec, std::span<const double> y) {
  const std::size_t cells = spec.grid_n * spec.grid_n;
  if (spec.pressure_fix == OseenSpec::PressureFix::project_constants) {
    if (y.size() != cells) throw DimensionError("full_pressure: wrong pressure length");
    return Vector(y.begin(), y.end());
  }
  if (y.size() + 1 != cells) throw DimensionError("full_pressure: wrong pressure length");
  Vector p(cells, 0.0);
  std::copy(y.begin(), y.end(), p.begin() + 1);
  return p;
}

}  // namespace uzawa
