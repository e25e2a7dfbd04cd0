#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "uzawa/error.hpp"
#include "uzawa/problems/oseen.hpp"

namespace uzawa {

/// A scalar field on a rows x cols lattice; row 0 is the bottom (y smallest).
struct GridField {
  std::size_t rows = 0, cols = 0;
  Vector values;  ///< row-major

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Velocity averaged to cell centers: u from the two vertical edges, v from the
/// two horizontal edges, walls contributing their zero normal values.
inline std::pair<GridField, GridField> cell_centered_velocity(const MacGrid& g, const Vector& vel) {
  if (vel.size() != g.num_velocity()) throw DimensionError("cell_centered_velocity: wrong length");
  const std::size_t N = g.N;
  GridField u{N, N, Vector(N * N)}, v{N, N, Vector(N * N)};
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = 0; i < N; ++i) {
      const long li = static_cast<long>(i), lj = static_cast<long>(j);
      u.values[j * N + i] = 0.5 * (g.u_value(vel, li, lj) + g.u_value(vel, li + 1, lj));
      v.values[j * N + i] = 0.5 * (g.v_value(vel, li, lj) + g.v_value(vel, li, lj + 1));
    }
  return {std::move(u), std::move(v)};
}

/// Velocity at the (N+1) x (N+1) grid nodes, boundary values included: u = lid
/// on the top wall (corners excluded), zero on the other walls.
inline std::pair<GridField, GridField> node_velocity(const MacGrid& g, const Vector& vel,
                                                     double lid_velocity = 1.0) {
  if (vel.size() != g.num_velocity()) throw DimensionError("node_velocity: wrong length");
  const std::size_t N = g.N, M = N + 1;
  GridField u{M, M, Vector(M * M, 0.0)}, v{M, M, Vector(M * M, 0.0)};
  for (std::size_t j = 0; j <= N; ++j)
    for (std::size_t i = 0; i <= N; ++i) {
      const long li = static_cast<long>(i), lj = static_cast<long>(j);
      if (j == N)
        u.values[j * M + i] = (i == 0 || i == N) ? 0.0 : lid_velocity;
      else if (j > 0)
        u.values[j * M + i] = 0.5 * (g.u_value(vel, li, lj - 1) + g.u_value(vel, li, lj));
      if (i > 0 && i < N)
        v.values[j * M + i] = 0.5 * (g.v_value(vel, li - 1, lj) + g.v_value(vel, li, lj));
    }
  return {std::move(u), std::move(v)};
}

namespace detail {

inline void write_grid_csv(const std::filesystem::path& path, const GridField& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (std::size_t c = 0; c < f.cols; ++c) out << (c ? "," : "") << f(r, c);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

/// Writes u.csv, v.csv, p.csv (N x N cell-centered grids, first line = bottom
/// row), u_nodes.csv / v_nodes.csv with boundary values, and a long-form
/// fields.csv with columns x,y,u,v,p for plotting tools.
inline void export_fields(const std::filesystem::path& dir, const OseenSpec& spec,
                          const Vector& velocity, std::span<const double> pressure) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const MacGrid g{spec.grid_n};
  const std::size_t N = g.N;
  const Vector p = full_pressure(spec, pressure);
  auto [uc, vc] = cell_centered_velocity(g, velocity);
  const GridField pc{N, N, p};
  auto [un, vn] = node_velocity(g, velocity, spec.lid_velocity);
  detail::write_grid_csv(dir / "u.csv", uc);
  detail::write_grid_csv(dir / "v.csv", vc);
  detail::write_grid_csv(dir / "p.csv", pc);
  detail::write_grid_csv(dir / "u_nodes.csv", un);
  detail::write_grid_csv(dir / "v_nodes.csv", vn);
  std::ofstream out(dir / "fields.csv");
  if (!out) throw IoError("cannot open " + (dir / "fields.csv").string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "x,y,u,v,p\n";
  const double h = g.h();
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = 0; i < N; ++i)
      out << (static_cast<double>(i) + 0.5) * h << "," << (static_cast<double>(j) + 0.5) * h << ","
          << uc(j, i) << "," << vc(j, i) << "," << pc(j, i) << "\n";
  if (!out) throw IoError("write failed: fields.csv");
}

/// Velocity at the cavity center (0.5, 0.5): a cell center for odd N, a grid
/// node for even N.
inline std::pair<double, double> center_velocity(const MacGrid& g, const Vector& vel) {
  const std::size_t c = g.N / 2;
  if (g.N % 2 == 1) {
    auto [u, v] = cell_centered_velocity(g, vel);
    return {u(c, c), v(c, c)};
  }
  auto [u, v] = node_velocity(g, vel);
  return {u(c, c), v(c, c)};
}

}  // namespace uzawa
