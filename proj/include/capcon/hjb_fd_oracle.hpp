#pragma once

#include <iosfwd>
#include <vector>

#include "capcon/market_model.hpp"

namespace capcon {

struct FdOptions {
  int n_nodes = 4000;
  double x_max = 0.0;          // 0 selects 1000 * ell / (kappa - k), or 1e4
  double x_min_rel = 1e-6;     // first positive node relative to the bracket
  double tol = 1e-10;          // max relative nodal update
  int max_iterations = 500;
};

struct FdSolution {
  std::vector<double> x_grid;
  std::vector<double> V;
  std::vector<double> c;
  std::vector<double> pi;
  int iterations = 0;
  double final_update = 0.0;
  std::vector<double> update_history;
};

/// Howard policy iteration for the HJB on [0, x_max] with V(0) = 0 and the
/// large-wealth value at x_max. Central differences where they give a
/// monotone stencil, upwind on the drift sign elsewhere. Throws
/// NonConvergence, or ConcavityLoss naming the first offending node.
FdSolution solve_fd(const Model& model, const FdOptions& options = {});

/// Value imposed at the right end of the grid.
double fd_far_field(const Model& model, double x_max);

/// Three-point nonuniform derivatives at interior node i.
double fd_first_derivative(const FdSolution& fd, std::size_t i);
double fd_second_derivative(const FdSolution& fd, std::size_t i);

struct FdCell {
  double lower = 0.0;
  double upper = 0.0;
};

/// Grid cell where V_x^{1/(p-1)} - (k x + ell) turns nonnegative. Throws
/// NoSignChange when the cap never binds (or always binds).
FdCell extract_x_star_fd(const Model& model, const FdSolution& fd);

/// Nodal table with the `x,V,Vx,Vxx,c_star,pi_star,region` header.
void write_fd_csv(std::ostream& out, const Model& model, const FdSolution& fd);
void write_fd_log(std::ostream& out, const FdSolution& fd);

}  // namespace capcon
