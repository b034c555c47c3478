#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cornerlab::pde {

enum class BcKind { dirichlet_zero, dirichlet_time, bln };

const char* bc_name(BcKind k);

struct Boundary {
  BcKind kind = BcKind::dirichlet_zero;
  std::function<double(double)> left;   // g(t) at x = 0, time-dependent Dirichlet only
  std::function<double(double)> right;  // g(t) at x = 1
};

/// Nodal states live on x_i = i/M, i = 0..M.  Cell states (the density
/// solver) hold M cell averages at centres (i + ½)/M.
struct PdeState {
  std::vector<double> grid;
  std::vector<double> values;
  double t = 0.0;
  Boundary bc;
  bool cell_centered = false;
  std::string solver;

  double dx() const;
  /// Piecewise-linear evaluation between grid points (nodal or centres).
  double at(double x) const;
};

enum class Scheme { explicit_euler, crank_nicolson };

Scheme parse_scheme(const std::string& name);

struct HeatOptions {
  std::size_t m = 1024;
  Scheme scheme = Scheme::crank_nicolson;
  double nu = 0.5;
  double dt = 0.0;  // 0: dx for Crank–Nicolson, 0.45·dx²/ν for explicit
  /// Backward-Euler half steps taken before Crank–Nicolson to damp the
  /// oscillation from rough initial data.
  std::size_t startup_steps = 4;
};

/// ∂_t m = ν ∂²_x m + forcing, m = 0 at both ends.
PdeState solve_heat(const std::function<double(double)>& m0, double t, double forcing = 0.0,
                    const HeatOptions& opts = {});

/// General linear step ∂_t u = ν∂²u − κu + f with u(t,0) = gl(t), u(t,1) = gr(t).
PdeState solve_linear_parabolic(const std::vector<double>& u0, double t, double kappa, double forcing,
                                const std::function<double(double)>& gl, const std::function<double(double)>& gr,
                                const HeatOptions& opts);

/// ∂_t m = ½∂²m + σ(1 − (∂m)²) by the exponential change of variables
/// ξ = e^{−2σ(m − σt)}.  Internally evolves ψ = ξ e^{−2σ²t}, which solves
/// ½∂²ψ − 2σ²ψ with unit boundary data and never overflows.
PdeState solve_viscous_hj(const std::function<double(double)>& m0, double t, double sigma,
                          const HeatOptions& opts = {});

struct BurgersOptions {
  std::size_t m = 1024;
  double cfl = 0.45;
  /// k in F(η) = −k η(1−η).  0 selects k = 2σ; the flag below selects k = 2.
  double flux_coefficient = 0.0;
  bool unit_flux = false;
};

struct BurgersResult {
  PdeState state;
  double mass_initial = 0.0;
  double mass_final = 0.0;
  double boundary_flux = 0.0;  // ∫ (F̂_left − F̂_right) dt
  std::size_t steps = 0;
};

double burgers_flux(double u, double k);
/// Godunov flux for the convex F(u) = −k u(1−u).
double godunov_flux(double ul, double ur, double k);

/// Finite-volume Godunov for ∂_tη + ∂_x F(η) = 0 with ghost cells η = 1 on
/// the left and η = 0 on the right.  η0 is sampled at cell centres.
BurgersResult solve_entropy_burgers(const std::function<double(double)>& eta0, double t, double sigma,
                                    const BurgersOptions& opts = {});
BurgersResult solve_entropy_burgers(const std::vector<double>& cells, double t, double sigma,
                                    const BurgersOptions& opts = {});

/// m(x) = ∫₀^x (2η − 1) on the nodes x_i = i/M.  Cell data are summed
/// exactly; nodal data use the trapezoid rule.
PdeState integrate_density(const PdeState& density);

double flat_hydro_oracle(double t, double x, double sigma);

/// CSV rows t,x,value,solver,bc.
void write_state_csv(std::ostream& out, const PdeState& state, bool header);

}  // namespace cornerlab::pde
