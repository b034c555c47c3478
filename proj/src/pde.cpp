#include "cornerlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "cornerlab/error.hpp"

namespace cornerlab::pde {

const char* bc_name(BcKind k) {
  switch (k) {
    case BcKind::dirichlet_zero: return "dirichlet-zero";
    case BcKind::dirichlet_time: return "dirichlet-time";
    case BcKind::bln: return "bln";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit") return Scheme::explicit_euler;
  if (name == "crank-nicolson") return Scheme::crank_nicolson;
  throw BadParam("unknown scheme '" + name + "' (expected explicit or crank-nicolson)");
}

double PdeState::dx() const {
  if (grid.size() < 2) return 0.0;
  return grid[1] - grid[0];
}

double PdeState::at(double x) const {
  if (grid.empty()) throw MissingData("empty state");
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const double h = dx();
  const auto i = std::min(static_cast<std::size_t>((x - grid.front()) / h), grid.size() - 2);
  const double f = (x - grid[i]) / h;
  return (1.0 - f) * values[i] + f * values[i + 1];
}

namespace {

// Solves a tridiagonal system with constant off-diagonals `off` and
// diagonal `diag`, overwriting rhs with the solution.
void thomas_constant(double diag, double off, std::vector<double>& rhs, std::vector<double>& scratch) {
  const std::size_t n = rhs.size();
  scratch.resize(n);
  double denom = diag;
  scratch[0] = off / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag - off * scratch[i - 1];
    scratch[i] = off / denom;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

// One θ-step of ∂_t u = ν u_xx − κ u + f on nodes 0..M, boundary nodes
// prescribed.  θ = 0 explicit, ½ Crank–Nicolson, 1 backward Euler.
void theta_step(std::vector<double>& u, double t0, double dt, double theta, double nu, double kappa, double f,
                double dx, const std::function<double(double)>& gl, const std::function<double(double)>& gr,
                std::vector<double>& rhs, std::vector<double>& scratch) {
  const std::size_t m = u.size() - 1;
  const double r = nu * dt / (dx * dx);
  const double gl1 = gl(t0 + dt), gr1 = gr(t0 + dt);
  if (m < 2) {
    u.front() = gl1;
    u.back() = gr1;
    return;
  }
  rhs.resize(m - 1);
  const double keep = 1.0 - (1.0 - theta) * (2.0 * r + kappa * dt);
  for (std::size_t i = 1; i < m; ++i)
    rhs[i - 1] = keep * u[i] + (1.0 - theta) * r * (u[i - 1] + u[i + 1]) + dt * f;
  if (theta == 0.0) {
    for (std::size_t i = 1; i < m; ++i) u[i] = rhs[i - 1];
  } else {
    rhs.front() += theta * r * gl1;
    rhs.back() += theta * r * gr1;
    thomas_constant(1.0 + theta * (2.0 * r + kappa * dt), -theta * r, rhs, scratch);
    for (std::size_t i = 1; i < m; ++i) u[i] = rhs[i - 1];
  }
  u.front() = gl1;
  u.back() = gr1;
}

std::vector<double> nodes(std::size_t m) {
  std::vector<double> x(m + 1);
  for (std::size_t i = 0; i <= m; ++i) x[i] = static_cast<double>(i) / static_cast<double>(m);
  return x;
}

}  // namespace

PdeState solve_linear_parabolic(const std::vector<double>& u0, double t, double kappa, double forcing,
                                const std::function<double(double)>& gl, const std::function<double(double)>& gr,
                                const HeatOptions& opts) {
  if (u0.size() < 2) throw BadParam("need at least two grid points");
  if (!(t >= 0.0)) throw BadParam("time must be nonnegative");
  if (!(opts.nu > 0.0)) throw BadParam("diffusivity must be positive");
  const std::size_t m = u0.size() - 1;
  const double dx = 1.0 / static_cast<double>(m);
  PdeState s;
  s.grid = nodes(m);
  s.values = u0;
  s.values.front() = gl(0.0);
  s.values.back() = gr(0.0);
  s.bc = {BcKind::dirichlet_time, gl, gr};
  std::vector<double> rhs, scratch;
  double now = 0.0;
  if (opts.scheme == Scheme::explicit_euler) {
    double dt = opts.dt > 0.0 ? opts.dt : 0.45 * dx * dx / opts.nu;
    if (opts.nu * dt / (dx * dx) > 0.5)
      throw CflViolation(fmt::format("nu dt / dx^2 = {} exceeds 1/2", opts.nu * dt / (dx * dx)));
    const auto n = static_cast<std::size_t>(std::ceil(t / dt));
    if (n > 0) dt = t / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i, now = t * static_cast<double>(i) / static_cast<double>(n))
      theta_step(s.values, now, dt, 0.0, opts.nu, kappa, forcing, dx, gl, gr, rhs, scratch);
  } else {
    const double dt = opts.dt > 0.0 ? opts.dt : dx;
    double remaining = t;
    for (std::size_t i = 0; i < opts.startup_steps && remaining > 0.0; ++i) {
      const double h = std::min(0.5 * dt, remaining);
      theta_step(s.values, now, h, 1.0, opts.nu, kappa, forcing, dx, gl, gr, rhs, scratch);
      now += h;
      remaining = t - now;
    }
    if (remaining > 0.0) {
      const auto n = static_cast<std::size_t>(std::ceil(remaining / dt));
      const double h = remaining / static_cast<double>(n);
      const double start = now;
      for (std::size_t i = 0; i < n; ++i) {
        theta_step(s.values, start + h * static_cast<double>(i), h, 0.5, opts.nu, kappa, forcing, dx, gl, gr, rhs,
                   scratch);
      }
    }
  }
  s.t = t;
  return s;
}

PdeState solve_heat(const std::function<double(double)>& m0, double t, double forcing, const HeatOptions& opts) {
  if (opts.m < 2) throw BadParam("grid needs M >= 2");
  std::vector<double> u0(opts.m + 1);
  for (std::size_t i = 0; i <= opts.m; ++i) u0[i] = m0(static_cast<double>(i) / static_cast<double>(opts.m));
  auto zero = [](double) { return 0.0; };
  PdeState s = solve_linear_parabolic(u0, t, 0.0, forcing, zero, zero, opts);
  s.bc = {BcKind::dirichlet_zero, zero, zero};
  s.solver = forcing == 0.0 ? "heat" : "forced-heat";
  return s;
}

PdeState solve_viscous_hj(const std::function<double(double)>& m0, double t, double sigma, const HeatOptions& opts) {
  if (!(sigma >= 0.0)) throw BadParam("sigma must be nonnegative");
  HeatOptions o = opts;
  o.nu = 0.5;
  if (sigma == 0.0) {
    PdeState s = solve_heat(m0, t, 0.0, o);
    s.solver = "viscous-hj";
    return s;
  }
  if (o.m < 2) throw BadParam("grid needs M >= 2");
  std::vector<double> psi(o.m + 1);
  for (std::size_t i = 0; i <= o.m; ++i)
    psi[i] = std::exp(-2.0 * sigma * m0(static_cast<double>(i) / static_cast<double>(o.m)));
  auto one = [](double) { return 1.0; };
  PdeState s = solve_linear_parabolic(psi, t, 2.0 * sigma * sigma, 0.0, one, one, o);
  for (double& v : s.values) {
    if (!(v > 0.0)) throw NumericalError("Hopf-Cole variable became nonpositive");
    v = -std::log(v) / (2.0 * sigma);
  }
  auto zero = [](double) { return 0.0; };
  s.bc = {BcKind::dirichlet_zero, zero, zero};
  s.solver = "viscous-hj";
  return s;
}

double burgers_flux(double u, double k) { return -k * u * (1.0 - u); }

double godunov_flux(double ul, double ur, double k) {
  const double fl = burgers_flux(ul, k), fr = burgers_flux(ur, k);
  if (ul <= ur) {
    // min of the convex flux over [ul, ur]; the minimiser is ½ when k > 0
    if (k > 0.0 && ul <= 0.5 && 0.5 <= ur) return burgers_flux(0.5, k);
    return std::min(fl, fr);
  }
  if (k < 0.0 && ur <= 0.5 && 0.5 <= ul) return burgers_flux(0.5, k);
  return std::max(fl, fr);
}

BurgersResult solve_entropy_burgers(const std::vector<double>& cells, double t, double sigma,
                                    const BurgersOptions& opts) {
  if (cells.empty()) throw BadParam("no cells");
  if (!(t >= 0.0)) throw BadParam("time must be nonnegative");
  if (!(opts.cfl > 0.0)) throw BadParam("CFL number must be positive");
  if (opts.cfl > 0.5) throw CflViolation(fmt::format("CFL number {} exceeds 1/2", opts.cfl));
  for (double v : cells)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("density must lie in [0, 1]");
  const double k = opts.unit_flux ? 2.0 : (opts.flux_coefficient > 0.0 ? opts.flux_coefficient : 2.0 * sigma);
  const std::size_t m = cells.size();
  const double dx = 1.0 / static_cast<double>(m);
  BurgersResult res;
  res.state.values = cells;
  res.state.grid.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.state.grid[i] = (static_cast<double>(i) + 0.5) * dx;
  res.state.cell_centered = true;
  res.state.bc = {BcKind::bln, [](double) { return 1.0; }, [](double) { return 0.0; }};
  res.state.solver = "godunov";
  for (double v : cells) res.mass_initial += v * dx;

  const double speed = std::abs(k);  // max |F'(u)| on [0, 1]
  std::size_t n = 0;
  double dt = t;
  if (speed > 0.0 && t > 0.0) {
    const double dt_max = opts.cfl * dx / speed;
    n = static_cast<std::size_t>(std::ceil(t / dt_max));
    dt = t / static_cast<double>(n);
  } else if (t > 0.0) {
    n = 1;
  }
  std::vector<double> flux(m + 1);
  std::vector<double>& u = res.state.values;
  for (std::size_t step = 0; step < n; ++step) {
    flux[0] = godunov_flux(1.0, u[0], k);
    for (std::size_t j = 1; j < m; ++j) flux[j] = godunov_flux(u[j - 1], u[j], k);
    flux[m] = godunov_flux(u[m - 1], 0.0, k);
    const double ratio = dt / dx;
    for (std::size_t i = 0; i < m; ++i) u[i] -= ratio * (flux[i + 1] - flux[i]);
    res.boundary_flux += dt * (flux[0] - flux[m]);
  }
  res.steps = n;
  res.state.t = t;
  for (double v : u) res.mass_final += v * dx;
  return res;
}

BurgersResult solve_entropy_burgers(const std::function<double(double)>& eta0, double t, double sigma,
                                    const BurgersOptions& opts) {
  if (opts.m == 0) throw BadParam("grid needs M >= 1");
  std::vector<double> cells(opts.m);
  for (std::size_t i = 0; i < opts.m; ++i) cells[i] = eta0((static_cast<double>(i) + 0.5) / static_cast<double>(opts.m));
  return solve_entropy_burgers(cells, t, sigma, opts);
}

PdeState integrate_density(const PdeState& density) {
  PdeState out;
  out.t = density.t;
  out.bc = {BcKind::dirichlet_zero, [](double) { return 0.0; }, [](double) { return 0.0; }};
  out.solver = density.solver.empty() ? "height" : density.solver + "-height";
  const auto& eta = density.values;
  if (density.cell_centered) {
    const std::size_t m = eta.size();
    const double dx = 1.0 / static_cast<double>(m);
    out.grid = nodes(m);
    out.values.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) out.values[i + 1] = out.values[i] + (2.0 * eta[i] - 1.0) * dx;
  } else {
    out.grid = density.grid;
    out.values.assign(eta.size(), 0.0);
    for (std::size_t i = 1; i < eta.size(); ++i) {
      const double h = density.grid[i] - density.grid[i - 1];
      out.values[i] = out.values[i - 1] + 0.5 * h * ((2.0 * eta[i - 1] - 1.0) + (2.0 * eta[i] - 1.0));
    }
  }
  return out;
}

double flat_hydro_oracle(double t, double x, double sigma) { return std::min({x, 1.0 - x, sigma * t}); }

void write_state_csv(std::ostream& out, const PdeState& state, bool header) {
  if (header) out << "t,x,value,solver,bc\n";
  for (std::size_t i = 0; i < state.grid.size(); ++i)
    out << fmt::format("{},{},{},{},{}\n", state.t, state.grid[i], state.values[i], state.solver,
                       bc_name(state.bc.kind));
}

}  // namespace cornerlab::pde
