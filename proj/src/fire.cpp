#include "pesgen/fire.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pesgen/error.hpp"

namespace pesgen {

namespace {

bool all_finite(const Evaluation& ev) {
  if (!std::isfinite(ev.energy)) return false;
  for (const Vec3& f : ev.forces) {
    if (!std::isfinite(f.x) || !std::isfinite(f.y) || !std::isfinite(f.z)) return false;
  }
  if (ev.stress) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (!std::isfinite((*ev.stress)(a, b))) return false;
      }
    }
  }
  return true;
}

// Forces on the extended coordinates: atomic forces, then (if cell dofs are
// active) the strain conjugate -V sigma / L so cell entries share units with
// atomic forces.
void pack_forces(const Structure& s, const Evaluation& ev, bool cell_dof, double length_scale,
                 std::vector<double>& f) {
  const std::size_t n = s.size();
  f.assign(3 * n + (cell_dof ? 9 : 0), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    f[3 * i + 0] = ev.forces[i].x;
    f[3 * i + 1] = ev.forces[i].y;
    f[3 * i + 2] = ev.forces[i].z;
  }
  if (cell_dof) {
    if (!ev.stress) throw Unsupported("cell relaxation requires a stress from the model");
    const double vol = cell_volume(*s.cell);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        f[3 * n + 3 * a + b] = -vol * (*ev.stress)(a, b) / length_scale;
      }
    }
  }
}

double max_abs_component(const std::vector<double>& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

// Applies one extended step: the strain part deforms the cell incrementally
// (positions follow affinely), the atomic part displaces positions.
void apply_step(Structure& s, const std::vector<double>& dx, bool cell_dof, double length_scale) {
  const std::size_t n = s.size();
  if (cell_dof) {
    Mat3 d = Mat3::identity();
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        d(a, b) += dx[3 * n + 3 * a + b] / length_scale;
      }
    }
    const Mat3 old_cell = *s.cell;
    Mat3 new_cell = Mat3::zero();
    for (int r = 0; r < 3; ++r) new_cell.set_row(r, d * old_cell.row(r));
    for (Vec3& p : s.positions) p = frac_to_cart(new_cell, cart_to_frac(old_cell, p));
    s.cell = new_cell;
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.positions[i] += Vec3{dx[3 * i + 0], dx[3 * i + 1], dx[3 * i + 2]};
  }
}

}  // namespace

Evaluation QuadraticBowl::operator()(const Structure& s) const {
  const std::size_t n = static_cast<std::size_t>(s.size());
  if (n != center_.size()) {
    throw InvalidInput("quadratic bowl: structure has " + std::to_string(n) +
                       " atoms but the bowl centre has " + std::to_string(center_.size()));
  }
  Evaluation ev;
  ev.forces.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = s.positions[i] - center_[i];
    ev.energy += 0.5 * k_ * norm2(d);
    ev.forces[i] = d * (-k_);
  }
  if (s.periodic()) ev.stress = Mat3::zero();
  return ev;
}

RelaxationResult fire_relax(const Structure& s, const PesModel& model, const FireOptions& opt) {
  validate_structure(s);
  if (opt.f_tol <= 0.0) throw InvalidInput("fire_relax: f_tol must be positive");
  if (opt.max_steps < 0) throw InvalidInput("fire_relax: max_steps must be non-negative");

  const bool cell_dof = opt.relax_cell && s.periodic();
  const double length_scale = s.periodic() ? std::cbrt(cell_volume(*s.cell)) : 1.0;
  const std::size_t n = s.size();
  const std::size_t ndof = 3 * n + (cell_dof ? 9 : 0);

  Structure cur = s;
  Evaluation ev = model(cur);
  if (!all_finite(ev)) {
    throw NumericalError("relaxation produced a non-finite pseudo energy or force at step 0");
  }

  std::vector<double> f;
  pack_forces(cur, ev, cell_dof, length_scale, f);
  double max_f = max_abs_component(f);

  RelaxationResult res;
  res.trajectory.push_back({ev.energy, max_f});

  // Lowest-energy state visited; returned if the final state is worse.
  Structure best_structure = cur;
  double best_energy = ev.energy;
  double best_max_f = max_f;
  bool best_is_initial = true;

  if (max_f < opt.f_tol) {
    res.structure = s;
    res.pseudo_energy = ev.energy;
    res.pseudo_energy_per_atom = ev.energy / static_cast<double>(n);
    res.converged = true;
    res.steps = 0;
    res.max_force_final = max_f;
    return res;
  }

  std::vector<double> v(ndof, 0.0);
  std::vector<double> dx(ndof, 0.0);
  double dt = opt.dt_start;
  double alpha = opt.alpha_start;
  int n_pos = 0;
  int steps = 0;
  bool converged = false;

  for (int step = 1; step <= opt.max_steps; ++step) {
    double p = 0.0;
    for (std::size_t i = 0; i < ndof; ++i) p += f[i] * v[i];
    if (p > 0.0) {
      ++n_pos;
      if (n_pos > opt.n_min) {
        dt = std::min(dt * opt.f_inc, opt.dt_max);
        alpha *= opt.f_alpha;
      }
      double v_norm = 0.0;
      double f_norm = 0.0;
      for (std::size_t i = 0; i < ndof; ++i) {
        v_norm += v[i] * v[i];
        f_norm += f[i] * f[i];
      }
      v_norm = std::sqrt(v_norm);
      f_norm = std::sqrt(f_norm);
      if (f_norm > 0.0) {
        const double mix = alpha * v_norm / f_norm;
        for (std::size_t i = 0; i < ndof; ++i) v[i] = (1.0 - alpha) * v[i] + mix * f[i];
      }
    } else {
      n_pos = 0;
      dt *= opt.f_dec;
      alpha = opt.alpha_start;
      std::fill(v.begin(), v.end(), 0.0);
    }

    for (std::size_t i = 0; i < ndof; ++i) v[i] += dt * f[i];
    for (std::size_t i = 0; i < ndof; ++i) dx[i] = dt * v[i];
    const double max_dx = max_abs_component(dx);
    if (max_dx > opt.max_step) {
      const double scale = opt.max_step / max_dx;
      for (std::size_t i = 0; i < ndof; ++i) dx[i] *= scale;
    }

    apply_step(cur, dx, cell_dof, length_scale);
    ev = model(cur);
    if (!all_finite(ev)) {
      throw NumericalError("relaxation produced a non-finite pseudo energy or force at step " +
                           std::to_string(step));
    }
    pack_forces(cur, ev, cell_dof, length_scale, f);
    max_f = max_abs_component(f);
    res.trajectory.push_back({ev.energy, max_f});
    steps = step;

    if (ev.energy < best_energy) {
      best_energy = ev.energy;
      best_structure = cur;
      best_max_f = max_f;
      best_is_initial = false;
    }
    if (max_f < opt.f_tol) {
      converged = true;
      break;
    }
  }

  // Keep the guarantee that pseudo energy never increases from the input to
  // the returned state: fall back to the best visited state if needed.
  Structure out = cur;
  double out_energy = ev.energy;
  double out_max_f = max_f;
  bool from_initial = false;
  if (best_energy < out_energy) {
    out = best_structure;
    out_energy = best_energy;
    out_max_f = best_max_f;
    converged = out_max_f < opt.f_tol;
    from_initial = best_is_initial;
  }
  if (out.periodic() && steps > 0 && !from_initial) wrap_positions(out);

  res.structure = std::move(out);
  res.pseudo_energy = out_energy;
  res.pseudo_energy_per_atom = out_energy / static_cast<double>(n);
  res.converged = converged;
  res.steps = steps;
  res.max_force_final = out_max_f;
  return res;
}

}  // namespace pesgen
