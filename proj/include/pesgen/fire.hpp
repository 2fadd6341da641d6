#pragma once

#include <vector>

#include "pesgen/potential.hpp"
#include "pesgen/structure.hpp"

namespace pesgen {

/// Anything FIRE can relax on: pseudo energy, forces, and (periodic) stress.
class PesModel {
 public:
  virtual ~PesModel() = default;
  virtual Evaluation operator()(const Structure& s) const = 0;
};

class PotentialPes final : public PesModel {
 public:
  explicit PotentialPes(const PotentialParams& p) : p_(&p) {}
  Evaluation operator()(const Structure& s) const override { return evaluate(s, *p_); }

 private:
  const PotentialParams* p_;
};

/// Test hook: E = k/2 |x - x0|^2 with a known minimum at x0.
class QuadraticBowl final : public PesModel {
 public:
  QuadraticBowl(std::vector<Vec3> center, double k) : center_(std::move(center)), k_(k) {}
  Evaluation operator()(const Structure& s) const override;

 private:
  std::vector<Vec3> center_;
  double k_;
};

struct FireOptions {
  double f_tol = 1e-3;   // max |force component| convergence threshold
  int max_steps = 2000;
  bool relax_cell = false;
  double dt_start = 0.01;
  double dt_max = 0.1;
  int n_min = 5;
  double f_inc = 1.1;
  double f_dec = 0.5;
  double alpha_start = 0.1;
  double f_alpha = 0.99;
  double max_step = 0.2;  // displacement cap per step, A
};

struct TrajectoryPoint {
  double energy = 0.0;
  double max_force = 0.0;
};

struct RelaxationResult {
  Structure structure;
  double pseudo_energy = 0.0;
  double pseudo_energy_per_atom = 0.0;
  bool converged = false;
  int steps = 0;
  double max_force_final = 0.0;
  std::vector<TrajectoryPoint> trajectory;  // initial state plus each step
};

/// FIRE relaxation over atomic positions plus, when relax_cell on a periodic
/// structure, 9 strain degrees of freedom scaled by L = V0^(1/3) with the
/// conjugate force -V sigma / L. Returns the lowest-energy state visited
/// (normally the final one), so the pseudo energy never increases between
/// the initial and returned states. Throws NumericalError on non-finite
/// energies or forces.
RelaxationResult fire_relax(const Structure& s, const PesModel& model, const FireOptions& opt);

}  // namespace pesgen
