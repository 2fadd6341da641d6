// Python bindings: tuples for 3-vectors, nested 3x3 tuples for matrices.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>
#include <vector>

#include "pesgen/analysis.hpp"
#include "pesgen/checkpoint.hpp"
#include "pesgen/config.hpp"
#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"
#include "pesgen/extxyz.hpp"
#include "pesgen/fire.hpp"
#include "pesgen/generate.hpp"
#include "pesgen/noise.hpp"
#include "pesgen/potential.hpp"
#include "pesgen/random.hpp"
#include "pesgen/structure.hpp"
#include "pesgen/trainer.hpp"
#include "pesgen/verify.hpp"

namespace py = pybind11;

namespace pybind11 {
namespace detail {

template <>
struct type_caster<pesgen::Vec3> {
 public:
  PYBIND11_TYPE_CASTER(pesgen::Vec3, const_name("tuple[float, float, float]"));

  bool load(handle src, bool) {
    if (!isinstance<sequence>(src)) return false;
    auto seq = reinterpret_borrow<sequence>(src);
    if (seq.size() != 3) return false;
    try {
      value =
          pesgen::Vec3{seq[0].cast<double>(), seq[1].cast<double>(), seq[2].cast<double>()};
    } catch (const cast_error&) {
      return false;
    }
    return true;
  }

  static handle cast(const pesgen::Vec3& v, return_value_policy, handle) {
    return make_tuple(v.x, v.y, v.z).release();
  }
};

template <>
struct type_caster<pesgen::Mat3> {
 public:
  PYBIND11_TYPE_CASTER(pesgen::Mat3, const_name("tuple of 3 rows of 3 floats"));

  bool load(handle src, bool) {
    if (!isinstance<sequence>(src)) return false;
    auto rows = reinterpret_borrow<sequence>(src);
    if (rows.size() != 3) return false;
    try {
      for (int r = 0; r < 3; ++r) {
        auto row = reinterpret_borrow<sequence>(rows[static_cast<std::size_t>(r)]);
        if (row.size() != 3) return false;
        for (int c = 0; c < 3; ++c) {
          value(r, c) = row[static_cast<std::size_t>(c)].cast<double>();
        }
      }
    } catch (const cast_error&) {
      return false;
    }
    return true;
  }

  static handle cast(const pesgen::Mat3& m, return_value_policy, handle) {
    return make_tuple(make_tuple(m(0, 0), m(0, 1), m(0, 2)),
                      make_tuple(m(1, 0), m(1, 1), m(1, 2)),
                      make_tuple(m(2, 0), m(2, 1), m(2, 2)))
        .release();
  }
};

}  // namespace detail
}  // namespace pybind11

namespace {

using namespace pesgen;

std::optional<Mat3> get_cell(const Structure& s) { return s.cell; }
void set_cell(Structure& s, const std::optional<Mat3>& cell) { s.cell = cell; }

}  // namespace

PYBIND11_MODULE(_pesgen, m) {
  m.doc() = "Response-matching pseudo-PES: training and structure generation";

  py::register_exception<Error>(m, "PesgenError");

  // --- structures ---
  py::class_<Structure>(m, "Structure")
      .def(py::init([](std::vector<int> species, std::vector<Vec3> positions,
                       std::optional<Mat3> cell) {
             Structure s;
             s.species = std::move(species);
             s.positions = std::move(positions);
             s.cell = cell;
             return s;
           }),
           py::arg("species"), py::arg("positions"), py::arg("cell") = std::nullopt)
      .def_readwrite("species", &Structure::species)
      .def_readwrite("positions", &Structure::positions)
      .def_property("cell", &get_cell, &set_cell)
      .def_property_readonly("periodic", &Structure::periodic)
      .def("__len__", [](const Structure& s) { return s.size(); });

  m.def("validate_structure", &validate_structure);
  m.def("cell_volume", &cell_volume);
  m.def("perpendicular_widths", &perpendicular_widths);
  m.def("minimum_image_displacement", &minimum_image_displacement);
  m.def("make_supercell", &make_supercell);
  m.def("wrap_positions", [](Structure s) {
    wrap_positions(s);
    return s;
  });
  m.def(
      "neighbor_pairs",
      [](const Structure& s, double r_cut) {
        const NeighborList nl = build_neighbor_list(s, r_cut);
        std::vector<std::tuple<int, int, std::tuple<int, int, int>, double>> out;
        for (std::size_t i = 0; i < nl.atoms.size(); ++i) {
          for (const Neighbor& nb : nl.atoms[i]) {
            out.emplace_back(static_cast<int>(i), static_cast<int>(nb.j),
                             std::make_tuple(nb.shift[0], nb.shift[1], nb.shift[2]), nb.r);
          }
        }
        return out;
      },
      py::arg("structure"), py::arg("r_cut"),
      "Directed neighbor edges (i, j, periodic shift, distance)");
  m.def("element_symbol", &element_symbol);
  m.def("element_number", &element_number);

  // --- noise / targets ---
  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_readwrite("d_max", &NoiseSpec::d_max)
      .def_readwrite("gamma_max", &NoiseSpec::gamma_max)
      .def_readwrite("k", &NoiseSpec::k)
      .def_readwrite("rep_m", &NoiseSpec::rep_m)
      .def_readwrite("rep_n", &NoiseSpec::rep_n)
      .def_readwrite("rep_rc", &NoiseSpec::rep_rc)
      .def_readwrite("K_normal", &NoiseSpec::K_normal)
      .def_readwrite("K_shear", &NoiseSpec::K_shear)
      .def_readwrite("n_noise_per_structure", &NoiseSpec::n_noise_per_structure);

  py::class_<TrainingSample>(m, "TrainingSample")
      .def_readonly("noised", &TrainingSample::noised)
      .def_readonly("target_forces", &TrainingSample::target_forces)
      .def_readonly("target_stress", &TrainingSample::target_stress)
      .def_readonly("displacements", &TrainingSample::displacements)
      .def_readonly("strain", &TrainingSample::strain)
      .def_readonly("noise_scale", &TrainingSample::noise_scale);

  m.def(
      "make_training_sample",
      [](const Structure& s, const NoiseSpec& spec, std::uint64_t seed) {
        Rng rng(seed);
        return make_training_sample(s, spec, rng);
      },
      py::arg("structure"), py::arg("spec"), py::arg("seed"));
  m.def("apply_noise", &apply_noise);
  m.def("repulsive_energy", &repulsive_energy);

  // --- potential ---
  py::class_<ModelHypers>(m, "ModelHypers")
      .def(py::init<>())
      .def_readwrite("r_cut", &ModelHypers::r_cut)
      .def_readwrite("n_max", &ModelHypers::n_max)
      .def_readwrite("l_max", &ModelHypers::l_max)
      .def_readwrite("nu_max", &ModelHypers::nu_max)
      .def_readwrite("n_embedding", &ModelHypers::n_embedding)
      .def_readwrite("hidden_width", &ModelHypers::hidden_width)
      .def_readwrite("activation", &ModelHypers::activation);

  py::class_<PotentialParams>(m, "PotentialParams")
      .def_readonly("hypers", &PotentialParams::hypers)
      .def_readonly("elements", &PotentialParams::elements)
      .def_readonly("embeddings", &PotentialParams::embeddings)
      .def_property_readonly("n_features", &PotentialParams::n_features)
      .def_property_readonly("n_learnable", &PotentialParams::n_learnable);

  m.def("init_params", &init_params, py::arg("hypers"), py::arg("elements"), py::arg("seed"));
  m.def("total_energy", &total_energy, py::call_guard<py::gil_scoped_release>());
  m.def("forces", &forces, py::call_guard<py::gil_scoped_release>());
  m.def("virial_stress", &virial_stress, py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate",
      [](const Structure& s, const PotentialParams& p) {
        Evaluation ev;
        {
          py::gil_scoped_release release;
          ev = evaluate(s, p);
        }
        return py::make_tuple(ev.energy, py::cast(ev.forces),
                              ev.stress ? py::cast(*ev.stress) : py::none());
      },
      py::arg("structure"), py::arg("params"),
      "Returns (energy, forces, stress-or-None)");

  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", &load_checkpoint);
  m.def("checkpoint_to_string", &checkpoint_to_string);
  m.def("checkpoint_from_string", &checkpoint_from_string);

  // --- trainer ---
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
      .def_readwrite("grad_clip", &TrainConfig::grad_clip)
      .def_readwrite("checkpoint_interval", &TrainConfig::checkpoint_interval)
      .def_readwrite("checkpoint_path", &TrainConfig::checkpoint_path);

  py::class_<EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &EpochStats::epoch)
      .def_readonly("train_loss", &EpochStats::train_loss)
      .def_readonly("val_loss", &EpochStats::val_loss)
      .def_readonly("force_rmse", &EpochStats::force_rmse)
      .def_readonly("stress_rmse", &EpochStats::stress_rmse);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("epochs", &TrainReport::epochs)
      .def_readonly("best_val_loss", &TrainReport::best_val_loss)
      .def_readonly("best_epoch", &TrainReport::best_epoch)
      .def_readonly("wall_seconds", &TrainReport::wall_seconds);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("report", &TrainResult::report);

  m.def("train", &train, py::arg("dataset"), py::arg("noise"), py::arg("hypers"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("rm_loss", &rm_loss, py::call_guard<py::gil_scoped_release>());
  m.def("loss_param_gradient", &loss_param_gradient, py::call_guard<py::gil_scoped_release>());

  py::class_<DerivativeReport>(m, "DerivativeReport")
      .def_readonly("max_force_rel_err", &DerivativeReport::max_force_rel_err)
      .def_readonly("max_stress_rel_err", &DerivativeReport::max_stress_rel_err)
      .def_readonly("max_lossgrad_rel_err", &DerivativeReport::max_lossgrad_rel_err);
  m.def("verify_derivatives", &verify_derivatives, py::arg("params"), py::arg("sample"),
        py::arg("max_loss_params") = 0, py::call_guard<py::gil_scoped_release>());

  py::class_<SymmetryReport>(m, "SymmetryReport")
      .def_readonly("max_energy_dev", &SymmetryReport::max_energy_dev)
      .def_readonly("max_force_dev", &SymmetryReport::max_force_dev)
      .def_readonly("max_extensivity_dev", &SymmetryReport::max_extensivity_dev)
      .def_readonly("trials", &SymmetryReport::trials);
  m.def("verify_symmetries", &verify_symmetries, py::arg("hypers"), py::arg("n_trials"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "random_test_structure",
      [](std::uint64_t seed, const std::vector<int>& elements, int n_atoms, bool periodic) {
        Rng rng(seed);
        return random_test_structure(rng, elements, n_atoms, periodic);
      },
      py::arg("seed"), py::arg("elements"), py::arg("n_atoms"), py::arg("periodic"));

  // --- FIRE + generation ---
  py::class_<FireOptions>(m, "FireOptions")
      .def(py::init<>())
      .def_readwrite("f_tol", &FireOptions::f_tol)
      .def_readwrite("max_steps", &FireOptions::max_steps)
      .def_readwrite("relax_cell", &FireOptions::relax_cell)
      .def_readwrite("dt_start", &FireOptions::dt_start)
      .def_readwrite("dt_max", &FireOptions::dt_max)
      .def_readwrite("n_min", &FireOptions::n_min)
      .def_readwrite("f_inc", &FireOptions::f_inc)
      .def_readwrite("f_dec", &FireOptions::f_dec)
      .def_readwrite("alpha_start", &FireOptions::alpha_start)
      .def_readwrite("f_alpha", &FireOptions::f_alpha)
      .def_readwrite("max_step", &FireOptions::max_step);

  py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
      .def_readonly("energy", &TrajectoryPoint::energy)
      .def_readonly("max_force", &TrajectoryPoint::max_force);

  py::class_<RelaxationResult>(m, "RelaxationResult")
      .def_readonly("structure", &RelaxationResult::structure)
      .def_readonly("pseudo_energy", &RelaxationResult::pseudo_energy)
      .def_readonly("pseudo_energy_per_atom", &RelaxationResult::pseudo_energy_per_atom)
      .def_readonly("converged", &RelaxationResult::converged)
      .def_readonly("steps", &RelaxationResult::steps)
      .def_readonly("max_force_final", &RelaxationResult::max_force_final)
      .def_readonly("trajectory", &RelaxationResult::trajectory);

  py::class_<SpeciesCount>(m, "SpeciesCount")
      .def(py::init([](int z, int count) {
             SpeciesCount sc;
             sc.z = z;
             sc.count = count;
             return sc;
           }),
           py::arg("z"), py::arg("count"))
      .def_readwrite("z", &SpeciesCount::z)
      .def_readwrite("count", &SpeciesCount::count);

  py::class_<GenSpec>(m, "GenSpec")
      .def(py::init<>())
      .def_readwrite("composition", &GenSpec::composition)
      .def_readwrite("pbc", &GenSpec::pbc)
      .def_readwrite("min_distance", &GenSpec::min_distance)
      .def_readwrite("molar_volume_range", &GenSpec::molar_volume_range)
      .def_readwrite("f_tol", &GenSpec::f_tol)
      .def_readwrite("max_steps", &GenSpec::max_steps)
      .def_readwrite("relax_cell", &GenSpec::relax_cell);

  py::class_<ElementVolume>(m, "ElementVolume")
      .def(py::init([](int z, double volume) {
             ElementVolume ev;
             ev.z = z;
             ev.volume = volume;
             return ev;
           }),
           py::arg("z"), py::arg("volume"))
      .def_readwrite("z", &ElementVolume::z)
      .def_readwrite("volume", &ElementVolume::volume);

  m.def("fit_molar_volumes", &fit_molar_volumes);
  m.def(
      "random_structure",
      [](const GenSpec& spec, const std::vector<ElementVolume>& volumes, std::uint64_t seed) {
        Rng rng(seed);
        return random_structure(spec, volumes, rng);
      },
      py::arg("spec"), py::arg("volumes"), py::arg("seed"));
  m.def(
      "fire_relax",
      [](const Structure& s, const PotentialParams& p, const GenSpec& spec) {
        py::gil_scoped_release release;
        return fire_relax(s, p, spec);
      },
      py::arg("structure"), py::arg("params"), py::arg("spec"));

  py::class_<GenSample>(m, "GenSample")
      .def_readonly("seed", &GenSample::seed)
      .def_readonly("result", &GenSample::result);
  py::class_<GenFailure>(m, "GenFailure")
      .def_readonly("index", &GenFailure::index)
      .def_readonly("seed", &GenFailure::seed)
      .def_readonly("message", &GenFailure::message);
  py::class_<GenBatch>(m, "GenBatch")
      .def_readonly("samples", &GenBatch::samples)
      .def_readonly("failures", &GenBatch::failures);
  m.def("generate", &generate, py::arg("params"), py::arg("spec"), py::arg("n_samples"),
        py::arg("seed"), py::arg("volumes") = std::vector<ElementVolume>{},
        py::call_guard<py::gil_scoped_release>());

  // --- analysis ---
  py::class_<HullPoint>(m, "HullPoint")
      .def(py::init([](double x, double e_ex, std::string ref) {
             HullPoint p;
             p.x = x;
             p.e_ex = e_ex;
             p.structure_ref = std::move(ref);
             return p;
           }),
           py::arg("x"), py::arg("e_ex"), py::arg("structure_ref") = "")
      .def_readwrite("x", &HullPoint::x)
      .def_readwrite("e_ex", &HullPoint::e_ex)
      .def_readwrite("structure_ref", &HullPoint::structure_ref);
  py::class_<HullResult>(m, "HullResult")
      .def_readonly("on_hull", &HullResult::on_hull)
      .def_readonly("vertices", &HullResult::vertices);
  m.def("excess_energy", &excess_energy);
  m.def("lower_convex_hull", &lower_convex_hull);

  py::class_<Fingerprint>(m, "Fingerprint")
      .def_readonly("r_max", &Fingerprint::r_max)
      .def_readonly("bins", &Fingerprint::bins)
      .def_readonly("smearing", &Fingerprint::smearing)
      .def_readonly("species", &Fingerprint::species)
      .def_readonly("histograms", &Fingerprint::histograms)
      .def_readonly("composition", &Fingerprint::composition)
      .def_readonly("volume_per_atom", &Fingerprint::volume_per_atom);
  m.def("structure_fingerprint", &structure_fingerprint, py::arg("structure"), py::arg("r_max"),
        py::arg("bins"), py::arg("smearing"));

  py::class_<MatchSpec>(m, "MatchSpec")
      .def(py::init<>())
      .def_readwrite("r_max", &MatchSpec::r_max)
      .def_readwrite("bins", &MatchSpec::bins)
      .def_readwrite("smearing", &MatchSpec::smearing)
      .def_readwrite("tol_v", &MatchSpec::tol_v)
      .def_readwrite("tol_f", &MatchSpec::tol_f);
  py::class_<MatchResult>(m, "MatchResult")
      .def_readonly("matched", &MatchResult::matched)
      .def_readonly("distance", &MatchResult::distance);
  m.def("match_structures", &match_structures, py::arg("a"), py::arg("b"),
        py::arg("spec") = MatchSpec{});

  py::class_<PcaResult>(m, "PcaResult")
      .def_readonly("coords", &PcaResult::coords)
      .def_readonly("explained_variance", &PcaResult::explained_variance)
      .def_readonly("explained_fraction", &PcaResult::explained_fraction);
  m.def("embedding_pca", &embedding_pca);
  m.def("aligned_rmsd", &aligned_rmsd);

  // --- I/O ---
  py::class_<Frame>(m, "Frame")
      .def(py::init([](Structure s) {
             Frame f;
             f.structure = std::move(s);
             return f;
           }),
           py::arg("structure"))
      .def_readwrite("structure", &Frame::structure)
      .def_readwrite("info", &Frame::info)
      .def_readwrite("vec3_arrays", &Frame::vec3_arrays)
      .def("set_info", &Frame::set_info);
  m.def("read_extxyz", &read_extxyz_file, py::arg("path"));
  m.def("write_extxyz", &write_extxyz_file, py::arg("path"), py::arg("frames"));
}
