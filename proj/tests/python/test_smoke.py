"""End-to-end smoke tests for the python bindings."""

import math

import pytest

import pesgen


def two_atom_crystal():
    cell = ((4.0, 0.0, 0.0), (0.0, 4.0, 0.0), (0.0, 0.0, 4.0))
    return pesgen.Structure(
        species=[6, 6], positions=[(0.0, 0.0, 0.0), (1.8, 0.2, 0.1)], cell=cell
    )


def test_structure_basics():
    s = two_atom_crystal()
    assert len(s) == 2
    assert s.periodic
    assert pesgen.cell_volume(s.cell) == pytest.approx(64.0)
    pairs = pesgen.neighbor_pairs(s, 2.5)
    assert any(i == 0 and j == 1 for i, j, _, _ in pairs)


def test_energy_forces_stress():
    s = two_atom_crystal()
    params = pesgen.init_params(pesgen.ModelHypers(), [6], seed=7)
    energy, forces, stress = pesgen.evaluate(s, params)
    assert math.isfinite(energy)
    assert len(forces) == 2
    assert stress is not None
    assert energy == pytest.approx(pesgen.total_energy(s, params))


def test_checkpoint_roundtrip(tmp_path):
    params = pesgen.init_params(pesgen.ModelHypers(), [6, 8], seed=3)
    path = str(tmp_path / "model.json")
    pesgen.save_checkpoint(path, params)
    loaded = pesgen.load_checkpoint(path)
    assert loaded.elements == [6, 8]
    assert pesgen.checkpoint_to_string(loaded) == pesgen.checkpoint_to_string(params)


def test_training_sample_targets():
    spec = pesgen.NoiseSpec()
    sample = pesgen.make_training_sample(two_atom_crystal(), spec, seed=11)
    assert len(sample.target_forces) == 2
    assert 0.0 < sample.noise_scale <= 1.0


def test_fire_quadratic_descent():
    s = pesgen.Structure(species=[6], positions=[(0.3, -0.2, 0.5)])
    spec = pesgen.GenSpec()
    spec.pbc = False
    params = pesgen.init_params(pesgen.ModelHypers(), [6], seed=1)
    result = pesgen.fire_relax(s, params, spec)
    assert result.steps >= 0
    assert result.trajectory[0].energy >= result.pseudo_energy


def test_extxyz_roundtrip(tmp_path):
    frame = pesgen.Frame(two_atom_crystal())
    frame.set_info("tag", "smoke test")
    path = str(tmp_path / "frames.extxyz")
    pesgen.write_extxyz(path, [frame])
    frames = pesgen.read_extxyz(path)
    assert len(frames) == 1
    assert frames[0].structure.species == [6, 6]
    assert ("tag", "smoke test") in frames[0].info


def test_errors_are_typed():
    with pytest.raises(pesgen.PesgenError):
        pesgen.validate_structure(pesgen.Structure(species=[6], positions=[]))
    with pytest.raises(pesgen.PesgenError):
        pesgen.element_number("Xx")
