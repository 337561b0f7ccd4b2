import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mems3d.errors import DegenerateFitError, GeometryError
from mems3d.lamination import (
    DeflectionProfile,
    argmax_curvature,
    arc_profile,
    equilibrium_residuals,
    fit_circle,
    inelastic_strains,
    solve_beam,
    stack_curvature,
    sweep_layer_thickness,
    sweep_two_layers,
    tip_deflection,
    write_sweep_csv,
)
from mems3d.materials import LayerSpec, MaterialSpec, StackSpec, builtin_material, layer_eigenstrain
from mems3d.units import celsius

# frozen oracle values for the Si 100 nm / Si3N4 100 nm bilayer
BILAYER_RADIUS = 4.742787e-05
BILAYER_CURVATURE = 21084.63


def custom_stack(moduli, thicknesses, alphas, t_deps):
    layers = tuple(
        LayerSpec(MaterialSpec(f"m{i}", e, 0.3, a, 1.0), t, celsius(td))
        for i, (e, t, a, td) in enumerate(zip(moduli, thicknesses, alphas, t_deps))
    )
    return StackSpec(layers)


def brute_force_curvature(stack):
    """Minimize the 1-D elastic energy over (eps0, kappa) by grid search with zooming."""
    moduli = np.array([l.material.youngs_modulus for l in stack.layers])
    z = stack.interfaces()
    h = z[-1]
    eps_in = inelastic_strains(stack)
    # exact integrals of E/2 (e0 - k (z - h/2) - g)^2 over each layer
    zb, zt = z[:-1] - h / 2, z[1:] - h / 2

    def energy(e0, k):
        e0 = e0[..., None]
        k = k[..., None]
        a = e0 - eps_in
        integral = a**2 * (zt - zb) - a * k * (zt**2 - zb**2) + k**2 * (zt**3 - zb**3) / 3
        return 0.5 * np.sum(moduli * integral, axis=-1)

    span_e = 2 * np.abs(eps_in).max() + 1e-30
    span_k = 20 * np.abs(eps_in).max() / h + 1e-30
    ce, ck = 0.0, 0.0
    for _ in range(40):
        ge, gk = np.meshgrid(np.linspace(ce - span_e, ce + span_e, 41), np.linspace(ck - span_k, ck + span_k, 41))
        i = np.unravel_index(np.argmin(energy(ge, gk)), ge.shape)
        ce, ck = ge[i], gk[i]
        span_e, span_k = span_e / 3, span_k / 3
    return ck


class TestStackCurvature:
    def test_bilayer_radius(self, bilayer):
        res = stack_curvature(bilayer)
        assert res.radius == pytest.approx(BILAYER_RADIUS, rel=1e-6)
        assert res.curvature == pytest.approx(BILAYER_CURVATURE, rel=1e-6)
        assert abs(res.radius - 47.37e-6) / 47.37e-6 < 0.02

    def test_tip_curls_up(self, bilayer):
        assert stack_curvature(bilayer).curvature > 0

    def test_monolayer_flat(self):
        for t in (50e-9, 1e-6):
            stack = StackSpec((LayerSpec(builtin_material("Si"), t, celsius(900)),))
            res = stack_curvature(stack)
            assert res.curvature == 0.0 and math.isinf(res.radius)

    def test_identical_layers(self):
        m = builtin_material("Si3N4")
        stack = StackSpec((LayerSpec(m, 80e-9, celsius(800)), LayerSpec(m, 120e-9, celsius(800))))
        res = stack_curvature(stack)
        assert abs(res.curvature) < 1e-9
        # midplane strain equals the shared (stress-free) eigenstrain
        assert res.midplane_strain == pytest.approx(layer_eigenstrain(stack.layers[0], stack), rel=1e-12)

    def test_trilayer_rather_flat(self, bilayer, trilayer):
        ratio = abs(stack_curvature(trilayer).curvature) / abs(stack_curvature(bilayer).curvature)
        assert ratio < 0.25
        assert ratio == pytest.approx(0.029571, rel=1e-3)

    def test_heating_reduces_curvature(self, bilayer):
        k0 = stack_curvature(bilayer).curvature
        k1 = stack_curvature(bilayer, delta_T_operating=50.0).curvature
        assert 0 < k1 < k0

    def test_equilibrium(self, bilayer, trilayer):
        for stack in (bilayer, trilayer):
            f, m = equilibrium_residuals(stack, stack_curvature(stack))
            assert f < 1e-10 and m < 1e-10

    def test_neutral_axis_inside(self, trilayer):
        res = stack_curvature(trilayer)
        assert 0 < res.neutral_axis < trilayer.total_thickness


class TestProperties:
    def test_superposition(self, bilayer):
        doubled = StackSpec(tuple(
            LayerSpec(l.material, l.thickness, bilayer.release_temperature + 2 * (l.deposition_temperature - bilayer.release_temperature))
            for l in bilayer.layers
        ))
        assert stack_curvature(doubled).curvature == pytest.approx(2 * stack_curvature(bilayer).curvature, rel=1e-12)

    def test_frame_invariance(self, trilayer):
        moduli = np.array([l.material.youngs_modulus for l in trilayer.layers])
        thick = np.array([l.thickness for l in trilayer.layers])
        eps = inelastic_strains(trilayer)
        e0, k0 = solve_beam(moduli, thick, eps)
        e1, k1 = solve_beam(moduli, thick, eps + 1.7e-3)
        assert k1 == pytest.approx(k0, rel=1e-9)
        assert e1 == pytest.approx(e0 + 1.7e-3, rel=1e-9)

    def test_length_independence(self, bilayer):
        from dataclasses import replace
        kappas = {stack_curvature(replace(bilayer, length=L)).curvature for L in (3e-6, 5e-6, 40e-6, 1e-3)}
        assert len(kappas) == 1

    def test_bimetal_closed_form(self, rng):
        for _ in range(20):
            e1, e2 = rng.uniform(50e9, 400e9, 2)
            t1, t2 = rng.uniform(10e-9, 1e-6, 2)
            stack = custom_stack([e1, e2], [t1, t2], rng.uniform(1e-6, 2e-5, 2), rng.uniform(100, 900, 2))
            g1, g2 = inelastic_strains(stack)
            m, n, h = t1 / t2, e1 / e2, t1 + t2
            expected = 6 * (g1 - g2) * (1 + m) ** 2 / (h * (3 * (1 + m) ** 2 + (1 + m * n) * (m**2 + 1 / (m * n))))
            assert stack_curvature(stack).curvature == pytest.approx(expected, rel=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(2, 4),
        data=st.data(),
    )
    def test_energy_minimizer(self, n, data):
        floats = lambda lo, hi: st.lists(st.floats(lo, hi), min_size=n, max_size=n)
        stack = custom_stack(
            data.draw(floats(50e9, 400e9)), data.draw(floats(10e-9, 1e-6)),
            data.draw(floats(1e-6, 25e-6)), data.draw(floats(100.0, 900.0)),
        )
        kappa = stack_curvature(stack).curvature
        brute = brute_force_curvature(stack)
        scale = np.abs(inelastic_strains(stack)).max() / stack.total_thickness
        assert abs(brute - kappa) <= 1e-3 * abs(kappa) + 1e-9 * scale


class TestSweeps:
    def test_fig4_optimum(self, bilayer):
        grid = np.arange(5, 301, 5) * 1e-9
        sweep = sweep_layer_thickness(bilayer, 1, grid)
        t_best, k_best = argmax_curvature(sweep)
        assert 30e-9 <= t_best <= 40e-9
        assert t_best == pytest.approx(35e-9)
        for t, res in (sweep[0], sweep[-1]):
            assert abs(res.curvature) < 0.5 * abs(k_best)

    def test_order_preserved(self, bilayer):
        grid = [10e-9, 20e-9, 40e-9]
        assert [t for t, _ in sweep_layer_thickness(bilayer, 1, grid)] == grid

    @pytest.mark.parametrize("grid, err", [([], ValueError), ([1e-8, -1e-8], ValueError), ([2e-8, 1e-8], ValueError)])
    def test_bad_grids(self, bilayer, grid, err):
        with pytest.raises(err):
            sweep_layer_thickness(bilayer, 1, grid)

    def test_bad_index(self, bilayer):
        with pytest.raises(IndexError):
            sweep_layer_thickness(bilayer, 5, [1e-8])

    def test_single_point(self, bilayer):
        sweep = sweep_layer_thickness(bilayer, 1, [70e-9])
        assert argmax_curvature(sweep) == (70e-9, sweep[0][1].curvature)

    def test_ties_pick_smaller(self, bilayer):
        res = stack_curvature(bilayer)
        assert argmax_curvature([(1.0, res), (2.0, res)])[0] == 1.0

    def test_two_d_layout(self, trilayer):
        rows = sweep_two_layers(trilayer, 1, [10e-9, 20e-9], 2, [5e-9, 10e-9, 15e-9])
        assert [k for k, _ in rows] == [(a, b) for a in (10e-9, 20e-9) for b in (5e-9, 10e-9, 15e-9)]

    def test_csv(self, bilayer, tmp_path):
        sweep = sweep_layer_thickness(bilayer, 1, [20e-9, 35e-9, 50e-9])
        path = tmp_path / "s.csv"
        write_sweep_csv(path, sweep, 5e-6)
        lines = path.read_text().splitlines()
        assert lines[0] == "thickness_m,curvature_per_m,radius_m,tip_deflection_m,argmax"
        assert [l.split(",")[-1] for l in lines[1:]] == ["0", "1", "0"]
        assert float(lines[2].split(",")[0]) == 35e-9


class TestArc:
    def test_straight(self):
        p = arc_profile(0.0, 50e-6, 11)
        assert np.all(p.points[:, 1] == 0) and p.tip[0] == pytest.approx(50e-6)

    def test_half_circle(self):
        r = 10e-6
        p = arc_profile(1 / r, math.pi * r, 101)
        assert p.tip[1] == pytest.approx(2 * r, rel=1e-12)
        assert tip_deflection(1 / r, math.pi * r) == pytest.approx(2 * r, rel=1e-12)

    def test_small_angle(self):
        r, L = 47.4e-6, 20e-6
        exact = r * (1 - math.cos(L / r))
        assert arc_profile(1 / r, L, 30).tip[1] == pytest.approx(exact, rel=1e-12)
        assert L**2 / (2 * r) == pytest.approx(4.22e-6, rel=1e-3)
        assert abs(exact - L**2 / (2 * r)) / exact < 0.03

    def test_negative_curvature_bends_down(self):
        assert arc_profile(-1e4, 10e-6).tip[1] < 0

    def test_rejects_beyond_full_circle(self):
        with pytest.raises(GeometryError):
            arc_profile(1e5, 7e-5)

    def test_n_points(self):
        with pytest.raises(ValueError):
            arc_profile(1.0, 1.0, 1)


class TestFitCircle:
    def test_exact_points(self):
        r = 47.37e-6
        th = np.linspace(-0.3, 1.2, 20)
        pts = np.column_stack([r * np.sin(th), r - r * np.cos(th)])
        radius, (xc, zc), rms = fit_circle(pts)
        assert radius == pytest.approx(r, rel=1e-12)
        assert rms < 1e-12
        assert zc == pytest.approx(r, rel=1e-9)

    def test_arc_round_trip(self):
        radius, _, _ = fit_circle(arc_profile(1 / 30e-6, 40e-6, 25))
        assert radius == pytest.approx(30e-6, rel=1e-9)

    def test_noise(self):
        r, L = 47.37e-6, 20e-6
        base = arc_profile(1 / r, L, 20).points
        for seed in range(100):
            g = np.random.default_rng(seed)
            noisy = base + g.uniform(-1e-9, 1e-9, base.shape)
            assert abs(fit_circle(noisy)[0] - r) / r < 0.005

    def test_collinear(self):
        with pytest.raises(DegenerateFitError, match="infinite"):
            fit_circle(arc_profile(0.0, 10e-6, 10))

    def test_too_few(self):
        with pytest.raises(DegenerateFitError):
            fit_circle(np.array([[0.0, 0.0], [1.0, 1.0]]))


class TestDeflectionProfile:
    def test_must_start_at_anchor(self):
        with pytest.raises(ValueError):
            DeflectionProfile(np.array([[1.0, 0.0], [2.0, 0.0]]), 2.0)
