import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from _fd import COMBINATIONS, random_element_state, worst_column_error
from mems3d.errors import ElementInversionError
from mems3d.fem.element import ElementProperties, element_energy, element_geometry, element_residual_tangent
from mems3d.fem.shape import NODE_REF_COORDS
from mems3d.materials import builtin_material

T_REF = 293.15
DIMS = np.array([0.25e-6, 0.5e-6, 0.1e-6])


def box_coords():
    return ((NODE_REF_COORDS + 1) / 2 * DIMS)[None]


def props_for(name, eigenstrain=0.0, conducting=False, dielectric=False):
    return ElementProperties.from_materials(
        [builtin_material(name)], [eigenstrain],
        conducting=np.array([conducting]), dielectric=np.array([dielectric]),
    )


def fields(u=None, temp=None, phi=None):
    u = np.zeros((1, 20, 3)) if u is None else u[None]
    temp = np.full((1, 20), T_REF) if temp is None else temp[None]
    phi = np.zeros((1, 20)) if phi is None else phi[None]
    return u, temp, phi


class TestTangent:
    @pytest.mark.parametrize("finite_strain", [True, False])
    @pytest.mark.parametrize("combination", sorted(COMBINATIONS))
    def test_matches_finite_differences(self, rng, combination, finite_strain):
        for _ in range(10):
            evaluate, x0 = random_element_state(rng, combination, finite_strain)
            assert worst_column_error(evaluate, x0) < 1e-6

    def test_piezo_reciprocity(self, rng):
        geom = element_geometry(box_coords())
        props = props_for("AlN-piezo", dielectric=True)
        u, temp, phi = fields(rng.normal(0, 2e-9, (20, 3)), None, rng.normal(0, 0.1, 20))
        _, k = element_residual_tangent(geom, props, u, temp, phi, comps=(0, 1, 2, 4), reference_temperature=T_REF)
        k = k[0].reshape(20, 4, 20, 4)
        kup = k[:, :3, :, 3].reshape(60, 20)
        kpu = k[:, 3, :, :3].reshape(20, 60)
        assert np.abs(kup - kpu.T).max() <= 1e-12 * np.abs(kup).max()

    @pytest.mark.parametrize("finite_strain", [True, False])
    def test_symmetric_without_joule(self, rng, finite_strain):
        geom = element_geometry(box_coords())
        props = props_for("AlN-piezo", 1e-3, dielectric=True)
        u, temp, phi = fields(rng.normal(0, 2e-9, (20, 3)), None, rng.normal(0, 0.1, 20))
        _, k = element_residual_tangent(
            geom, props, u, temp, phi, comps=(0, 1, 2, 4), reference_temperature=T_REF, finite_strain=finite_strain
        )
        k = k[0]
        assert np.abs(k - k.T).max() <= 1e-12 * np.abs(k).max()

    def test_joule_coupling_breaks_symmetry(self, rng):
        evaluate, x0 = random_element_state(rng, "electrothermal")
        k = evaluate(x0)[1].reshape(20, 5, 20, 5)
        k_tp, k_pt = k[:, 3, :, 4], k[:, 4, :, 3]
        # heat depends on the potential, current does not depend on temperature
        assert np.abs(k_tp).max() > 0 and np.all(k_pt == 0)


class TestResidual:
    @pytest.mark.parametrize("combination", sorted(COMBINATIONS))
    def test_zero_state(self, combination):
        comps, name, conducting, dielectric = COMBINATIONS[combination]
        geom = element_geometry(box_coords())
        props = props_for(name, 0.0, conducting, dielectric)
        r, _ = element_residual_tangent(geom, props, *fields(), comps=comps, reference_temperature=T_REF, tangent=False)
        assert np.all(r == 0.0)

    @pytest.mark.parametrize("finite_strain", [True, False])
    def test_rigid_translation(self, rng, finite_strain):
        geom = element_geometry(box_coords())
        props = props_for("Si3N4", 1e-3)
        u = rng.normal(0, 2e-9, (20, 3))
        args = dict(comps=(0, 1, 2), reference_temperature=T_REF, finite_strain=finite_strain, tangent=False)
        r0, _ = element_residual_tangent(geom, props, *fields(u), **args)
        r1, _ = element_residual_tangent(geom, props, *fields(u + np.array([3e-7, -1e-7, 2e-7])), **args)
        assert np.abs(r1 - r0).max() <= 1e-10 * np.abs(r0).max()

    def test_internal_forces_balance(self, rng):
        geom = element_geometry(box_coords())
        props = props_for("Si3N4", 2e-3)
        r, _ = element_residual_tangent(
            geom, props, *fields(rng.normal(0, 2e-9, (20, 3))), comps=(0, 1, 2), reference_temperature=T_REF,
            tangent=False,
        )
        r = r[0].reshape(20, 3)
        assert np.abs(r.sum(axis=0)).max() <= 1e-10 * np.abs(r).max()

    def test_inversion_detected(self):
        geom = element_geometry(box_coords())
        u = -2.0 * (box_coords()[0] - box_coords()[0].mean(axis=0))
        with pytest.raises(ElementInversionError):
            element_residual_tangent(geom, props_for("Si"), *fields(u), comps=(0, 1, 2), reference_temperature=T_REF)

    def test_reference_jacobian_checked(self):
        coords = box_coords().copy()
        coords[..., 0] *= -1
        with pytest.raises(ElementInversionError):
            element_geometry(coords)


class TestEnergy:
    def test_objectivity(self, rng):
        geom = element_geometry(box_coords())
        props = props_for("AlN-piezo", 1e-3, dielectric=True)
        X = box_coords()[0]
        u = rng.normal(0, 2e-9, (20, 3))
        temp = T_REF + rng.normal(0, 5, 20)
        phi = rng.normal(0, 0.1, 20)
        w0 = element_energy(geom, props, *fields(u, temp, phi), 0.7, T_REF)[0]
        for _ in range(5):
            q = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
            u_rot = (X + u) @ q.T - X
            w1 = element_energy(geom, props, *fields(u_rot, temp, phi), 0.7, T_REF)[0]
            assert abs(w1 - w0) <= 1e-9 * abs(w0)

    def test_small_strain_not_objective(self, rng):
        geom = element_geometry(box_coords())
        props = props_for("Si")
        X = box_coords()[0]
        q = Rotation.from_euler("y", 0.2).as_matrix()
        u_rot = X @ q.T - X
        assert element_energy(geom, props, *fields(u_rot), 0.0, T_REF, finite_strain=False)[0] > 0

    @pytest.mark.parametrize("finite_strain", [True, False])
    def test_gradient_is_residual(self, rng, finite_strain):
        # mechanical and Gauss-law residuals derive from the electric enthalpy
        geom = element_geometry(box_coords())
        props = props_for("AlN-piezo", 1e-3, dielectric=True)
        u = rng.normal(0, 2e-9, (20, 3))
        temp = T_REF + rng.normal(0, 5, 20)
        phi = rng.normal(0, 0.1, 20)
        r, _ = element_residual_tangent(
            geom, props, *fields(u, temp, phi), comps=(0, 1, 2, 4), load_factor=0.5, reference_temperature=T_REF,
            finite_strain=finite_strain, tangent=False,
        )
        r = r[0].reshape(20, 4)
        errors = []
        for a in rng.choice(20, 6, replace=False):
            for c in range(4):
                h = 1e-12 if c < 3 else 1e-5
                up, um, pp, pm = u.copy(), u.copy(), phi.copy(), phi.copy()
                if c < 3:
                    up[a, c] += h
                    um[a, c] -= h
                else:
                    pp[a] += h
                    pm[a] -= h
                wp = element_energy(geom, props, *fields(up, temp, pp), 0.5, T_REF, finite_strain)[0]
                wm = element_energy(geom, props, *fields(um, temp, pm), 0.5, T_REF, finite_strain)[0]
                errors.append(abs((wp - wm) / (2 * h) - r[a, c]) / np.abs(r[:, c]).max())
        assert max(errors) < 1e-5
