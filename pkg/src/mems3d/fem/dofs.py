"""Global equation numbering for the coupled (u, T, phi) unknowns."""

from dataclasses import dataclass

import numpy as np

COMPONENTS = ("ux", "uy", "uz", "T", "phi")
COMPONENT_INDEX = {name: i for i, name in enumerate(COMPONENTS)}


@dataclass(frozen=True)
class DofMap:
    """Maps (node, component) to a global dof; -1 marks inactive pairs.

    Tied pairs share one global dof. A prescribed dof takes the value
    ``fixed_value + drive_scale * driven_value``.
    """

    index: np.ndarray
    n_dofs: int
    prescribed: np.ndarray
    fixed_value: np.ndarray
    driven_value: np.ndarray

    @property
    def free(self):
        return np.flatnonzero(~self.prescribed)

    @property
    def n_free(self):
        return int(self.n_dofs - self.prescribed.sum())

    def prescribed_values(self, drive_scale):
        return self.fixed_value + drive_scale * self.driven_value

    def dofs(self, nodes, component):
        c = COMPONENT_INDEX[component] if isinstance(component, str) else component
        d = self.index[np.asarray(nodes, dtype=np.int64), c]
        if np.any(d < 0):
            raise ValueError(f"component {COMPONENTS[c]} is inactive on some requested nodes")
        return d


def build_dofmap(n_nodes, active, fixed=(), ties=()):
    """Number the active dofs.

    ``fixed`` holds ``(nodes, component, value, driven)`` entries; ``driven``
    values scale with the drive factor of the load case. ``ties`` holds
    ``(nodes, component)`` groups forced to a single dof.
    """
    active = np.asarray(active, dtype=bool)
    if active.shape != (n_nodes, len(COMPONENTS)):
        raise ValueError("active mask must have shape (n_nodes, 5)")
    index = np.full(active.shape, -1, dtype=np.int64)
    # representative of tied pairs: keep the first node
    alias = {}
    for nodes, comp in ties:
        c = COMPONENT_INDEX[comp]
        nodes = np.asarray(nodes, dtype=np.int64)
        if not np.all(active[nodes, c]):
            raise ValueError(f"tie on inactive component {comp}")
        for n in nodes[1:]:
            alias[(int(n), c)] = (int(nodes[0]), c)
    count = 0
    for n, c in zip(*np.nonzero(active)):
        if (int(n), int(c)) in alias:
            continue
        index[n, c] = count
        count += 1
    for (n, c), (n0, c0) in alias.items():
        index[n, c] = index[n0, c0]

    prescribed = np.zeros(count, dtype=bool)
    fixed_value = np.zeros(count)
    driven_value = np.zeros(count)
    for nodes, comp, value, driven in fixed:
        c = COMPONENT_INDEX[comp]
        d = index[np.asarray(nodes, dtype=np.int64), c]
        if np.any(d < 0):
            raise ValueError(f"cannot prescribe inactive component {comp}")
        prescribed[d] = True
        if driven:
            driven_value[d] = value
            fixed_value[d] = 0.0
        else:
            fixed_value[d] = value
            driven_value[d] = 0.0
    return DofMap(index, count, prescribed, fixed_value, driven_value)
