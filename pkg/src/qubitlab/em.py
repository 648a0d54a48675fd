"""2D finite-difference electrostatics -> Maxwell capacitance matrix ->
node reduction -> effective charging energy, plus Josephson-branch helpers.

The solver works on a grounded rectangular box with a uniform dielectric.
Conductors are axis-aligned rectangles held at fixed potentials; rectangles
sharing a label form one electrical node.  Capacitances are quoted in fF for
a 1 um slab depth (absolute values are calibration-dependent at desk scale;
sign structure and trends are the physical content).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .constants import E_CHARGE, EPS0, H_PLANCK, PHI0_REDUCED

_DEPTH_M = 1.0e-6               # slab depth behind the 2D cross-section


@dataclass(frozen=True)
class ConductorLayout:
    domain: Tuple[float, float]                    # (width, height) um
    conductors: List[Tuple[str, Tuple[float, float, float, float], bool]]
    relative_permittivity: float = 11.45
    grid_spacing: float = 1.0                      # um

    def __post_init__(self):
        w, h = self.domain
        if w <= 0 or h <= 0 or self.grid_spacing <= 0:
            raise ValueError("domain and grid_spacing must be positive")
        for size, name in ((w, "width"), (h, "height")):
            steps = size / self.grid_spacing
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ValueError(
                    f"grid_spacing {self.grid_spacing} does not divide domain "
                    f"{name} {size} evenly")
        if self.relative_permittivity <= 0:
            raise ValueError("relative_permittivity must be positive")
        for lab, (x0, y0, x1, y1), _flag in self.conductors:
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"conductor {lab!r} rectangle is degenerate")
            if not (0.0 < x0 and x1 < w and 0.0 < y0 and y1 < h):
                raise ValueError(f"conductor {lab!r} must lie strictly inside "
                                 f"the domain")
        rects = [(lab, r) for lab, r, _ in self.conductors]
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                la, (ax0, ay0, ax1, ay1) = rects[i]
                lb, (bx0, by0, bx1, by1) = rects[j]
                if la == lb:
                    continue            # same node may touch
                if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                    raise ValueError(
                        f"conductors {la!r} and {lb!r} overlap")

    @property
    def labels(self) -> List[str]:
        seen: List[str] = []
        for lab, _r, _f in self.conductors:
            if lab not in seen:
                seen.append(lab)
        return seen


def load_layout(path: str) -> ConductorLayout:
    """Layout text format: `domain W H`, `spacing S`, `permittivity E`
    headers followed by one `label x0 y0 x1 y1` line per conductor (um)."""
    domain = spacing = perm = None
    conductors = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            key = parts[0].lower()
            if key == "domain" and len(parts) == 3:
                domain = (float(parts[1]), float(parts[2]))
            elif key == "spacing" and len(parts) == 2:
                spacing = float(parts[1])
            elif key == "permittivity" and len(parts) == 2:
                perm = float(parts[1])
            elif len(parts) == 5:
                lab = parts[0]
                rect = tuple(float(v) for v in parts[1:5])
                conductors.append((lab, rect, True))
            else:
                raise ValueError(f"unparseable layout line: {raw.rstrip()}")
    if domain is None or spacing is None:
        raise ValueError("layout file must declare domain and spacing")
    if not conductors:
        raise ValueError("layout file declares no conductors")
    return ConductorLayout(domain=domain, conductors=conductors,
                           relative_permittivity=(perm if perm is not None
                                                  else 11.45),
                           grid_spacing=spacing)


@dataclass
class PotentialGrid:
    values: np.ndarray           # (ny, nx) volts, row y / column x
    x: np.ndarray
    y: np.ndarray
    node_label: np.ndarray       # (ny, nx) int, -1 free, else conductor index
    labels: List[str]
    driven: str
    residual: float              # relative Laplace residual at free nodes


def _grid_masks(layout: ConductorLayout):
    h = layout.grid_spacing
    nx = round(layout.domain[0] / h) + 1
    ny = round(layout.domain[1] / h) + 1
    x = np.arange(nx) * h
    y = np.arange(ny) * h
    labels = layout.labels
    node = np.full((ny, nx), -1, dtype=np.int64)
    tol = 1e-9 * h
    for lab, (x0, y0, x1, y1), _f in layout.conductors:
        k = labels.index(lab)
        ix = (x >= x0 - tol) & (x <= x1 + tol)
        iy = (y >= y0 - tol) & (y <= y1 + tol)
        node[np.ix_(iy, ix)] = k
    return x, y, node, labels


def solve_poisson(layout: ConductorLayout, driven: str,
                  maxiter: int = 20000, rtol: float = 1e-10) -> PotentialGrid:
    """Potential with `driven` at 1 V, every other conductor and the box
    boundary at 0 V.  Conjugate-gradient solve of the 5-point Laplacian."""
    x, y, node, labels = _grid_masks(layout)
    if driven not in labels:
        raise ValueError(f"driven conductor {driven!r} not in layout")
    k_drv = labels.index(driven)
    ny, nx = node.shape

    fixed = node >= 0
    fixed[0, :] = fixed[-1, :] = True
    fixed[:, 0] = fixed[:, -1] = True
    vfix = np.where(node == k_drv, 1.0, 0.0)

    free = ~fixed
    idx = -np.ones(node.shape, dtype=np.int64)
    idx[free] = np.arange(free.sum())
    nfree = int(free.sum())
    if nfree == 0:
        raise ValueError("layout leaves no free nodes to solve")

    rows, cols, vals = [], [], []
    b = np.zeros(nfree)
    fy, fx = np.nonzero(free)
    me = idx[fy, fx]
    rows.append(me)
    cols.append(me)
    vals.append(np.full(nfree, 4.0))
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        qy, qx = fy + dy, fx + dx
        nb_free = free[qy, qx]
        rows.append(me[nb_free])
        cols.append(idx[qy[nb_free], qx[nb_free]])
        vals.append(np.full(int(nb_free.sum()), -1.0))
        nb_fixed = ~nb_free
        np.add.at(b, me[nb_fixed], vfix[qy[nb_fixed], qx[nb_fixed]])
    a = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nfree, nfree))

    try:
        sol, info = cg(a, b, rtol=rtol, maxiter=maxiter)
    except TypeError:       # older scipy spells it tol
        sol, info = cg(a, b, tol=rtol, maxiter=maxiter)
    res = float(np.linalg.norm(a @ sol - b) / max(np.linalg.norm(b), 1e-300))
    if info > 0 or res > 1e-8:
        raise RuntimeError(
            f"Poisson solve did not converge within {maxiter} iterations "
            f"(relative residual {res:.3e})")

    v = vfix.copy()
    v[free] = sol
    return PotentialGrid(values=v, x=x, y=y, node_label=node, labels=labels,
                         driven=driven, residual=res)


@dataclass
class MaxwellCapacitanceMatrix:
    labels: List[str]
    c: np.ndarray               # fF, symmetric
    asymmetry: float = 0.0      # relative, before symmetrization

    def validate(self, tol: float = 1e-9):
        m = self.c
        scale = float(np.max(np.abs(m)))
        if np.max(np.abs(m - m.T)) > tol * max(scale, 1e-300):
            raise RuntimeError("capacitance matrix asymmetric beyond tolerance")
        if np.any(np.diag(m) <= 0):
            raise RuntimeError("capacitance matrix diagonal must be positive")
        off = m - np.diag(np.diag(m))
        if np.max(off) > 1e-9 * scale:
            raise RuntimeError("capacitance matrix off-diagonals must be <= 0")
        if np.min(m.sum(axis=1)) < -1e-9 * scale:
            raise RuntimeError("capacitance matrix row sums must be >= 0")
        return self

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _induced_charges(g: PotentialGrid, eps_r: float) -> np.ndarray:
    """Gauss-law surface sums: flux of the field leaving each conductor,
    in fF per volt for the 1 um slab depth."""
    ny, nx = g.values.shape
    nlab = len(g.labels)
    sums = np.zeros(nlab)
    node = g.node_label
    v = g.values
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        src = np.zeros((ny, nx))
        sel = np.zeros((ny, nx), dtype=bool)
        yy = slice(max(dy, 0), ny + min(dy, 0))
        xx = slice(max(dx, 0), nx + min(dx, 0))
        yy0 = slice(max(-dy, 0), ny + min(-dy, 0))
        xx0 = slice(max(-dx, 0), nx + min(-dx, 0))
        # count faces whose neighbor lies outside this conductor
        sel[yy0, xx0] = (node[yy0, xx0] >= 0) & \
            (node[yy, xx] != node[yy0, xx0])
        src[yy0, xx0] = v[yy0, xx0] - v[yy, xx]
        for k in range(nlab):
            sums[k] += float(src[sel & (node == k)].sum())
    return sums * EPS0 * eps_r * _DEPTH_M * 1e15


def maxwell_capacitance(layout: ConductorLayout,
                        max_asymmetry: float = 0.01) -> MaxwellCapacitanceMatrix:
    """Column j holds the conductor charges with conductor j driven at 1 V;
    the result is symmetrized by averaging and sign-checked."""
    labels = layout.labels
    if len(labels) < 2:
        raise ValueError("maxwell_capacitance needs at least 2 conductors")
    cols = [_induced_charges(solve_poisson(layout, lab),
                             layout.relative_permittivity) for lab in labels]
    raw = np.column_stack(cols)
    scale = float(np.max(np.abs(raw)))
    asym = float(np.max(np.abs(raw - raw.T))) / max(scale, 1e-300)
    if asym > max_asymmetry:
        raise RuntimeError(
            f"extracted matrix asymmetry {asym:.3%} exceeds "
            f"{max_asymmetry:.0%}; discretization too coarse")
    m = MaxwellCapacitanceMatrix(labels=list(labels), c=0.5 * (raw + raw.T),
                                 asymmetry=asym)
    return m.validate(tol=1e-9)


def reduce_capacitance(c: MaxwellCapacitanceMatrix,
                       keep: Sequence[str]) -> MaxwellCapacitanceMatrix:
    """Schur complement eliminating every node not in `keep`; ground stays
    the implicit reference (row sums = residual capacitance to ground)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one conductor")
    for lab in keep:
        if lab not in c.labels:
            raise ValueError(f"kept label {lab!r} not in matrix")
    drop = [lab for lab in c.labels if lab not in keep]
    if not drop:
        return MaxwellCapacitanceMatrix(labels=keep,
                                        c=c.c.copy(), asymmetry=c.asymmetry)
    ki = [c.labels.index(lab) for lab in keep]
    di = [c.labels.index(lab) for lab in drop]
    ckk = c.c[np.ix_(ki, ki)]
    ckd = c.c[np.ix_(ki, di)]
    cdd = c.c[np.ix_(di, di)]
    try:
        red = ckk - ckd @ np.linalg.solve(cdd, ckd.T)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eliminated block is singular: {exc}") from exc
    red = 0.5 * (red + red.T)
    return MaxwellCapacitanceMatrix(labels=keep, c=red,
                                    asymmetry=c.asymmetry).validate()


def differential_capacitance(c: MaxwellCapacitanceMatrix,
                             a: Optional[str] = None,
                             b: Optional[str] = None) -> float:
    """Effective capacitance of the differential (qubit) mode between two
    nodes of a reduced matrix: the direct cross capacitance plus the series
    combination of the two capacitances to ground."""
    if a is None or b is None:
        if len(c.labels) != 2:
            raise ValueError("node pair required unless the matrix is 2x2")
        a, b = c.labels
    ia, ib = c.index(a), c.index(b)
    cross = -float(c.c[ia, ib])
    ga = float(c.c[ia].sum())
    gb = float(c.c[ib].sum())
    if ga + gb > 0:
        cross += ga * gb / (ga + gb)
    return cross


def effective_charging_energy(c_eff_ff: float) -> float:
    """E_C = e^2 / 2C in GHz for C in fF."""
    if c_eff_ff <= 0:
        raise ValueError("capacitance must be positive")
    return E_CHARGE ** 2 / (2.0 * c_eff_ff * 1e-15) / H_PLANCK / 1e9


def capacitance_for_charging_energy(e_c_ghz: float) -> float:
    """Inverse of effective_charging_energy: fF giving the requested E_C."""
    if e_c_ghz <= 0:
        raise ValueError("charging energy must be positive")
    return E_CHARGE ** 2 / (2.0 * e_c_ghz * 1e9 * H_PLANCK) * 1e15


def junction_current(phi: float, i_c: float) -> float:
    """Supercurrent I_c sin(2 pi phi) for phi in flux-quantum units (nA)."""
    return i_c * math.sin(2.0 * math.pi * phi)


@dataclass(frozen=True)
class JunctionBranch:
    """Josephson branch; any one of l_j (nH), e_j (GHz), i_c (nA) determines
    the others via E_J = phi0^2 / L_J = I_c phi0 (reduced flux quantum)."""
    l_j: Optional[float] = None
    e_j: Optional[float] = None
    i_c: Optional[float] = None
    _resolved: Tuple[float, float, float] = field(default=None, repr=False,
                                                  compare=False)

    def __post_init__(self):
        candidates = []
        if self.l_j is not None:
            if self.l_j <= 0:
                raise ValueError("l_j must be positive")
            candidates.append(PHI0_REDUCED ** 2 / (self.l_j * 1e-9)
                              / H_PLANCK / 1e9)
        if self.i_c is not None:
            if self.i_c <= 0:
                raise ValueError("i_c must be positive")
            candidates.append(self.i_c * 1e-9 * PHI0_REDUCED / H_PLANCK / 1e9)
        if self.e_j is not None:
            if self.e_j <= 0:
                raise ValueError("e_j must be positive")
            candidates.append(self.e_j)
        if not candidates:
            raise ValueError("JunctionBranch needs one of l_j, e_j, i_c")
        e_j = candidates[0]
        for other in candidates[1:]:
            if abs(other - e_j) > 1e-9 * e_j:
                raise ValueError(
                    f"inconsistent junction parameters: E_J readings "
                    f"{e_j:.12g} and {other:.12g} GHz differ beyond 1e-9")
        e_j_joule = e_j * 1e9 * H_PLANCK
        lj_nh = PHI0_REDUCED ** 2 / e_j_joule * 1e9
        ic_na = e_j_joule / PHI0_REDUCED * 1e9
        object.__setattr__(self, "_resolved", (lj_nh, e_j, ic_na))

    @property
    def inductance_nh(self) -> float:
        return self._resolved[0]

    @property
    def josephson_energy_ghz(self) -> float:
        return self._resolved[1]

    @property
    def critical_current_na(self) -> float:
        return self._resolved[2]


def exact_josephson_energy(phi: float, e_j: float) -> float:
    """E_J (1 - cos phi) for the reduced phase (GHz)."""
    return e_j * (1.0 - math.cos(phi))


def josephson_energy_series(phi: float, e_j: float, order: int) -> float:
    """Taylor expansion of E_J (1 - cos phi) truncated at the given order."""
    if order not in (2, 4, 6):
        raise ValueError(f"order must be one of 2, 4, 6, got {order}")
    total = phi ** 2 / 2.0
    if order >= 4:
        total -= phi ** 4 / 24.0
    if order >= 6:
        total += phi ** 6 / 720.0
    return e_j * total
