"""Balanced linear quadtree meshes on the unit square (1D line meshes too).

Leaves are stored in Morton (Z) order with integer anchors on the lattice of
the deepest admissible level. Refinement and coarsening act one level at a
time; 2:1 edge balance is enforced by promoting extra leaves during
refinement and by vetoing merges during coarsening. Node enumeration builds
the continuous-Galerkin numbering for a given degree, including the
hanging-node constraint table on coarse/fine interfaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np
import scipy.sparse as sp

from .errors import MeshStateError
from .quadrature import element_nodal_basis

__all__ = [
    "MAX_LEVEL",
    "Flag",
    "Stage",
    "AdaptPlan",
    "MeshTopology",
    "NodeNumbering",
    "RefineRecord",
    "CoarsenRecord",
    "build_uniform",
    "sibling_families",
    "execute_refine",
    "execute_coarsen",
    "enumerate_nodes",
    "locate",
]

MAX_LEVEL = 20
_DOMAIN = 1 << MAX_LEVEL  # lattice extent of [0, 1] per axis


class Flag(IntEnum):
    NO_CHANGE = 0
    REFINE = 1
    COARSEN = 2


class Stage(Enum):
    REFINE_STAGE = "refine"
    COARSEN_STAGE = "coarsen"


@dataclass
class AdaptPlan:
    """Per-leaf flag assignment for one adaptation stage.

    The two stages are mutually exclusive: a refine-stage plan may not carry
    COARSEN flags and vice versa.
    """

    stage: Stage
    flags: np.ndarray

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=np.int8)
        banned = Flag.COARSEN if self.stage is Stage.REFINE_STAGE else Flag.REFINE
        if np.any(self.flags == banned):
            raise ValueError(f"{banned.name} flag not allowed in {self.stage.name}")


def _morton_keys(anchors: np.ndarray, dim: int) -> np.ndarray:
    """Interleave anchor bits (bit0 = x) into sortable Z-order keys."""
    if dim == 1:
        return anchors[:, 0].astype(np.uint64)

    def spread(v):
        v = v.astype(np.uint64)
        v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
        v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
        v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
        v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
        return v

    return spread(anchors[:, 0]) | (spread(anchors[:, 1]) << np.uint64(1))


class MeshTopology:
    """Leaves of one adapted mesh, immutable once constructed.

    ``levels`` and ``anchors`` are parallel arrays sorted by Morton key;
    anchors are integer lattice coordinates at MAX_LEVEL resolution. Node
    numberings for each polynomial degree are built lazily and cached, as are
    assembled operators (see fem.py).
    """

    def __init__(self, dim: int, levels: np.ndarray, anchors: np.ndarray):
        if dim not in (1, 2):
            raise ValueError(f"mesh dim must be 1 or 2, got {dim}")
        self.dim = dim
        self.levels = np.asarray(levels, dtype=np.int32)
        self.anchors = np.asarray(anchors, dtype=np.int64).reshape(len(levels), dim)
        self._lookup: dict | None = None
        self._numberings: dict[int, "NodeNumbering"] = {}
        self._balanced: bool | None = None

    @property
    def n_leaves(self) -> int:
        return len(self.levels)

    @property
    def leaf_sizes(self) -> np.ndarray:
        """Edge length of each leaf in lattice units."""
        return (np.int64(1) << (MAX_LEVEL - self.levels)).astype(np.int64)

    @property
    def leaf_sizes_physical(self) -> np.ndarray:
        return np.ldexp(1.0, -self.levels)

    def leaf_lookup(self) -> dict:
        """(level, *anchor) -> leaf index."""
        if self._lookup is None:
            if self.dim == 1:
                self._lookup = {
                    (int(l), int(a)): i
                    for i, (l, a) in enumerate(zip(self.levels, self.anchors[:, 0]))
                }
            else:
                self._lookup = {
                    (int(l), int(ax), int(ay)): i
                    for i, (l, (ax, ay)) in enumerate(zip(self.levels, self.anchors))
                }
        return self._lookup

    def _find_containing(self, level: int, anchor: tuple) -> int | None:
        """Walk up from ``level`` to the root looking for the covering leaf."""
        lookup = self.leaf_lookup()
        for lv in range(level, -1, -1):
            mask = ~((1 << (MAX_LEVEL - lv)) - 1)
            key = (lv, *(a & mask for a in anchor))
            idx = lookup.get(key)
            if idx is not None:
                return idx
        return None

    def locate(self, point) -> int:
        """Leaf containing ``point``; face ties go to the smaller anchor."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector, got shape {point.shape}")
        if np.any(point < 0.0) or np.any(point > 1.0):
            raise ValueError(f"point {point} outside the unit domain")
        lattice = []
        for x in point:
            v = x * _DOMAIN
            i = int(np.floor(v))
            if i == v and i > 0:
                i -= 1  # tie toward the lexicographically smaller anchor
            lattice.append(min(i, _DOMAIN - 1))
        idx = self._find_containing(int(self.levels.max()), tuple(lattice))
        if idx is None:  # pragma: no cover - leaves tile the domain
            raise MeshStateError(f"no leaf contains {point}")
        return idx

    def is_balanced(self) -> bool:
        """2:1 edge balance: adjacent leaves differ by at most one level."""
        if self._balanced is None:
            self._balanced = self._check_balance()
        return self._balanced

    def _check_balance(self) -> bool:
        if self.dim == 1:
            levels, anchors, sizes = self.levels, self.anchors[:, 0], self.leaf_sizes
            for i in range(self.n_leaves):
                for na in (int(anchors[i]) - int(sizes[i]), int(anchors[i]) + int(sizes[i])):
                    if not 0 <= na < _DOMAIN:
                        continue
                    j = self._find_containing(int(levels[i]), (na,))
                    if j is not None and levels[i] - self.levels[j] >= 2:
                        return False
            return True
        for i in range(self.n_leaves):
            li = int(self.levels[i])
            h = 1 << (MAX_LEVEL - li)
            ax, ay = (int(v) for v in self.anchors[i])
            for na in ((ax - h, ay), (ax + h, ay), (ax, ay - h), (ax, ay + h)):
                if not (0 <= na[0] < _DOMAIN and 0 <= na[1] < _DOMAIN):
                    continue
                j = self._find_containing(li, na)
                if j is not None and li - self.levels[j] >= 2:
                    return False
        return True


@dataclass
class RefineRecord:
    """Maps each leaf of the refined mesh back to its source leaf.

    ``child_id`` is the Morton child index for newly created leaves and -1
    for leaves copied unchanged.
    """

    mesh_old: MeshTopology
    mesh_new: MeshTopology
    source_leaf: np.ndarray
    child_id: np.ndarray


@dataclass
class CoarsenRecord:
    """Old-mesh provenance of every leaf of the coarsened mesh.

    ``copy_source[j]`` is the old leaf index for unchanged leaves and -1 for
    merged parents; ``merges`` lists (new_leaf_index, old_child_indices) with
    children in Morton order.
    """

    mesh_old: MeshTopology
    mesh_new: MeshTopology
    copy_source: np.ndarray
    merges: list[tuple[int, np.ndarray]] = field(default_factory=list)


def build_uniform(dim: int, level: int) -> MeshTopology:
    """Uniform mesh of 2^(dim*level) leaves tiling the unit domain."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {level}")
    n = 1 << level
    h = 1 << (MAX_LEVEL - level)
    if dim == 1:
        anchors = (np.arange(n, dtype=np.int64) * h)[:, None]
    else:
        ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        anchors = np.column_stack([ix.ravel(), iy.ravel()]).astype(np.int64) * h
    levels = np.full(len(anchors), level, dtype=np.int32)
    order = np.argsort(_morton_keys(anchors, dim), kind="stable")
    return MeshTopology(dim, levels[order], anchors[order])


def _child_offsets(dim: int, half: int) -> np.ndarray:
    """Anchor offsets of the 2^dim children in Morton order."""
    if dim == 1:
        return np.array([[0], [half]], dtype=np.int64)
    return np.array([[0, 0], [half, 0], [0, half], [half, half]], dtype=np.int64)


def execute_refine(mesh: MeshTopology, plan: AdaptPlan) -> tuple[MeshTopology, RefineRecord]:
    """Split flagged leaves, then promote neighbours until 2:1 balance holds.

    Returns the original mesh object (with an identity record) when nothing
    is flagged, so downstream caches survive no-op cycles.
    """
    if plan.stage is not Stage.REFINE_STAGE:
        raise ValueError("execute_refine needs a REFINE_STAGE plan")
    if len(plan.flags) != mesh.n_leaves:
        raise ValueError("plan/mesh size mismatch")
    flags = plan.flags == Flag.REFINE
    if not flags.any():
        rec = RefineRecord(
            mesh,
            mesh,
            np.arange(mesh.n_leaves),
            np.full(mesh.n_leaves, -1, dtype=np.int64),
        )
        return mesh, rec

    levels = mesh.levels
    anchors = mesh.anchors
    sizes = mesh.leaf_sizes
    dim = mesh.dim
    if np.any(levels[flags] >= MAX_LEVEL):
        raise ValueError("refinement would exceed MAX_LEVEL")

    # Balance closure: flagging a leaf can force coarser edge-neighbours to
    # refine as well. Effective levels are level + flag; iterate to fixpoint.
    changed = True
    while changed:
        changed = False
        eff = levels + flags
        for i in range(mesh.n_leaves):
            li = int(levels[i])
            h = int(sizes[i])
            if dim == 1:
                neighbours = ((int(anchors[i, 0]) - h,), (int(anchors[i, 0]) + h,))
            else:
                ax, ay = (int(v) for v in anchors[i])
                neighbours = ((ax - h, ay), (ax + h, ay), (ax, ay - h), (ax, ay + h))
            for na in neighbours:
                if any(not 0 <= v < _DOMAIN for v in na):
                    continue
                j = mesh._find_containing(li, na)
                if j is not None and eff[i] - eff[j] >= 2:
                    flags[j] = True
                    changed = True

    n_new = mesh.n_leaves + int(flags.sum()) * (2**dim - 1)
    new_levels = np.empty(n_new, dtype=np.int32)
    new_anchors = np.empty((n_new, dim), dtype=np.int64)
    src = np.empty(n_new, dtype=np.int64)
    cid = np.empty(n_new, dtype=np.int64)
    pos = 0
    for i in range(mesh.n_leaves):
        if flags[i]:
            half = int(sizes[i]) >> 1
            offs = _child_offsets(dim, half)
            for c in range(2**dim):
                new_levels[pos] = levels[i] + 1
                new_anchors[pos] = anchors[i] + offs[c]
                src[pos] = i
                cid[pos] = c
                pos += 1
        else:
            new_levels[pos] = levels[i]
            new_anchors[pos] = anchors[i]
            src[pos] = i
            cid[pos] = -1
            pos += 1
    new_mesh = MeshTopology(dim, new_levels, new_anchors)
    return new_mesh, RefineRecord(mesh, new_mesh, src, cid)


def sibling_families(mesh: MeshTopology, eligible: np.ndarray) -> list[tuple[int, int, tuple]]:
    """Complete sibling sets whose members are all marked eligible.

    Returns (first_child_index, parent_level, parent_anchor) triples; the
    2^dim siblings of a fully-present family are contiguous in Morton order.
    """
    dim = mesh.dim
    nchild = 2**dim
    levels = mesh.levels
    anchors = mesh.anchors
    families = []
    i = 0
    n = mesh.n_leaves
    while i <= n - nchild:
        li = int(levels[i])
        if li == 0 or not eligible[i]:
            i += 1
            continue
        h = 1 << (MAX_LEVEL - li)
        parent_mask = ~((h << 1) - 1)
        anchor = tuple(int(a) for a in anchors[i])
        if any(a & ~parent_mask for a in anchor):
            i += 1  # not the Morton-first child of its parent
            continue
        block_levels = levels[i : i + nchild]
        if not np.all(block_levels == li):
            i += 1
            continue
        offs = _child_offsets(dim, h)
        expected = np.asarray(anchor, dtype=np.int64)[None, :] + offs
        if not np.array_equal(mesh.anchors[i : i + nchild], expected):
            i += 1
            continue
        if not eligible[i : i + nchild].all():
            i += 1
            continue
        families.append((i, li - 1, anchor))
        i += nchild
    return families


def execute_coarsen(mesh: MeshTopology, plan: AdaptPlan) -> tuple[MeshTopology, CoarsenRecord]:
    """Merge flagged sibling families, vetoing merges that would break 2:1.

    Incomplete or mixed-level families are demoted to NO_CHANGE. A candidate
    merge is vetoed when an edge-adjacent region would end up two levels
    finer than the new parent; vetoes cascade until a fixpoint.
    """
    if plan.stage is not Stage.COARSEN_STAGE:
        raise ValueError("execute_coarsen needs a COARSEN_STAGE plan")
    if len(plan.flags) != mesh.n_leaves:
        raise ValueError("plan/mesh size mismatch")
    coarsen = plan.flags == Flag.COARSEN
    families = sibling_families(mesh, coarsen) if coarsen.any() else []
    if not families:
        rec = CoarsenRecord(mesh, mesh, np.arange(mesh.n_leaves), [])
        return mesh, rec

    dim = mesh.dim
    lookup = mesh.leaf_lookup()
    candidates = {(lv, anchor): start for start, lv, anchor in families}

    def merge_survives(parent_level: int, parent_anchor: tuple) -> bool:
        """False when a neighbour would stay two levels finer than the parent."""
        hp = 1 << (MAX_LEVEL - parent_level)
        hc = hp >> 1
        if dim == 1:
            probes = [((parent_anchor[0] - hc,),), ((parent_anchor[0] + hp,),)]
        else:
            ax, ay = parent_anchor
            probes = [
                tuple((ax - hc, ay + k * hc) for k in range(2)),  # left edge
                tuple((ax + hp, ay + k * hc) for k in range(2)),  # right edge
                tuple((ax + k * hc, ay - hc) for k in range(2)),  # bottom edge
                tuple((ax + k * hc, ay + hp) for k in range(2)),  # top edge
            ]
        fine_level = parent_level + 1
        mask = ~(hc - 1)
        for edge in probes:
            for cell in edge:
                if any(not 0 <= v < _DOMAIN for v in cell):
                    continue
                cell = tuple(v & mask for v in cell)
                if (fine_level, *cell) in lookup:
                    continue  # neighbour at parent_level+1 survives or merges: fine
                if mesh._find_containing(parent_level, cell) is not None:
                    continue  # neighbour is at parent level or coarser
                # Region is finer than parent_level+1; acceptable only if it
                # merges up to parent_level+1 itself.
                if (fine_level, cell) not in candidates:
                    return False
        return True

    removed = True
    while removed:
        removed = False
        for key in list(candidates):
            if not merge_survives(*key):
                del candidates[key]
                removed = True

    merging = np.zeros(mesh.n_leaves, dtype=bool)
    first_child = {}
    nchild = 2**dim
    for (lv, anchor), start in candidates.items():
        merging[start : start + nchild] = True
        first_child[start] = (lv, anchor)

    new_levels = []
    new_anchors = []
    copy_source = []
    merges = []
    i = 0
    while i < mesh.n_leaves:
        if merging[i]:
            lv, anchor = first_child[i]
            merges.append((len(new_levels), np.arange(i, i + nchild)))
            new_levels.append(lv)
            new_anchors.append(anchor)
            copy_source.append(-1)
            i += nchild
        else:
            new_levels.append(int(mesh.levels[i]))
            new_anchors.append(tuple(int(a) for a in mesh.anchors[i]))
            copy_source.append(i)
            i += 1
    new_mesh = MeshTopology(
        mesh.dim,
        np.asarray(new_levels, dtype=np.int32),
        np.asarray(new_anchors, dtype=np.int64).reshape(-1, dim),
    )
    rec = CoarsenRecord(mesh, new_mesh, np.asarray(copy_source, dtype=np.int64), merges)
    return new_mesh, rec


@dataclass
class NodeNumbering:
    """CG node numbering of one mesh at one polynomial degree.

    Node keys are integer lattice coordinates at twice MAX_LEVEL resolution
    (so Q2 edge midpoints are integers), encoded into a single sorted int64
    per node. Hanging nodes carry no degree of freedom; their values are the
    stored master/weight combinations. ``constraint_matrix`` maps independent
    dof values to values at all geometric nodes.
    """

    p: int
    node_keys: np.ndarray
    node_coords: np.ndarray
    elem_nodes: np.ndarray
    hanging: dict[int, tuple[tuple[int, ...], tuple[float, ...]]]
    dof_of_node: np.ndarray
    n_dofs: int
    constraint_matrix: sp.csr_matrix
    cache: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.node_keys)

    def node_values(self, dof_values: np.ndarray) -> np.ndarray:
        """Values at every geometric node, hanging ones constraint-resolved."""
        return self.constraint_matrix @ dof_values

    def independent_coords(self) -> np.ndarray:
        return self.node_coords[self.dof_of_node >= 0]


_KEY_SHIFT = np.int64(32)


def _encode_keys(kx: np.ndarray, ky: np.ndarray | None) -> np.ndarray:
    if ky is None:
        return kx.astype(np.int64)
    return (kx.astype(np.int64) << _KEY_SHIFT) | ky.astype(np.int64)


def enumerate_nodes(mesh: MeshTopology, p: int) -> NodeNumbering:
    """Build (and cache) the degree-p node numbering with hanging constraints."""
    if p not in (1, 2):
        raise ValueError(f"supported degrees are 1 and 2, got {p}")
    cached = mesh._numberings.get(p)
    if cached is not None:
        return cached
    if not mesh.is_balanced():
        raise MeshStateError("node enumeration requires a 2:1 balanced mesh")

    dim = mesh.dim
    n_loc = (p + 1) ** dim
    sizes = mesh.leaf_sizes
    # Node lattice at twice the anchor resolution keeps Q2 midpoints integral.
    steps = (2 * sizes) // p  # distance between nodes along one axis
    idx_1d = np.arange(p + 1, dtype=np.int64)
    if dim == 1:
        kx = 2 * mesh.anchors[:, 0:1] + idx_1d[None, :] * steps[:, None]
        keys = _encode_keys(kx, None).reshape(-1)
    else:
        ix = np.tile(idx_1d, p + 1)  # lexicographic: x fastest
        iy = np.repeat(idx_1d, p + 1)
        kx = 2 * mesh.anchors[:, 0:1] + ix[None, :] * steps[:, None]
        ky = 2 * mesh.anchors[:, 1:2] + iy[None, :] * steps[:, None]
        keys = _encode_keys(kx, ky).reshape(-1)

    node_keys, inverse = np.unique(keys, return_inverse=True)
    elem_nodes = inverse.reshape(mesh.n_leaves, n_loc).astype(np.int64)
    if dim == 1:
        coords = (node_keys.astype(float) / (2.0 * _DOMAIN))[:, None]
    else:
        coords = np.column_stack(
            [
                (node_keys >> _KEY_SHIFT).astype(float) / (2.0 * _DOMAIN),
                (node_keys & np.int64((1 << 32) - 1)).astype(float) / (2.0 * _DOMAIN),
            ]
        )

    hanging = _hanging_constraints(mesh, p, node_keys) if dim == 2 else {}

    dof_of_node = np.full(len(node_keys), -1, dtype=np.int64)
    independent = np.setdiff1d(
        np.arange(len(node_keys)), np.fromiter(hanging.keys(), dtype=np.int64, count=len(hanging))
    )
    dof_of_node[independent] = np.arange(len(independent))

    rows, cols, vals = [], [], []
    rows.append(independent)
    cols.append(dof_of_node[independent])
    vals.append(np.ones(len(independent)))
    for node, (masters, weights) in hanging.items():
        for m, w in zip(masters, weights):
            rows.append(np.array([node]))
            cols.append(np.array([dof_of_node[m]]))
            vals.append(np.array([w]))
    tmat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(node_keys), len(independent)),
    )
    numbering = NodeNumbering(
        p=p,
        node_keys=node_keys,
        node_coords=coords,
        elem_nodes=elem_nodes,
        hanging=hanging,
        dof_of_node=dof_of_node,
        n_dofs=len(independent),
        constraint_matrix=tmat,
    )
    mesh._numberings[p] = numbering
    return numbering


def _hanging_constraints(mesh: MeshTopology, p: int, node_keys: np.ndarray) -> dict:
    """Detect hanging nodes on coarse/fine edges and build their constraints.

    A fine leaf's edge node that is not also a node of a coarser edge
    neighbour is constrained to that neighbour's edge nodes with the 1D
    degree-p interpolation weights at its parametric location.
    """
    basis = element_nodal_basis(p)
    lookup = mesh.leaf_lookup()
    levels = mesh.levels
    anchors = mesh.anchors
    sizes = mesh.leaf_sizes
    raw: dict[int, tuple[tuple[int, ...], tuple[float, ...]]] = {}

    def node_id(kx: int, ky: int) -> int:
        key = (kx << 32) | ky
        pos = np.searchsorted(node_keys, key)
        assert pos < len(node_keys) and node_keys[pos] == key
        return int(pos)

    for i in range(mesh.n_leaves):
        li = int(levels[i])
        if li == 0:
            continue
        h = int(sizes[i])
        ax, ay = (int(v) for v in anchors[i])
        # (axis, side): axis 0 = x-normal edge, side 0 = low, 1 = high
        for axis, side in ((0, 0), (0, 1), (1, 0), (1, 1)):
            if axis == 0:
                na = (ax - h if side == 0 else ax + h, ay)
            else:
                na = (ax, ay - h if side == 0 else ay + h)
            if not (0 <= na[0] < _DOMAIN and 0 <= na[1] < _DOMAIN):
                continue
            if (li, *na) in lookup:
                continue  # conforming neighbour
            cmask = ~((h << 1) - 1)
            coarse_key = (li - 1, na[0] & cmask, na[1] & cmask)
            j = lookup.get(coarse_key)
            if j is None:
                continue  # finer neighbours hang on us, handled from their side
            hn = 2 * h
            cax, cay = (int(v) for v in anchors[j])
            # Shared edge plane in node-lattice units (2x anchor resolution).
            if axis == 0:
                plane = 2 * (ax + (h if side == 1 else 0))
                coarse_lo = 2 * cay
            else:
                plane = 2 * (ay + (h if side == 1 else 0))
                coarse_lo = 2 * cax
            master_pos = [coarse_lo + k * (2 * hn) // p for k in range(p + 1)]
            if axis == 0:
                masters = tuple(node_id(plane, mp) for mp in master_pos)
            else:
                masters = tuple(node_id(mp, plane) for mp in master_pos)
            my_lo = 2 * (ay if axis == 0 else ax)
            for k in range(p + 1):
                pos = my_lo + k * (2 * h) // p
                if pos in master_pos:
                    continue
                node = node_id(plane, pos) if axis == 0 else node_id(pos, plane)
                xi = 2.0 * (pos - coarse_lo) / (2.0 * hn) - 1.0
                weights = basis.values_at(xi)[:, 0]
                raw[node] = (masters, tuple(float(w) for w in weights))

    # Fold chained constraints so masters are always independent nodes.
    resolved: dict[int, tuple[tuple[int, ...], tuple[float, ...]]] = {}
    for node, (masters, weights) in raw.items():
        acc: dict[int, float] = {}
        stack = list(zip(masters, weights))
        depth = 0
        while stack:
            m, w = stack.pop()
            if m in raw:
                depth += 1
                if depth > 4 * len(raw) + 8:  # pragma: no cover
                    raise MeshStateError("cyclic hanging-node constraints")
                mm, mw = raw[m]
                stack.extend((a, w * b) for a, b in zip(mm, mw))
            else:
                acc[m] = acc.get(m, 0.0) + w
        items = sorted(acc.items())
        resolved[node] = (
            tuple(k for k, _ in items),
            tuple(v for _, v in items),
        )
    return resolved


def locate(mesh: MeshTopology, point) -> int:
    """Module-level alias for :meth:`MeshTopology.locate`."""
    return mesh.locate(point)
