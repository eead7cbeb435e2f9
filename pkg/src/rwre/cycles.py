"""Closed lattice cycles and the models built from them.

A model is a finite list of closed cycles on Z^d, each carrying a weight
law.  The walk at a site x moves along the edges of every translated cycle
that covers x, with probability proportional to the translate's weight.
Weights on distinct translates are independent unless two cycles are
declared as a coupled pair, in which case a single Bernoulli draw per
translate splits mass between them (W_i + W_j = 1).

Cycles are anchored tuples of points: translating every point of a cycle by
the same vector yields the same walk, but anchored coordinates do appear in
one diagnostic bound, so cycles are kept exactly as given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError, ParameterError

Point = tuple[int, ...]


@dataclass(frozen=True)
class Cycle:
    """A closed path (z_0, ..., z_n) with z_n = z_0 and distinct z_0..z_{n-1}.

    length is the number of edges n (>= 1); a length-1 cycle is a single
    loop edge (z_0, z_0) and carries a lazy stay-put step.
    """

    points: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = self.points
        if len(pts) < 2:
            raise ModelError("a cycle needs at least two listed points (start and closing point)")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise ModelError(f"cycle points mix dimensions: {sorted(dims)}")
        if pts[0] != pts[-1]:
            raise ModelError(f"cycle does not close: starts {pts[0]}, ends {pts[-1]}")
        interior = pts[:-1]
        if len(set(interior)) != len(interior):
            raise ModelError(f"cycle revisits a point before closing: {pts}")

    @property
    def dimension(self) -> int:
        return len(self.points[0])

    @property
    def length(self) -> int:
        return len(self.points) - 1

    def edges(self) -> list[tuple[Point, Point]]:
        return [(self.points[j], self.points[j + 1]) for j in range(self.length)]

    def displacements(self) -> list[Point]:
        """Edge steps z_{j+1} - z_j in traversal order."""
        out = []
        for a, b in self.edges():
            out.append(tuple(int(bb - aa) for aa, bb in zip(a, b)))
        return out

    def diameter_inf(self) -> int:
        pts = np.array(self.points[:-1], dtype=np.int64)
        if len(pts) == 1:
            return 0
        diff = pts[:, None, :] - pts[None, :, :]
        return int(np.abs(diff).max())

    def reversed_(self) -> "Cycle":
        """The same closed path traversed backwards."""
        return Cycle(points=tuple(reversed(self.points)))

    def anchored_norm_sq_sum(self) -> int:
        """Sum of |z_j|_2^2 over j = 1..n (closing point included once).

        Depends on the anchoring of the cycle, not just its shape; used by
        the drift energy bound.
        """
        return int(sum(sum(c * c for c in p) for p in self.points[1:]))


@dataclass(frozen=True)
class WeightLaw:
    """Marginal law of one cycle's weight field.

    kind: "constant" (value), "uniform" (lo, hi), or "bernoulli" (p, values
    in {0, 1}).  Coupled cycles must both use a bernoulli law with the same
    p; the pair is then driven by a single draw per translate.
    """

    kind: str
    value: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    p: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "uniform", "bernoulli"):
            raise ModelError(f"unknown weight law kind {self.kind!r}")
        lo, hi = self.bounds()
        if lo < 0:
            raise ModelError(f"weight law allows negative weights: bounds ({lo}, {hi})")
        if hi < lo:
            raise ModelError(f"weight law has empty support: bounds ({lo}, {hi})")
        if self.kind == "bernoulli" and not (0.0 <= self.p <= 1.0):
            raise ModelError(f"bernoulli parameter {self.p} outside [0, 1]")

    def bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return (self.value, self.value)
        if self.kind == "uniform":
            return (self.lo, self.hi)
        return (0.0, 1.0)

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Transform uniforms on [0,1) into weights."""
        if self.kind == "constant":
            return np.full_like(u, self.value)
        if self.kind == "uniform":
            return self.lo + (self.hi - self.lo) * u
        return (u < self.p).astype(np.float64)


@dataclass(frozen=True)
class CycleModel:
    """A list of cycles, their weight laws, and optional coupled pairs.

    couplings: tuples (i, j) of cycle indices whose weights satisfy
    W_i + W_j = 1 pointwise (one Bernoulli draw per translate assigns the
    unit of mass to cycle i with probability p).
    """

    name: str
    cycles: tuple[Cycle, ...]
    laws: tuple[WeightLaw, ...]
    couplings: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not self.cycles:
            raise ModelError("a model needs at least one cycle")
        if len(self.laws) != len(self.cycles):
            raise ModelError(
                f"{len(self.cycles)} cycles but {len(self.laws)} weight laws"
            )
        dims = {c.dimension for c in self.cycles}
        if len(dims) != 1:
            raise ModelError(f"cycles mix dimensions: {sorted(dims)}")
        seen: set[int] = set()
        for pair in self.couplings:
            if len(pair) != 2:
                raise ModelError(f"coupling {pair} must name exactly two cycles")
            i, j = pair
            for k in (i, j):
                if not 0 <= k < len(self.cycles):
                    raise ModelError(f"coupling {pair} names a missing cycle {k}")
                if k in seen:
                    raise ModelError(f"cycle {k} appears in two couplings")
                seen.add(k)
            if i == j:
                raise ModelError(f"coupling {pair} pairs a cycle with itself")
            for k in (i, j):
                if self.laws[k].kind != "bernoulli":
                    raise ModelError(
                        f"coupled cycle {k} must carry a bernoulli law, got {self.laws[k].kind!r}"
                    )
            if self.laws[i].p != self.laws[j].p:
                raise ModelError(f"coupled pair {pair} disagrees on p")

    @property
    def dimension(self) -> int:
        return self.cycles[0].dimension

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    def max_cycle_length(self) -> int:
        return max(c.length for c in self.cycles)

    def max_diameter_inf(self) -> int:
        return max(c.diameter_inf() for c in self.cycles)

    def coupling_partner(self, i: int) -> int | None:
        for a, b in self.couplings:
            if i == a:
                return b
            if i == b:
                return a
        return None

    def range_set(self) -> tuple[np.ndarray, int]:
        """All possible steps and their max sup-norm B.

        Returns (steps, B) with steps a (k, d) int array in lexicographic
        order.  The lexicographic order is the fixed support ordering used
        everywhere downstream (kernel columns, inverse-CDF sampling).
        """
        steps = sorted({z for c in self.cycles for z in c.displacements()})
        arr = np.array(steps, dtype=np.int64)
        b = int(np.abs(arr).max())
        return arr, b

    def reversed_(self) -> "CycleModel":
        """Same cycles traversed backwards; laws and couplings unchanged."""
        return CycleModel(
            name=self.name + "_reversed",
            cycles=tuple(c.reversed_() for c in self.cycles),
            laws=self.laws,
            couplings=self.couplings,
        )

    def weight_bounds(self) -> tuple[float, float]:
        los, his = zip(*(law.bounds() for law in self.laws))
        return (min(los), max(his))

    def mass_bounds(self) -> tuple[float, float]:
        """A priori bounds on the total mass M from the declared weight bounds.

        An independent cycle with n points contributes (n * lo, n * hi).  A
        coupled pair shares one unit of weight per translate, so a translate
        covering a site through both cycles contributes exactly 1, while a
        translate covering it through only one cycle contributes 0 or 1;
        hence the pair contributes between the intersection and the union
        size of the two cycles' point sets.
        """
        lo_total = 0.0
        hi_total = 0.0
        done: set[int] = set()
        for i, cyc in enumerate(self.cycles):
            if i in done:
                continue
            j = self.coupling_partner(i)
            if j is None:
                lo, hi = self.laws[i].bounds()
                lo_total += cyc.length * lo
                hi_total += cyc.length * hi
            else:
                done.add(j)
                pts_i = set(cyc.points[:-1])
                pts_j = set(self.cycles[j].points[:-1])
                lo_total += len(pts_i & pts_j)
                hi_total += len(pts_i | pts_j)
        return (lo_total, hi_total)


def _cycle(*pts: Point) -> Cycle:
    return Cycle(points=tuple(tuple(int(c) for c in p) for p in pts))


def random_conductance(dimension: int = 2, lo: float = 1.0, hi: float = 1.0) -> CycleModel:
    """Nearest-neighbour edge weights: one two-point cycle per axis.

    With lo == hi the environment is deterministic (simple random walk up
    to normalization); with 0 < lo < hi it is the classical uniformly
    elliptic random conductance model, and the walk is reversible.
    """
    if lo <= 0:
        raise ModelError("conductance lower bound must be positive")
    cycles = []
    for axis in range(dimension):
        e = tuple(1 if k == axis else 0 for k in range(dimension))
        origin = tuple(0 for _ in range(dimension))
        cycles.append(_cycle(origin, e, origin))
    law = WeightLaw(kind="constant", value=lo) if lo == hi else WeightLaw(kind="uniform", lo=lo, hi=hi)
    return CycleModel(
        name="random_conductance",
        cycles=tuple(cycles),
        laws=tuple(law for _ in cycles),
    )


def uniformly_elliptic(lo: float = 0.5, hi: float = 1.5) -> CycleModel:
    """Two-dimensional non-reversible model with weights bounded away from 0.

    Axis edge cycles plus one triangle; every step in the range has weight
    at least lo on some covering translate, so all step probabilities are
    uniformly positive.
    """
    if not 0 < lo <= hi:
        raise ModelError("uniformly elliptic bounds need 0 < lo <= hi")
    law = WeightLaw(kind="constant", value=lo) if lo == hi else WeightLaw(kind="uniform", lo=lo, hi=hi)
    cycles = (
        _cycle((0, 0), (1, 0), (0, 0)),
        _cycle((0, 0), (0, 1), (0, 0)),
        _cycle((0, 0), (1, 0), (1, 1), (0, 0)),
    )
    return CycleModel(
        name="uniformly_elliptic",
        cycles=cycles,
        laws=tuple(law for _ in cycles),
    )


def square_triangle(p: float = 0.5) -> CycleModel:
    """Each plaquette carries either a unit square or a unit triangle.

    The coupled pair keeps W_square + W_triangle = 1, so the mass stays in
    [3, 4] even though single step probabilities can vanish; irreducibility
    holds with short detours (paths of length at most 2).
    """
    square = _cycle((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
    triangle = _cycle((0, 0), (1, 0), (1, 1), (0, 0))
    law = WeightLaw(kind="bernoulli", p=p)
    return CycleModel(
        name="square_triangle",
        cycles=(square, triangle),
        laws=(law, law),
        couplings=((0, 1),),
    )


def triangle_triangle(p: float = 0.5) -> CycleModel:
    """Two complementary triangles per plaquette; a negative control.

    Mass stays bounded, but long corridors of same-type plaquettes block
    short detours, so the bounded-length irreducibility probe is expected
    to fail on some environments.
    """
    upper = _cycle((0, 0), (1, 1), (0, 1), (0, 0))
    lower = _cycle((0, 0), (1, 0), (1, 1), (0, 0))
    law = WeightLaw(kind="bernoulli", p=p)
    return CycleModel(
        name="triangle_triangle",
        cycles=(upper, lower),
        laws=(law, law),
        couplings=((0, 1),),
    )


BUILTIN_MODELS = {
    "random_conductance": random_conductance,
    "uniformly_elliptic": uniformly_elliptic,
    "square_triangle": square_triangle,
    "triangle_triangle": triangle_triangle,
}

# Recommended irreducibility probe (path length N) per builtin; derived from
# each model's structure and used as the CLI default.
DEFAULT_PROBE_N = {
    "random_conductance": 1,
    "uniformly_elliptic": 1,
    "square_triangle": 2,
    "triangle_triangle": 8,
}
