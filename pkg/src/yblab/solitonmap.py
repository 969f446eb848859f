"""Matrix-KdV soliton interaction map on rank-k projectors.

States are either covector/vector pairs (p, q) with parameter lambda
(rank 1) or kernel/image bases (L, K) for rank k.  The derived projector
uses the convention

    P = q p^T / <p, q>      (image = span q, kernel = annihilator of p),

fixed by requiring the Lax refactorization residual below to vanish.
The two-site map in (p, q) coordinates is

    p1~ = p1 + 2 l2 <p1,q2> / ((l1 - l2) <p2,q2>) p2
    q1~ = q1 + 2 l2 <p2,q1> / ((l1 - l2) <p2,q2>) q2
    p2~ = p2 + 2 l1 <p2,q1> / ((l2 - l1) <p1,q1>) p1
    q2~ = q2 + 2 l1 <p1,q2> / ((l2 - l1) <p1,q1>) q1

and in subspace coordinates

    K1~ = (I - 2 l2/(l1 + l2) P2) K1,   L1~ = (I + 2 l2/(l1 - l2) P2) L1,
    K2~ = (I - 2 l1/(l1 + l2) P1) K2,   L2~ = (I + 2 l1/(l2 - l1) P1) L2.

The Lax matrix of a state is the linear pencil

    L(x, lambda; zeta) = (zeta - lambda) I + 2 lambda P,

and the map is characterized by the refactorization identity

    L(x, l1; z) L(y, l2; z) = L(y~, l2; z) L(x~, l1; z).

Monodromy (ordered product of Lax matrices over an N-tuple) supplies the
spectral invariants of the transfer dynamics, complemented by the matrix
J = sum_i lambda_i P_i whose every entry is an integral.  The map is also
a Poisson map for the reduced symplectic structure obtained from T*V with
form dp ^ dq on the level <p, q> = lambda^2; check_poisson_map verifies
this numerically with finite differences.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import (
    DegeneratePairing,
    DimensionMismatch,
    MapUndefined,
    NotTransversal,
    ParamCollision,
)
from .matkit import (
    Matrix,
    Scalar,
    Vec,
    dot,
    char_poly,
    norm_scalar,
    projector_from_subspaces,
    vec_add,
    vec_scale,
)
from .ybcore import CheckReport, SiteTuple, TwoSiteMap, rand_scalar, relative_residual


@dataclass(frozen=True)
class Rank1State:
    """Covector/vector pair with site parameter; projector q p^T / <p,q>."""

    p: Vec
    q: Vec
    lam: Scalar

    def __post_init__(self):
        if len(self.p) != len(self.q):
            raise DimensionMismatch("p and q must have equal dimension")
        object.__setattr__(self, "p", tuple(norm_scalar(v) for v in self.p))
        object.__setattr__(self, "q", tuple(norm_scalar(v) for v in self.q))
        object.__setattr__(self, "lam", norm_scalar(self.lam))

    @property
    def dim(self) -> int:
        return len(self.p)

    def pairing(self) -> Scalar:
        return dot(self.p, self.q)

    def projector(self) -> Matrix:
        d = self.pairing()
        if d == 0:
            raise DegeneratePairing("rank-1 state has <p, q> = 0")
        return Matrix([[qi * pj / d for pj in self.p] for qi in self.q])


@dataclass(frozen=True)
class SubspaceState:
    """Rank-k state stored as image basis L (n x k) and kernel basis K
    (n x (n-k)).  The state is the pair of subspaces; bases may be
    renormalized freely."""

    l_basis: Matrix
    k_basis: Matrix
    lam: Scalar

    def __post_init__(self):
        object.__setattr__(self, "lam", norm_scalar(self.lam))
        # Raises NotTransversal when [L | K] is singular.
        proj = projector_from_subspaces(self.l_basis, self.k_basis)
        object.__setattr__(self, "_projector", proj)

    @property
    def dim(self) -> int:
        return self.l_basis.nrows

    @property
    def rank(self) -> int:
        return self.l_basis.ncols

    def projector(self) -> Matrix:
        return self._projector


def involution(state) -> Matrix:
    """S = 2P - I; S^2 = I for any valid state."""
    p = state.projector()
    return 2 * p - Matrix.identity(p.nrows)


def rank1_map(s1: Rank1State, s2: Rank1State) -> tuple[Rank1State, Rank1State]:
    if s1.lam == s2.lam:
        raise ParamCollision("rank-1 map needs lambda_1 != lambda_2")
    d1, d2 = s1.pairing(), s2.pairing()
    if d1 == 0 or d2 == 0:
        raise DegeneratePairing("rank-1 map needs <p_i, q_i> != 0")
    dl = s1.lam - s2.lam
    a12 = dot(s1.p, s2.q)
    a21 = dot(s2.p, s1.q)
    p1t = vec_add(s1.p, vec_scale(2 * s2.lam * a12 / (dl * d2), s2.p))
    q1t = vec_add(s1.q, vec_scale(2 * s2.lam * a21 / (dl * d2), s2.q))
    p2t = vec_add(s2.p, vec_scale(2 * s1.lam * a21 / (-dl * d1), s1.p))
    q2t = vec_add(s2.q, vec_scale(2 * s1.lam * a12 / (-dl * d1), s1.q))
    return Rank1State(p1t, q1t, s1.lam), Rank1State(p2t, q2t, s2.lam)


def rankk_map(s1: SubspaceState, s2: SubspaceState) -> tuple[SubspaceState, SubspaceState]:
    if s1.lam == s2.lam or s1.lam == -s2.lam:
        raise ParamCollision("subspace map needs lambda_1 != +/- lambda_2")
    n = s1.dim
    if s2.dim != n:
        raise DimensionMismatch("states live in different dimensions")
    ident = Matrix.identity(n)
    p1, p2 = s1.projector(), s2.projector()
    lam1, lam2 = s1.lam, s2.lam
    k1t = (ident - (2 * lam2 / (lam1 + lam2)) * p2) * s1.k_basis
    k2t = (ident - (2 * lam1 / (lam1 + lam2)) * p1) * s2.k_basis
    l1t = (ident + (2 * lam2 / (lam1 - lam2)) * p2) * s1.l_basis
    l2t = (ident + (2 * lam1 / (lam2 - lam1)) * p1) * s2.l_basis
    # SubspaceState construction raises NotTransversal for degenerate output.
    return SubspaceState(l1t, k1t, lam1), SubspaceState(l2t, k2t, lam2)


def lax_matrix(state, zeta: Scalar) -> Matrix:
    """(zeta - lambda) I + 2 lambda P for either state kind."""
    p = state.projector()
    n = p.nrows
    return (zeta - state.lam) * Matrix.identity(n) + (2 * state.lam) * p


def check_lax_refactorization(s1, s2, zetas: Sequence[Scalar], *,
                              mode: str = "exact", tol: float = 1e-9,
                              apply_fn: Callable | None = None) -> CheckReport:
    """Residual of L(x,l1;z) L(y,l2;z) - L(y~,l2;z) L(x~,l1;z) at each zeta.

    Both sides are degree-2 pencils in zeta, so three distinct samples
    certify the polynomial identity in exact mode.
    """
    if apply_fn is None:
        apply_fn = rank1_map if isinstance(s1, Rank1State) else rankk_map
    report = CheckReport(suite="lax", mode=mode)
    s1t, s2t = apply_fn(s1, s2)
    for trial, z in enumerate(zetas):
        lhs = lax_matrix(s1, z) * lax_matrix(s2, z)
        rhs = lax_matrix(s2t, z) * lax_matrix(s1t, z)
        if mode == "exact":
            if lhs == rhs:
                report.add_pass()
            else:
                report.add_fail(trial, f"zeta={z}", None, "refactorization mismatch")
        else:
            res = matrix_residual(lhs, rhs)
            if res <= tol:
                report.add_pass(res)
            else:
                report.add_fail(trial, f"zeta={z}", res)
    return report


def matrix_residual(a: Matrix, b: Matrix) -> float:
    return max(
        relative_residual(float(x), float(y))
        for ra, rb in zip(a.rows, b.rows)
        for x, y in zip(ra, rb)
    )


# ---------------------------------------------------------------------------
# Monodromy and spectral invariants


def state_from_slot(value, lam: Scalar):
    """Rebuild a soliton state from a (value, lambda) tuple slot."""
    first, second = value
    if isinstance(first, Matrix):
        return SubspaceState(first, second, lam)
    return Rank1State(first, second, lam)


def site_tuple_of_states(states: Sequence) -> SiteTuple:
    values = []
    for s in states:
        if isinstance(s, Rank1State):
            values.append((s.p, s.q))
        else:
            values.append((s.l_basis, s.k_basis))
    return SiteTuple(tuple(values), tuple(s.lam for s in states))


def monodromy(t: SiteTuple, zeta: Scalar) -> Matrix:
    """Ordered product of Lax matrices, site 1 leftmost."""
    out = None
    for value, lam in zip(t.values, t.lambdas):
        factor = lax_matrix(state_from_slot(value, lam), zeta)
        out = factor if out is None else out * factor
    return out


@dataclass(frozen=True)
class SpectralInvariants:
    """Characteristic-polynomial coefficients of the monodromy at sampled
    zeta values, plus the matrix J = sum_i lambda_i P_i."""

    zetas: tuple
    char_coeffs: tuple
    j: Matrix


def spectral_invariants(t: SiteTuple, zetas: Sequence[Scalar]) -> SpectralInvariants:
    coeffs = tuple(char_poly(monodromy(t, z)) for z in zetas)
    j = None
    for value, lam in zip(t.values, t.lambdas):
        term = lam * state_from_slot(value, lam).projector()
        j = term if j is None else j + term
    return SpectralInvariants(tuple(zetas), coeffs, j)


# ---------------------------------------------------------------------------
# Lie-Poisson bracket of linear observables


def lie_poisson_bracket(a: Matrix, e: Matrix, f: Matrix, lam: Scalar = 1) -> Scalar:
    """Bracket of the linear observables tr(E .) and tr(F .) evaluated at a.

    For the matrix variable itself the value is tr(a [E, F]); passing the
    site parameter as ``lam`` gives the scaled bracket lam^-1 tr(a [E, F])
    that the substitution a = lam * S forces on involution variables.  The
    overall sign convention is pinned by the tensor-form expansion test at
    n = 2.
    """
    comm = e * f - f * e
    return (a * comm).trace() / lam


# ---------------------------------------------------------------------------
# Numerical Poisson-map verification on the reduced rank-1 space


def restore_level(s: Rank1State) -> Rank1State:
    """Rescale p so that <p, q> = lambda^2 (projector-preserving)."""
    d = s.pairing()
    if d == 0:
        raise DegeneratePairing("cannot rescale a state with <p, q> = 0")
    return Rank1State(vec_scale(s.lam * s.lam / d, s.p), s.q, s.lam)


def _observables(n: int):
    """Scaling-invariant observables: all entries of P1 and P2, and
    tr(P1 P2)."""
    obs = []
    for a in range(n):
        for b in range(n):
            obs.append(lambda p1, p2, a=a, b=b: float(p1.rows[a][b]))
    for a in range(n):
        for b in range(n):
            obs.append(lambda p1, p2, a=a, b=b: float(p2.rows[a][b]))
    obs.append(lambda p1, p2: float((p1 * p2).trace()))
    return obs


def check_poisson_map(points: Sequence[tuple[Rank1State, Rank1State]], *,
                      h: float = 1e-5, tol: float = 1e-6,
                      apply_fn: Callable | None = None) -> CheckReport:
    """Reduced-bracket test of the Poisson property at level <p,q> = lam^2.

    For scaling-invariant observables F, G the canonical bracket of the
    pullbacks {F o R, G o R} at the sample point must equal {F, G} at the
    level-restored image.  Both sides are evaluated with central
    differences of step h; the per-point residual is the max over all
    observable pairs.
    """
    if apply_fn is None:
        apply_fn = rank1_map
    report = CheckReport(suite="poisson", mode="float")
    for trial, (s1, s2) in enumerate(points):
        try:
            res = _poisson_residual(s1, s2, h, apply_fn)
        except MapUndefined:
            report.add_skip()
            continue
        if res <= tol:
            report.add_pass(res)
        else:
            report.add_fail(trial, "bracket", res)
    return report


def _flatten(s1: Rank1State, s2: Rank1State) -> list[float]:
    return [float(v) for v in (*s1.p, *s1.q, *s2.p, *s2.q)]


def _unflatten(z: Sequence[float], n: int, lam1, lam2) -> tuple[Rank1State, Rank1State]:
    return (
        Rank1State(tuple(z[0:n]), tuple(z[n:2 * n]), lam1),
        Rank1State(tuple(z[2 * n:3 * n]), tuple(z[3 * n:4 * n]), lam2),
    )


def _canonical_bracket(ga: Sequence[float], gb: Sequence[float], n: int) -> float:
    """Canonical bracket sum over both sites: dq . dp - dp . dq pairing."""
    total = 0.0
    for site in range(2):
        base = site * 2 * n
        for a in range(n):
            pi, qi = base + a, base + n + a
            total += ga[qi] * gb[pi] - ga[pi] * gb[qi]
    return total


def _poisson_residual(s1: Rank1State, s2: Rank1State, h: float, apply_fn) -> float:
    n = s1.dim
    lam1, lam2 = float(s1.lam), float(s2.lam)
    obs = _observables(n)
    z0 = _flatten(s1, s2)
    m = 4 * n

    def obs_after_map(z: Sequence[float]) -> list[float]:
        a, b = _unflatten(z, n, lam1, lam2)
        at, bt = apply_fn(a, b)
        p1, p2 = at.projector(), bt.projector()
        return [f(p1, p2) for f in obs]

    def obs_plain(z: Sequence[float]) -> list[float]:
        a, b = _unflatten(z, n, lam1, lam2)
        p1, p2 = a.projector(), b.projector()
        return [f(p1, p2) for f in obs]

    def gradients(fn, center: Sequence[float]) -> list[list[float]]:
        grads = [[0.0] * m for _ in obs]
        for j in range(m):
            zp, zm = list(center), list(center)
            zp[j] += h
            zm[j] -= h
            fp, fm = fn(zp), fn(zm)
            for oi in range(len(obs)):
                grads[oi][j] = (fp[oi] - fm[oi]) / (2.0 * h)
        return grads

    g_pull = gradients(obs_after_map, z0)
    img1, img2 = apply_fn(s1, s2)
    y0 = _flatten(restore_level(img1), restore_level(img2))
    g_image = gradients(obs_plain, y0)

    worst = 0.0
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            lhs = _canonical_bracket(g_pull[i], g_pull[j], n)
            rhs = _canonical_bracket(g_image[i], g_image[j], n)
            worst = max(worst, abs(lhs - rhs))
    return worst


def poisson_decoy(s1: Rank1State, s2: Rank1State) -> tuple[Rank1State, Rank1State]:
    """Deliberately non-Poisson perturbation: p1~ <- p1~ + p2~."""
    t1, t2 = rank1_map(s1, s2)
    return Rank1State(vec_add(t1.p, t2.p), t1.q, t1.lam), t2


# ---------------------------------------------------------------------------
# Two-site map descriptors for the generic engine


def _rank1_projector(value) -> Matrix | None:
    try:
        return Rank1State(value[0], value[1], 0).projector()
    except DegeneratePairing:
        return None


def _pair_equal(a, b) -> bool:
    # The state is the projector: (p, q) representatives of the same point
    # may differ by a common scalar gauge factor under composed maps.
    pa, pb = _rank1_projector(a), _rank1_projector(b)
    if pa is None or pb is None:
        return a[0] == b[0] and a[1] == b[1]
    return pa == pb


def _pair_residual(a, b) -> float:
    pa, pb = _rank1_projector(a), _rank1_projector(b)
    if pa is None or pb is None:
        return float("inf")
    return matrix_residual(pa, pb)


def rank1_two_site() -> TwoSiteMap:
    """Engine adapter; site values are (p, q) tuples and the state
    comparison happens at the projector level (the covector/vector pair
    carries a redundant scalar gauge)."""

    def apply(x, lam, y, mu):
        s1t, s2t = rank1_map(Rank1State(x[0], x[1], lam), Rank1State(y[0], y[1], mu))
        return (s1t.p, s1t.q), (s2t.p, s2t.q)

    def defined(x, lam, y, mu) -> bool:
        return lam != mu and dot(x[0], x[1]) != 0 and dot(y[0], y[1]) != 0

    return TwoSiteMap("soliton-rank1", apply, defined, _pair_equal, _pair_residual)


def _subspace_equal(a, b) -> bool:
    return projector_from_subspaces(a[0], a[1]) == projector_from_subspaces(b[0], b[1])


def _subspace_residual(a, b) -> float:
    return matrix_residual(
        projector_from_subspaces(a[0], a[1]), projector_from_subspaces(b[0], b[1])
    )


def rankk_two_site() -> TwoSiteMap:
    """Engine adapter; site values are (l_basis, k_basis) pairs and the
    state comparison happens at the projector level."""

    def apply(x, lam, y, mu):
        s1t, s2t = rankk_map(SubspaceState(x[0], x[1], lam), SubspaceState(y[0], y[1], mu))
        return (s1t.l_basis, s1t.k_basis), (s2t.l_basis, s2t.k_basis)

    def defined(x, lam, y, mu) -> bool:
        return lam != mu and lam != -mu

    return TwoSiteMap("soliton-rankk", apply, defined, _subspace_equal, _subspace_residual)


# ---------------------------------------------------------------------------
# Samplers


def sample_rank1_value(rng: random.Random, n: int, mode: str) -> tuple[Vec, Vec]:
    while True:
        p = tuple(rand_scalar(rng, mode) for _ in range(n))
        q = tuple(rand_scalar(rng, mode) for _ in range(n))
        d = dot(p, q)
        if (d != 0) if mode == "exact" else (abs(d) > 1e-3):
            return p, q


def sample_rankk_value(rng: random.Random, n: int, k: int, mode: str) -> tuple[Matrix, Matrix]:
    while True:
        l_basis = Matrix([[rand_scalar(rng, mode) for _ in range(k)] for _ in range(n)])
        k_basis = Matrix([[rand_scalar(rng, mode) for _ in range(n - k)] for _ in range(n)])
        try:
            projector_from_subspaces(l_basis, k_basis)
        except NotTransversal:
            continue
        return l_basis, k_basis


def sample_soliton_lambdas(rng: random.Random, count: int, mode: str, *,
                           forbid_opposite: bool = False) -> tuple:
    while True:
        lams = tuple(rand_scalar(rng, mode) for _ in range(count))
        ok = all(lams[i] != lams[j] for i in range(count) for j in range(i + 1, count))
        if ok and forbid_opposite:
            ok = all(lams[i] != -lams[j] for i in range(count) for j in range(i + 1, count))
        if ok:
            return lams


def sample_rank1_tuple(rng: random.Random, n: int, nsites: int, mode: str,
                       lambdas: tuple | None = None) -> SiteTuple:
    lams = lambdas if lambdas is not None else sample_soliton_lambdas(rng, nsites, mode)
    values = tuple(sample_rank1_value(rng, n, mode) for _ in range(nsites))
    return SiteTuple(values, tuple(lams))


def sample_rankk_tuple(rng: random.Random, n: int, k: int, nsites: int, mode: str,
                       lambdas: tuple | None = None) -> SiteTuple:
    lams = (
        lambdas
        if lambdas is not None
        else sample_soliton_lambdas(rng, nsites, mode, forbid_opposite=True)
    )
    values = tuple(sample_rankk_value(rng, n, k, mode) for _ in range(nsites))
    return SiteTuple(values, tuple(lams))


def sample_normalized_pair(rng: random.Random, n: int = 2,
                           lambdas: tuple = (2.0, 1.0)) -> tuple[Rank1State, Rank1State]:
    """Float states on the level <p_i, q_i> = lambda_i^2, rejected until the
    map is comfortably defined (for well-conditioned finite differences)."""
    lam1, lam2 = float(lambdas[0]), float(lambdas[1])
    while True:
        states = []
        ok = True
        for lam in (lam1, lam2):
            p = tuple(rng.uniform(-1.5, 1.5) for _ in range(n))
            q = tuple(rng.uniform(-1.5, 1.5) for _ in range(n))
            d = dot(p, q)
            if abs(d) < 0.2:
                ok = False
                break
            states.append(restore_level(Rank1State(p, q, lam)))
        if not ok:
            continue
        s1, s2 = states
        try:
            t1, t2 = rank1_map(s1, s2)
        except MapUndefined:
            continue
        if min(abs(t1.pairing()), abs(t2.pairing())) < 0.05:
            continue
        return s1, s2
