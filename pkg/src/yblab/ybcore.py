"""Generic engine for parameter-dependent two-site maps on cyclic N-tuples.

A two-site map R(lambda, mu) sends (x, y) to (x~, y~).  Lifting R to the
(i, j) slots of an N-tuple and composing the lifts yields the transfer
maps

    T_i = R_{i, i+N-1} o ... o R_{i, i+2} o R_{i, i+1}

with the rightmost factor applied first and site indices cyclic mod N
(1-based).  The checkers in this module verify, for any such map, the
Yang-Baxter relation on 3-tuples, reversibility on 2-tuples, pairwise
commutativity of the transfer maps and the identity T_1 T_2 ... T_N = Id.
In exact mode every comparison is bit-exact; in float mode the maximum
relative residual is recorded and compared against a tolerance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .errors import BadIndex, MapUndefined
from .matkit import Scalar

SiteValue = Any


@dataclass(frozen=True)
class TwoSiteMap:
    """A deterministic evaluator (x, lambda, y, mu) -> (x~, y~) together
    with a domain predicate and state-kind comparison hooks.

    ``value_equal`` is the exact-mode comparison; ``value_residual`` the
    float-mode relative residual.  Both compare whatever the state kind
    treats as the actual state (e.g. subspaces rather than their bases).
    """

    name: str
    apply: Callable[[SiteValue, Scalar, SiteValue, Scalar], tuple[SiteValue, SiteValue]]
    defined: Callable[[SiteValue, Scalar, SiteValue, Scalar], bool]
    value_equal: Callable[[SiteValue, SiteValue], bool]
    value_residual: Callable[[SiteValue, SiteValue], float]


@dataclass(frozen=True)
class SiteTuple:
    """Ordered tuple of site values with per-site parameters attached.

    Site indices are 1-based and cyclic (mod N).
    """

    values: tuple
    lambdas: tuple

    def __post_init__(self):
        if len(self.values) != len(self.lambdas):
            raise BadIndex("values and lambdas must have equal length")
        if not self.values:
            raise BadIndex("empty tuple")

    @property
    def size(self) -> int:
        return len(self.values)

    def site(self, i: int) -> tuple[SiteValue, Scalar]:
        idx = (i - 1) % self.size
        return self.values[idx], self.lambdas[idx]


def lift_two_site(m: TwoSiteMap, i: int, j: int, t: SiteTuple) -> SiteTuple:
    """Apply R to slots (i, j) and the identity elsewhere.  Parameters stay
    attached to their slots."""
    n = t.size
    ii, jj = (i - 1) % n, (j - 1) % n
    if ii == jj:
        raise BadIndex(f"site indices {i} and {j} coincide mod {n}")
    x, lam = t.values[ii], t.lambdas[ii]
    y, mu = t.values[jj], t.lambdas[jj]
    xt, yt = m.apply(x, lam, y, mu)
    values = list(t.values)
    values[ii], values[jj] = xt, yt
    return SiteTuple(tuple(values), t.lambdas)


def transfer_map(m: TwoSiteMap, i: int, t: SiteTuple) -> SiteTuple:
    """T_i = R_{i,i+N-1} ... R_{i,i+1}, rightmost factor first."""
    out = t
    for s in range(1, t.size):
        j = i + s
        try:
            out = lift_two_site(m, i, j, out)
        except MapUndefined as exc:
            j_norm = (j - 1) % t.size + 1
            raise MapUndefined(
                f"T_{i}: factor R_({i},{j_norm}) undefined: {exc}"
            ) from exc
    return out


# ---------------------------------------------------------------------------
# Check reports


@dataclass(frozen=True)
class Failure:
    trial: int
    where: str
    residual: float | None
    detail: str


@dataclass
class CheckReport:
    """Outcome of a verification suite.

    ``exact`` is the exact-zero flag and is only meaningful in exact mode
    (None in float mode).  ``max_residual`` is tracked in float mode over
    all comparisons, passing or not.
    """

    suite: str
    mode: str
    attempted: int = 0
    passed: int = 0
    skipped: int = 0
    failures: list[Failure] = field(default_factory=list)
    max_residual: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool | None:
        if self.mode != "exact":
            return None
        return self.attempted > 0 and not self.failures

    @property
    def ok(self) -> bool:
        return self.attempted > 0 and not self.failures

    # -- accumulation helpers ------------------------------------------------
    def record_residual(self, residual: float | None) -> None:
        if residual is None:
            return
        if self.max_residual is None or residual > self.max_residual:
            self.max_residual = residual

    def add_pass(self, residual: float | None = None) -> None:
        self.attempted += 1
        self.passed += 1
        self.record_residual(residual)

    def add_fail(self, trial: int, where: str, residual: float | None, detail: str = "") -> None:
        self.attempted += 1
        self.failures.append(Failure(trial, where, residual, detail))
        self.record_residual(residual)

    def add_skip(self) -> None:
        self.skipped += 1


def relative_residual(a: float, b: float) -> float:
    """|a - b| scaled by max(1, |a|, |b|)."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def tuple_comparison(m: TwoSiteMap, a: SiteTuple, b: SiteTuple) -> tuple[bool, float]:
    """Componentwise comparison of two tuples of the same kind.

    Returns (exact_equal, max_residual).  Parameters must match exactly in
    either mode; transfer dynamics never touches them.
    """
    if a.size != b.size or a.lambdas != b.lambdas:
        return False, float("inf")
    equal = True
    residual = 0.0
    for va, vb in zip(a.values, b.values):
        if not m.value_equal(va, vb):
            equal = False
        residual = max(residual, m.value_residual(va, vb))
    return equal, residual


# ---------------------------------------------------------------------------
# Checkers.  Every checker consumes pre-sampled tuples so that trial
# generation (and therefore reports) is reproducible for a fixed seed.


def _judge(report: CheckReport, trial: int, where: str, m: TwoSiteMap,
           got: SiteTuple, want: SiteTuple, tol: float) -> bool:
    equal, residual = tuple_comparison(m, got, want)
    if report.mode == "exact":
        if equal:
            return True
        report.failures.append(Failure(trial, where, None, "exact mismatch"))
        return False
    report.record_residual(residual)
    if residual <= tol:
        return True
    report.failures.append(Failure(trial, where, residual, "residual above tolerance"))
    return False


def check_yb(m: TwoSiteMap, triples: Iterable[SiteTuple], *,
             mode: str = "exact", tol: float = 1e-9) -> CheckReport:
    """Yang-Baxter relation on 3-tuples:

        R_12 R_13 R_23 = R_23 R_13 R_12

    (both sides rightmost-first).  Out-of-domain trials are skipped, not
    failed."""
    report = CheckReport(suite="yb", mode=mode)
    for trial, t in enumerate(triples):
        try:
            lhs = lift_two_site(m, 1, 2, lift_two_site(m, 1, 3, lift_two_site(m, 2, 3, t)))
            rhs = lift_two_site(m, 2, 3, lift_two_site(m, 1, 3, lift_two_site(m, 1, 2, t)))
        except MapUndefined:
            report.add_skip()
            continue
        before = len(report.failures)
        ok = _judge(report, trial, "yb", m, lhs, rhs, tol)
        report.attempted += 1
        if ok and before == len(report.failures):
            report.passed += 1
    return report


def check_reversible(m: TwoSiteMap, pairs: Iterable[SiteTuple], *,
                     mode: str = "exact", tol: float = 1e-9) -> CheckReport:
    """Reversibility R_21 R = Id on 2-tuples (parameter slots included)."""
    report = CheckReport(suite="reversibility", mode=mode)
    for trial, t in enumerate(pairs):
        try:
            once = lift_two_site(m, 1, 2, t)
            back = lift_two_site(m, 2, 1, once)
        except MapUndefined:
            report.add_skip()
            continue
        before = len(report.failures)
        ok = _judge(report, trial, "reversibility", m, back, t, tol)
        report.attempted += 1
        if ok and before == len(report.failures):
            report.passed += 1
    return report


def check_transfer_laws(m: TwoSiteMap, tuples: Iterable[SiteTuple], *,
                        mode: str = "exact", tol: float = 1e-9) -> CheckReport:
    """Commutativity T_i T_j = T_j T_i for all i < j plus the product
    identity T_1 T_2 ... T_N = Id, per sampled tuple."""
    report = CheckReport(suite="transfer-laws", mode=mode)
    for trial, t in enumerate(tuples):
        n = t.size
        try:
            trial_failures = len(report.failures)
            for i in range(1, n + 1):
                for j in range(i + 1, n + 1):
                    ij = transfer_map(m, i, transfer_map(m, j, t))
                    ji = transfer_map(m, j, transfer_map(m, i, t))
                    _judge(report, trial, f"T{i}T{j}=T{j}T{i}", m, ij, ji, tol)
            out = t
            for i in range(n, 0, -1):
                out = transfer_map(m, i, out)
            _judge(report, trial, "T1...TN=Id", m, out, t, tol)
        except MapUndefined:
            report.add_skip()
            continue
        report.attempted += 1
        if len(report.failures) == trial_failures:
            report.passed += 1
    return report


# ---------------------------------------------------------------------------
# Reproducible sampling.  Small rationals keep exact arithmetic fast;
# per-trial streams are derived from the master seed by counter so trials
# can be regenerated (or parallelized) without changing reports.

_NONZERO_DIGITS = tuple(i for i in range(-9, 10) if i != 0)


def trial_rng(seed: int, counter: int) -> random.Random:
    return random.Random(f"{seed}:{counter}")


def rand_fraction(rng: random.Random) -> Fraction:
    """Uniform numerator in [-9, 9] \\ {0}, denominator in [1, 9]."""
    return Fraction(rng.choice(_NONZERO_DIGITS), rng.randint(1, 9))


def rand_scalar(rng: random.Random, mode: str) -> Scalar:
    f = rand_fraction(rng)
    return f if mode == "exact" else float(f)


def mutated(m: TwoSiteMap, mutate: Callable[[SiteValue, SiteValue], tuple[SiteValue, SiteValue]],
            name_suffix: str = "+decoy") -> TwoSiteMap:
    """Wrap a map with an output perturbation (harness integrity decoys)."""

    def apply(x, lam, y, mu):
        xt, yt = m.apply(x, lam, y, mu)
        return mutate(xt, yt)

    return TwoSiteMap(
        name=m.name + name_suffix,
        apply=apply,
        defined=m.defined,
        value_equal=m.value_equal,
        value_residual=m.value_residual,
    )
