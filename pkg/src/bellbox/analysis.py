"""Deciding what kind of box a behavior is.

The decision problem is linear: a behavior is a mixture of deterministic
strategies exactly when a feasibility program has a solution, and when it
does not, the dual of that program hands over a violated inequality.
Everything here is built on that one correspondence: classification,
inequality derivation, and bisection for critical noise and detection
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import StalledError, ValidationError
from .lp import LinearProgram, solve
from .polytope import BellFunctional, LocalModel, canonicalize, strategy_matrix
from .quantum import BellSetup, behavior_from_setup, lift_with_efficiency
from .scenario import Behavior, NoSignallingReport, Scenario, mix, no_signalling_defect

DEFAULT_TOL = 1e-9
VISIBILITY_TOL = 1e-6
EFFICIENCY_TOL = 1e-4
MODEL_TOL = 1e-7


class Verdict(Enum):
    """Mutually exclusive behavior classes, checked in this order:
    signalling first, then membership in the local set."""

    LOCAL = "local"
    WEAKLY_NONLOCAL = "weakly nonlocal"
    SIGNALLING = "signalling"


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of the local-set decision with its witness: a reproducing
    mixture when inside, a violated inequality when outside."""

    is_local: bool
    model: LocalModel | None = None
    functional: BellFunctional | None = None
    violation: float | None = None


@dataclass(frozen=True)
class Classification:
    """A verdict plus exactly one witness backing it and a one-line
    summary for the experimenter."""

    verdict: Verdict
    summary: str
    model: LocalModel | None = None
    functional: BellFunctional | None = None
    violation: float | None = None
    signalling: NoSignallingReport | None = None


@dataclass(frozen=True)
class ThresholdResult:
    """A critical parameter value found by bisection.

    ``critical`` is the certified-local end of the final bracket; the
    other end is certified nonlocal and the bracket is no wider than
    ``tolerance``.
    """

    parameter: str
    critical: float
    bracket: tuple[float, float]
    iterations: int
    tolerance: float


def _cut_program(behavior: Behavior) -> tuple[LinearProgram, np.ndarray]:
    """Maximum-violation program over box-normalized functionals.

    Variables are (c, beta, t): maximize c.p - beta subject to
    c.V_s - beta + t_s = 0 with t_s >= 0 and |c_j| <= 1.  The optimum is
    the depth of the deepest cut separating p from the deterministic
    mixtures; it is 0 exactly when p is such a mixture, and then the dual
    weights of the strategy rows are one reproducing mixture.
    """
    V = strategy_matrix(behavior.scenario)
    d, n = V.shape
    A = np.hstack([V.T, -np.ones((n, 1)), np.eye(n)])
    objective = np.concatenate([behavior.probs, [-1.0], np.zeros(n)])
    bounds = [(-1.0, 1.0)] * d + [(None, None)] + [(0.0, None)] * n
    lp = LinearProgram(A=A, b=np.zeros(n), c=objective, maximize=True, bounds=bounds)
    return lp, V


def membership(behavior: Behavior, tol: float = DEFAULT_TOL) -> MembershipResult:
    """Decide whether a behavior is a mixture of deterministic strategies.

    Inside: the result carries a mixture reproducing the behavior to
    within 1e-7.  Outside: it carries a canonicalized inequality whose
    deterministic bound is recomputed by direct enumeration and whose
    violation is strictly positive.  Signalling behaviors are legitimate
    inputs; their inequalities are canonicalized in the weaker gauge that
    only removes per-block constants, so the reported violation applies
    to the behavior as given.
    """
    lp, V = _cut_program(behavior)
    out = solve(lp, tol=tol)
    if out.status != "optimal":
        raise StalledError(f"membership program ended with status {out.status!r}")
    depth = float(out.objective)
    d, n = V.shape
    if depth <= tol:
        weights = np.clip(out.y[:n], 0.0, None)
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-6:
            raise StalledError(f"membership dual weights sum to {total!r}, not 1")
        weights = weights / total
        residual = float(np.abs(V @ weights - behavior.probs).max())
        if residual > MODEL_TOL:
            raise StalledError(f"membership model misses the behavior by {residual:.3e}")
        model = LocalModel(scenario=behavior.scenario, weights=weights)
        return MembershipResult(is_local=True, model=model)
    raw = BellFunctional(scenario=behavior.scenario, coeffs=np.array(out.x[:d]))
    ns_gap = no_signalling_defect(behavior).max_defect
    gauge = "no_signalling" if ns_gap <= tol else "normalization"
    functional = canonicalize(raw, gauge=gauge)
    violation = float(functional.value(behavior) - functional.local_bound)
    if violation <= 0.0:
        raise StalledError(
            f"separating cut of depth {depth:.3e} lost its violation "
            f"({violation:.3e}) during canonicalization"
        )
    return MembershipResult(is_local=False, functional=functional, violation=violation)


def classify(behavior: Behavior, tol: float = DEFAULT_TOL) -> Classification:
    """Three-way call on a behavior: signalling, weakly nonlocal, or local.

    The signalling check runs first because membership witnesses are only
    meaningful relative to it; each verdict comes with exactly one
    witness.
    """
    report = no_signalling_defect(behavior)
    if report.max_defect > tol:
        party, x, a, (ctx_hi, ctx_lo) = report.worst_marginal
        summary = (
            f"Signalling: party {party}'s chance of output {a} under input {x} "
            f"moves by {report.max_defect:.6g} when the remote inputs change from "
            f"{ctx_lo} to {ctx_hi}, so the box transmits information between sites."
        )
        return Classification(verdict=Verdict.SIGNALLING, summary=summary, signalling=report)
    res = membership(behavior, tol=tol)
    if res.is_local:
        support = int(np.count_nonzero(res.model.weights > tol))
        summary = (
            f"Local: reproduced by a mixture of {support} deterministic strategies, "
            "so shared randomness fully explains these statistics."
        )
        return Classification(verdict=Verdict.LOCAL, summary=summary, model=res.model)
    summary = (
        "Weakly nonlocal: no mixture of deterministic strategies matches these "
        f"statistics; an inequality with local bound {res.functional.local_bound:.6g} "
        f"is violated by {res.violation:.6g} while all marginals stay independent of "
        "remote inputs."
    )
    return Classification(
        verdict=Verdict.WEAKLY_NONLOCAL,
        summary=summary,
        functional=res.functional,
        violation=res.violation,
    )


def derive_critical_inequality(behavior: Behavior, tol: float = DEFAULT_TOL) -> BellFunctional:
    """Violated inequality in canonical form for a nonlocal behavior."""
    res = membership(behavior, tol=tol)
    if res.is_local:
        raise ValidationError(
            "behavior is local: no inequality exists that separates it "
            "from the deterministic mixtures"
        )
    return res.functional


_CHSH_SCENARIO = Scenario.uniform(2, 2, 2)


def chsh_value(behavior: Behavior) -> float:
    """S = E00 + E01 + E10 - E11 with E_xy the parity average of outputs.

    Defined only on the 2-party, 2-input, 2-output scenario.  Mixtures of
    deterministic strategies satisfy |S| <= 2; no-signalling behaviors
    can reach 4.
    """
    if behavior.scenario != _CHSH_SCENARIO:
        raise ValidationError(
            "CHSH value needs the 2-party, 2-input, 2-output scenario, "
            f"got {behavior.scenario}"
        )
    total = 0.0
    for x in range(2):
        for y in range(2):
            sign = -1.0 if (x, y) == (1, 1) else 1.0
            for a in range(2):
                for b in range(2):
                    parity = 1.0 if a == b else -1.0
                    total += sign * parity * behavior.prob((x, y), (a, b))
    return total


def _bisect(parameter: str, is_local_at, tol: float) -> ThresholdResult:
    # invariant: 0 is certified local, 1 certified nonlocal before entry
    lo, hi = 0.0, 1.0
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        iterations += 1
        if is_local_at(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        parameter=parameter,
        critical=lo,
        bracket=(lo, hi),
        iterations=iterations,
        tolerance=tol,
    )


def visibility_threshold(
    behavior: Behavior, noise: Behavior, tol: float = VISIBILITY_TOL
) -> ThresholdResult:
    """Largest weight at which blending the behavior into the noise is
    still local, located by bisection with ties resolved toward the
    certified-local side."""
    if behavior.scenario != noise.scenario:
        raise ValidationError("behavior and noise live on different scenarios")
    if not membership(noise).is_local:
        raise ValidationError("noise behavior must be local")
    if membership(behavior).is_local:
        raise ValidationError(
            "behavior is already local at full visibility; no threshold exists"
        )

    def is_local_at(v: float) -> bool:
        return membership(mix([(v, behavior), (1.0 - v, noise)])).is_local

    return _bisect("visibility", is_local_at, tol)


def efficiency_threshold(setup: BellSetup, tol: float = EFFICIENCY_TOL) -> ThresholdResult:
    """Largest detection efficiency at which the setup's statistics stay
    local when both parties' detectors fire with that probability and
    no-clicks are kept as their own outcome."""

    def behavior_at(eta: float) -> Behavior:
        return behavior_from_setup(
            BellSetup(
                state=setup.state,
                alice=lift_with_efficiency(setup.alice, eta),
                bob=lift_with_efficiency(setup.bob, eta),
            )
        )

    if membership(behavior_at(1.0)).is_local:
        raise ValidationError(
            "setup is local even with perfect detection; no threshold exists"
        )
    if not membership(behavior_at(0.0)).is_local:
        raise StalledError("all-no-click statistics failed the local check")

    def is_local_at(eta: float) -> bool:
        return membership(behavior_at(eta)).is_local

    return _bisect("efficiency", is_local_at, tol)
