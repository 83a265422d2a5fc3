"""Scenarios and behaviors: the classical interface of a black box.

A scenario fixes how many parties there are, how many inputs each party
can choose, and how many outputs each (party, input) pair can produce.
A behavior is the conditional probability table P(outputs | inputs) laid
out as a flat vector in one fixed lexicographic order that every other
module shares.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError

DEFAULT_TOL = 1e-9

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class Scenario:
    """Numbers of parties, inputs per party, and outputs per (party, input).

    ``outputs[p][x]`` is the output alphabet size of party ``p`` under
    input ``x``; alphabets are allowed to differ between inputs, which is
    what lifted no-click scenarios produce.
    """

    inputs_per_party: tuple[int, ...]
    outputs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.inputs_per_party) < 1:
            raise ValidationError("scenario needs at least one party")
        if len(self.outputs) != len(self.inputs_per_party):
            raise ValidationError(
                f"outputs table has {len(self.outputs)} rows for "
                f"{len(self.inputs_per_party)} parties"
            )
        for p, n_in in enumerate(self.inputs_per_party):
            if n_in < 1:
                raise ValidationError(f"party {p} has input count {n_in}; must be >= 1")
            if len(self.outputs[p]) != n_in:
                raise ValidationError(
                    f"party {p} has {len(self.outputs[p])} output counts for {n_in} inputs"
                )
            for x, n_out in enumerate(self.outputs[p]):
                if n_out < 1:
                    raise ValidationError(
                        f"party {p}, input {x} has output count {n_out}; must be >= 1"
                    )

    @classmethod
    def uniform(cls, parties: int, inputs: int, outputs: int) -> "Scenario":
        """Scenario with the same input and output counts everywhere."""
        return cls(
            inputs_per_party=(inputs,) * parties,
            outputs=((outputs,) * inputs,) * parties,
        )

    @property
    def parties(self) -> int:
        return len(self.inputs_per_party)

    @property
    def joint_input_count(self) -> int:
        return math.prod(self.inputs_per_party)

    def joint_inputs(self):
        """All joint inputs in lexicographic order, party 0 slowest."""
        return itertools.product(*(range(n) for n in self.inputs_per_party))

    def outputs_for(self, inputs: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(self.outputs[p][x] for p, x in enumerate(inputs))

    def joint_outputs(self, inputs: tuple[int, ...]):
        """All joint outputs for one joint input, party 0 slowest."""
        return itertools.product(*(range(n) for n in self.outputs_for(inputs)))

    def block_size(self, inputs: tuple[int, ...]) -> int:
        return math.prod(self.outputs_for(inputs))

    @cached_property
    def _block_offsets(self) -> tuple[int, ...]:
        offsets = []
        acc = 0
        for joint in self.joint_inputs():
            offsets.append(acc)
            acc += self.block_size(joint)
        offsets.append(acc)
        return tuple(offsets)

    @property
    def dimension(self) -> int:
        """Length of a behavior vector on this scenario."""
        return self._block_offsets[-1]

    def joint_input_index(self, inputs: tuple[int, ...]) -> int:
        idx = 0
        for p, x in enumerate(inputs):
            idx = idx * self.inputs_per_party[p] + x
        return idx

    def block_offset(self, inputs: tuple[int, ...]) -> int:
        return self._block_offsets[self.joint_input_index(inputs)]

    def block_slice(self, inputs: tuple[int, ...]) -> slice:
        j = self.joint_input_index(inputs)
        return slice(self._block_offsets[j], self._block_offsets[j + 1])


def flat_index(scenario: Scenario, inputs: tuple[int, ...], outputs: tuple[int, ...]) -> int:
    """Position of P(outputs | inputs) in the flat behavior vector.

    Layout: joint-input major, joint-output minor, both lexicographic with
    party 0 slowest.  Block sizes vary when output alphabets do, so the
    offset of an input block is the sum of the sizes of all earlier blocks.
    """
    if len(inputs) != scenario.parties or len(outputs) != scenario.parties:
        raise ValidationError(
            f"expected {scenario.parties} input and output choices, "
            f"got {len(inputs)} and {len(outputs)}"
        )
    for p, x in enumerate(inputs):
        if not 0 <= x < scenario.inputs_per_party[p]:
            raise ValidationError(
                f"party {p}: input {x} out of range [0, {scenario.inputs_per_party[p]})"
            )
    out_counts = scenario.outputs_for(inputs)
    for p, a in enumerate(outputs):
        if not 0 <= a < out_counts[p]:
            raise ValidationError(
                f"party {p}: output {a} out of range [0, {out_counts[p]}) under input {inputs[p]}"
            )
    within = 0
    for p, a in enumerate(outputs):
        within = within * out_counts[p] + a
    return scenario.block_offset(inputs) + within


@dataclass(frozen=True, eq=False)
class Behavior:
    """A validated conditional probability table on a scenario.

    ``probs`` is read-only; certificates downstream refer to behaviors by
    value, so instances are never mutated after validation.
    """

    scenario: Scenario
    probs: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.probs.setflags(write=False)

    def block(self, inputs: tuple[int, ...]) -> np.ndarray:
        return self.probs[self.scenario.block_slice(inputs)]

    def prob(self, inputs: tuple[int, ...], outputs: tuple[int, ...]) -> float:
        return float(self.probs[flat_index(self.scenario, inputs, outputs)])


def validate_behavior(scenario: Scenario, raw, tol: float = DEFAULT_TOL) -> Behavior:
    """Check and normalize a flat probability table into a Behavior.

    Entries may undershoot 0 by at most ``tol`` (they are clipped) and each
    input block's sum may deviate from 1 by at most ``tol`` (the block is
    rescaled).  Rescaling is skipped when a block already sums to 1 at float
    precision, which makes validation idempotent and keeps round-trips exact.
    """
    vec = np.array(raw, dtype=np.float64).reshape(-1)
    if vec.shape[0] != scenario.dimension:
        raise ValidationError(
            f"behavior has length {vec.shape[0]}, scenario dimension is {scenario.dimension}"
        )
    if not np.all(np.isfinite(vec)):
        raise ValidationError("behavior contains non-finite entries")
    for joint in scenario.joint_inputs():
        sl = scenario.block_slice(joint)
        block = vec[sl]
        worst = block.min()
        if worst < -tol:
            raise ValidationError(
                f"input block {joint}: negative probability {worst:.3e} below -tol"
            )
        block = np.where(block < 0.0, 0.0, block)
        s = float(block.sum())
        if abs(s - 1.0) > tol:
            raise ValidationError(
                f"input block {joint}: probabilities sum to {s!r}, expected 1 within {tol}"
            )
        if abs(s - 1.0) > 4.0 * _EPS * max(1, block.shape[0]):
            block = block / s
        vec[sl] = block
    return Behavior(scenario=scenario, probs=vec, tol=tol)


def mix(components, tol: float | None = None) -> Behavior:
    """Convex combination of behaviors on one scenario.

    This is the observable face of a probability distribution over
    underlying transfer functions: the statistics of a stochastic box are
    the mixture of the statistics of its deterministic branches.
    """
    components = list(components)
    if not components:
        raise ValidationError("mix needs at least one component")
    weights = np.array([w for w, _ in components], dtype=np.float64)
    behaviors = [b for _, b in components]
    if np.any(weights < 0.0):
        raise ValidationError("mix weights must be nonnegative")
    if abs(float(weights.sum()) - 1.0) > 1e-12:
        raise ValidationError(f"mix weights sum to {float(weights.sum())!r}, expected 1")
    scenario = behaviors[0].scenario
    for b in behaviors[1:]:
        if b.scenario != scenario:
            raise ValidationError("mix components live on different scenarios")
    combo = np.zeros(scenario.dimension)
    for w, b in zip(weights, behaviors):
        combo += w * b.probs
    if tol is None:
        tol = max(b.tol for b in behaviors)
    return validate_behavior(scenario, combo, tol=tol)


@dataclass(frozen=True)
class NoSignallingReport:
    """Largest dependence of any one-party marginal on remote inputs.

    ``max_defect`` is zero exactly when every party's output statistics are
    independent of what the other parties asked; such behaviors cannot be
    used to transmit anything between the parties.
    ``worst_marginal`` is (party, input, output, (remote inputs A, remote
    inputs B)), the marginal and context pair attaining the defect.
    """

    max_defect: float
    worst_party: int
    worst_marginal: tuple


def _remote(inputs: tuple[int, ...], party: int) -> tuple[int, ...]:
    return inputs[:party] + inputs[party + 1 :]


def no_signalling_defect(behavior: Behavior) -> NoSignallingReport:
    """Scan all one-party marginals for dependence on remote inputs."""
    scenario = behavior.scenario
    marginals: dict[tuple, float] = {}
    for joint_in in scenario.joint_inputs():
        block = behavior.block(joint_in)
        for k, joint_out in enumerate(scenario.joint_outputs(joint_in)):
            p_val = float(block[k])
            if p_val == 0.0:
                continue
            for p in range(scenario.parties):
                key = (p, joint_in[p], joint_out[p], _remote(joint_in, p))
                marginals[key] = marginals.get(key, 0.0) + p_val

    best = 0.0
    worst_party = 0
    worst = (0, 0, ((), ()))
    for p in range(scenario.parties):
        remote_inputs = list(
            itertools.product(
                *(range(n) for q, n in enumerate(scenario.inputs_per_party) if q != p)
            )
        )
        if len(remote_inputs) < 2:
            continue
        for x in range(scenario.inputs_per_party[p]):
            for a in range(scenario.outputs[p][x]):
                vals = [marginals.get((p, x, a, r), 0.0) for r in remote_inputs]
                hi = max(range(len(vals)), key=lambda i: vals[i])
                lo = min(range(len(vals)), key=lambda i: vals[i])
                defect = vals[hi] - vals[lo]
                if defect > best:
                    best = defect
                    worst_party = p
                    worst = (x, a, (remote_inputs[hi], remote_inputs[lo]))
    return NoSignallingReport(
        max_defect=best,
        worst_party=worst_party,
        worst_marginal=(worst_party,) + worst,
    )


_CHSH_SCENARIO = Scenario.uniform(2, 2, 2)


def named_behavior(name: str, scenario: Scenario | None = None, tol: float = DEFAULT_TOL) -> Behavior:
    """Catalog of reference behaviors.

    ``uniform`` accepts any scenario; ``pr_box`` and ``signalling_demo``
    are fixed to the 2-party, 2-input, 2-output scenario.  The PR box puts
    weight 1/2 on each output pair with a XOR b = x AND y; the signalling
    demo deterministically sets party 0's output to party 1's input.
    """
    if name == "uniform":
        sc = scenario if scenario is not None else _CHSH_SCENARIO
        vec = np.zeros(sc.dimension)
        for joint in sc.joint_inputs():
            sl = sc.block_slice(joint)
            vec[sl] = 1.0 / sc.block_size(joint)
        return validate_behavior(sc, vec, tol=tol)
    if scenario is not None and scenario != _CHSH_SCENARIO:
        raise ValidationError(f"behavior {name!r} is only defined on the (2,2,2) scenario")
    sc = _CHSH_SCENARIO
    vec = np.zeros(sc.dimension)
    if name == "pr_box":
        for x, y in sc.joint_inputs():
            for a, b in sc.joint_outputs((x, y)):
                if (a ^ b) == (x & y):
                    vec[flat_index(sc, (x, y), (a, b))] = 0.5
    elif name == "signalling_demo":
        for x, y in sc.joint_inputs():
            vec[flat_index(sc, (x, y), (y, 0))] = 1.0
    else:
        raise ValidationError(f"unknown behavior name {name!r}")
    return validate_behavior(sc, vec, tol=tol)
