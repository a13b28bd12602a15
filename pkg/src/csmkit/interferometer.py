"""One particle in N transmission lines.

Context changes are beam-splitter networks acting on the lines, and
measurements are non-destructive projective clicks.  Randomness comes from
numpy's counter-based Philox generator; every batch of shots gets its own
stream spawned from the experiment seed, so results do not depend on how
shots are grouped for execution.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .linalg import (
    TOL_UNITARY,
    ProjectorFrame,
    ValidationError,
    check_unitary,
    computational_frame,
    dagger,
)
from .stochastic import TransitionMatrix, unistochastic_from_unitary

BATCH_SHOTS = 4096


@dataclass(frozen=True)
class BeamSplitter:
    """Acts as ``[[cos t, -e^{-i phi} sin t], [e^{i phi} sin t, cos t]]`` on lines ``(a, b)``."""

    a: int
    b: int
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("beam splitter needs two distinct lines")

    def block(self) -> np.ndarray:
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -np.exp(-1j * self.phi) * s], [np.exp(1j * self.phi) * s, c]])

    def matrix(self, n: int) -> np.ndarray:
        M = np.eye(n, dtype=np.complex128)
        idx = np.ix_([self.a, self.b], [self.a, self.b])
        M[idx] = self.block()
        return M

    def inverse(self) -> "BeamSplitter":
        return BeamSplitter(self.a, self.b, -self.theta, self.phi)

    def to_dict(self) -> dict:
        return {"bs": [self.a, self.b], "theta": self.theta, "phi": self.phi}


@dataclass(frozen=True)
class PhaseShifter:
    line: int
    phi: float

    def matrix(self, n: int) -> np.ndarray:
        M = np.eye(n, dtype=np.complex128)
        M[self.line, self.line] = np.exp(1j * self.phi)
        return M

    def inverse(self) -> "PhaseShifter":
        return PhaseShifter(self.line, -self.phi)

    def to_dict(self) -> dict:
        return {"ps": self.line, "phi": self.phi}


Element = Union[BeamSplitter, PhaseShifter]


@dataclass(frozen=True)
class Network:
    """Elements in the order light meets them; the first one acts first."""

    n: int
    elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for e in self.elements:
            lines = (e.a, e.b) if isinstance(e, BeamSplitter) else (e.line,)
            for line in lines:
                if not 0 <= line < self.n:
                    raise ValueError(f"line {line} out of range for {self.n} lines")

    @property
    def n_beam_splitters(self) -> int:
        return sum(isinstance(e, BeamSplitter) for e in self.elements)

    @property
    def n_phase_shifters(self) -> int:
        return sum(isinstance(e, PhaseShifter) for e in self.elements)

    def then(self, other: "Network") -> "Network":
        if other.n != self.n:
            raise ValueError("networks act on different numbers of lines")
        return Network(self.n, self.elements + other.elements)

    def to_list(self) -> list:
        return [e.to_dict() for e in self.elements]

    @classmethod
    def from_list(cls, n: int, items: Sequence[dict]) -> "Network":
        elements = []
        for k, item in enumerate(items):
            if "bs" in item:
                a, b = item["bs"]
                elements.append(BeamSplitter(int(a), int(b), float(item.get("theta", 0.0)),
                                             float(item.get("phi", 0.0))))
            elif "ps" in item:
                elements.append(PhaseShifter(int(item["ps"]), float(item.get("phi", 0.0))))
            else:
                raise ValidationError(f"network element {k} is neither 'bs' nor 'ps': {item!r}")
        return cls(n, tuple(elements))


def network_unitary(net: Network) -> np.ndarray:
    U = np.eye(net.n, dtype=np.complex128)
    for e in net.elements:
        U = e.matrix(net.n) @ U
    return U


def permutation_network(perm: Sequence[int]) -> Network:
    """Network sending line ``i`` to line ``perm[i]`` using swaps of adjacent lines.

    A beam splitter with ``theta = pi/2, phi = 0`` swaps two lines up to a
    sign, which does not change any probability.
    """
    perm = list(perm)
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation")
    # bubble sort the current position of each particle into place
    pos = list(range(n))  # pos[line] = which input currently sits on this line
    target = {i: perm[i] for i in range(n)}
    elements = []
    changed = True
    while changed:
        changed = False
        for line in range(n - 1):
            if target[pos[line]] > target[pos[line + 1]]:
                elements.append(BeamSplitter(line, line + 1, np.pi / 2, 0.0))
                pos[line], pos[line + 1] = pos[line + 1], pos[line]
                changed = True
    return Network(n, tuple(elements))


def reck_decompose(U, tol: float = TOL_UNITARY) -> Network:
    """Triangular beam-splitter mesh realizing ``U``.

    Sub-diagonal entries are nulled column by column, bottom up, with beam
    splitters on adjacent lines; what remains is a diagonal of phases.  At
    most ``N(N-1)/2`` beam splitters and ``N`` phase shifters are emitted,
    and entries that are already zero cost nothing.
    """
    U = check_unitary(U, tol)
    n = U.shape[0]
    W = U.copy()
    nulling = []
    for col in range(n - 1):
        for row in range(n - 1, col, -1):
            xa, xb = W[row - 1, col], W[row, col]
            if abs(xb) <= 1e-15:
                continue
            theta = np.arctan2(abs(xb), abs(xa))
            phi = np.angle(-xb) - (np.angle(xa) if abs(xa) > 0 else 0.0)
            T = BeamSplitter(row - 1, row, theta, phi)
            W = T.matrix(n) @ W
            W[row, col] = 0.0
            nulling.append(T)
    # U = T_1^-1 ... T_k^-1 D, so D acts first; T^-1(theta, phi) = T(theta, phi + pi)
    elements = [PhaseShifter(i, float(np.angle(W[i, i]))) for i in range(n)
                if abs(np.angle(W[i, i])) > 1e-15]
    for T in reversed(nulling):
        phi = float(np.mod(T.phi + np.pi + np.pi, 2 * np.pi) - np.pi)
        elements.append(BeamSplitter(T.a, T.b, float(T.theta), phi))
    return Network(n, tuple(elements))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128).ravel()
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > 1e-12:
            raise ValidationError(f"state has norm {nrm:.15g}, expected 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, n: int, i: int) -> "PureState":
        a = np.zeros(n, dtype=np.complex128)
        a[i] = 1.0
        return cls(a)

    @classmethod
    def normalized(cls, v) -> "PureState":
        v = np.asarray(v, dtype=np.complex128).ravel()
        return cls(v / np.linalg.norm(v))

    def evolve(self, U) -> "PureState":
        return PureState.normalized(np.asarray(U) @ self.amplitudes)


class MeasurementRecord(NamedTuple):
    context: object
    outcome: int
    shot: int


def outcome_probabilities(state: PureState, context: ProjectorFrame) -> np.ndarray:
    """``|<b_j|psi>|^2`` for every basis vector of the context."""
    amps = dagger(context.vectors) @ state.amplitudes
    return np.abs(amps) ** 2


def _normalized_probs(state: PureState, context: ProjectorFrame) -> np.ndarray:
    p = outcome_probabilities(state, context)
    total = p.sum()
    if abs(total - 1.0) > 1e-12:
        raise ValidationError(f"outcome probabilities sum to {total:.15g}")
    return p / total


def measure_nondestructive(state: PureState, context: ProjectorFrame, rng) -> tuple[int, PureState]:
    """Sample one click and collapse onto the corresponding basis vector.

    The collapsed state is the projection ``P_j psi`` renormalized, so its
    global phase follows the input state.
    """
    p = _normalized_probs(state, context)
    j = int(rng.choice(p.size, p=p))
    b = context.vectors[:, j]
    return j, PureState.normalized(b * np.vdot(b, state.amplitudes))


def measure_destructive(state: PureState, context: ProjectorFrame, rng) -> int:
    return int(rng.choice(context.dim, p=_normalized_probs(state, context)))


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def shot_streams(seed: int, shots: int, batch: int = BATCH_SHOTS):
    """Yield ``(first_shot, n_shots, generator)`` for consecutive batches."""
    n_batches = -(-shots // batch) if shots else 0
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(n_batches)):
        first = k * batch
        yield first, min(batch, shots - first), np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    network: Network
    prepare_outcome: int
    shots: int
    seed: int = 0
    prepare_context: object = "input"
    measure_context: object = "output"
    prepare_frame: Optional[ProjectorFrame] = None
    measure_frame: Optional[ProjectorFrame] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("need at least two lines")
        if self.network.n != self.n:
            raise ValidationError(f"network acts on {self.network.n} lines, config says {self.n}")
        if not 0 <= self.prepare_outcome < self.n:
            raise ValidationError(f"prepared outcome {self.prepare_outcome} out of range")
        if self.shots < 0:
            raise ValidationError("shots must be nonnegative")
        for f in (self.prepare_frame, self.measure_frame):
            if f is not None and f.dim != self.n:
                raise ValidationError("frame dimension does not match the number of lines")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            n = int(d["n"])
            prep = d.get("prepare", {})
            outcome = int(prep.get("outcome", 0))
            net = Network.from_list(n, d.get("network", []))
            return cls(n, net, outcome, int(d.get("shots", 0)), int(d.get("seed", 0)),
                       prep.get("context", "input"), d.get("measure", {}).get("context", "output"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad experiment config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "prepare": {"context": self.prepare_context, "outcome": self.prepare_outcome},
            "measure": {"context": self.measure_context},
            "network": self.network.to_list(),
            "shots": self.shots,
            "seed": self.seed,
        }


@dataclass(eq=False)
class ExperimentResult:
    counts: np.ndarray
    born: np.ndarray
    outcomes: np.ndarray
    context: object = "output"
    seed: int = 0

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots if self.shots else np.zeros_like(self.born)

    @property
    def zscores(self) -> np.ndarray:
        z = np.zeros_like(self.born)
        if not self.shots:
            return z
        f = self.frequencies
        var = self.born * (1.0 - self.born) / self.shots
        for j in range(z.size):
            if var[j] > 0:
                z[j] = (f[j] - self.born[j]) / np.sqrt(var[j])
            elif f[j] != self.born[j]:
                z[j] = np.inf
        return z

    def records(self):
        for shot, j in enumerate(self.outcomes):
            yield MeasurementRecord(self.context, int(j), shot)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "count", "frequency", "born", "zscore"])
        for j, (c, f, b, z) in enumerate(zip(self.counts, self.frequencies, self.born, self.zscores)):
            w.writerow([j, int(c), repr(float(f)), repr(float(b)), repr(float(z))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "counts": self.counts.tolist(),
            "frequencies": self.frequencies.tolist(),
            "born": self.born.tolist(),
            "zscores": [float(z) for z in self.zscores],
        }


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Prepare a line, send it through the network, click in the measurement context."""
    n = cfg.n
    prep = cfg.prepare_frame or computational_frame(n)
    meas = cfg.measure_frame or computational_frame(n)
    U = network_unitary(cfg.network)
    state = PureState.normalized(U @ prep.vectors[:, cfg.prepare_outcome])
    born = _normalized_probs(state, meas)
    outcomes = np.empty(cfg.shots, dtype=np.int64)
    for first, k, rng in shot_streams(cfg.seed, cfg.shots):
        outcomes[first:first + k] = rng.choice(n, size=k, p=born)
    counts = np.bincount(outcomes, minlength=n)
    return ExperimentResult(counts, born, outcomes, cfg.measure_context, cfg.seed)


def empirical_transition(net: Network, shots: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies for every prepared line (columns) and their binomial standard errors."""
    n = net.n
    freq = np.empty((n, n))
    for i in range(n):
        res = run_experiment(ExperimentConfig(n, net, i, shots, seed + i))
        freq[:, i] = res.frequencies
    U = network_unitary(net)
    p = np.abs(U) ** 2
    sigma = np.sqrt(p * (1.0 - p) / max(shots, 1))
    return freq, sigma


def extravalence_links_from_network(net: Network, input_context="input", output_context="output",
                                    tol: float = 1e-10) -> list:
    """Certainty links ``(input, i) <-> (output, j)`` wherever ``|U[j, i]|^2 = 1``."""
    P = np.abs(network_unitary(net)) ** 2
    links = []
    for i in range(net.n):
        j = int(np.argmax(P[:, i]))
        if abs(P[j, i] - 1.0) <= tol:
            links.append(((input_context, i), (output_context, j)))
    return links


def network_transition(net: Network) -> TransitionMatrix:
    return unistochastic_from_unitary(network_unitary(net))
