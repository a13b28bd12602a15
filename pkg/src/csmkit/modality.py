"""Systems, contexts, modalities and extravalence classes.

Modalities of different contexts that are connected with certainty belong
to one extravalence class.  The registry keeps these classes in a
union-find structure and refuses any merge that would put two outcomes of
the same context into one class, since those are mutually exclusive.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .linalg import ProjectorFrame
from .stochastic import TOL_STOCH, TransitionMatrix, born_probability, validate_stochastic

TOL_RULE_I = 1e-9
TOL_RULE_II = 1e-9


class RegistryError(ValueError):
    pass


class ExclusivityError(RegistryError):
    """A merge would place two outcomes of one context in the same class."""


class Modality(NamedTuple):
    context: Hashable
    index: int


@dataclass(frozen=True)
class Context:
    id: Hashable
    labels: tuple
    frame: Optional[ProjectorFrame] = field(default=None, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise RegistryError(f"context {self.id!r} has repeated labels")
        if self.frame is not None and self.frame.dim != len(labels):
            raise RegistryError(f"context {self.id!r}: frame dimension {self.frame.dim} != {len(labels)} labels")

    @property
    def n(self) -> int:
        return len(self.labels)

    def modality(self, i: int) -> Modality:
        return Modality(self.id, i)


class ExtravalenceRegistry:
    """Union-find over the modalities of a system with ``n_outcomes`` outcomes.

    Class ids are the minimal member modality, minimal meaning earliest
    registered context first, then lowest outcome index.
    """

    def __init__(self, n_outcomes: int):
        if n_outcomes < 2:
            raise RegistryError("a system needs at least 2 outcomes")
        self.n_outcomes = n_outcomes
        self.contexts: dict = {}
        self._order: dict = {}
        self._parent: dict = {}
        self._members: dict = {}

    def register_context(self, ctx: Context) -> "ExtravalenceRegistry":
        if ctx.id in self.contexts:
            raise RegistryError(f"context {ctx.id!r} already registered")
        if ctx.n != self.n_outcomes:
            raise RegistryError(
                f"context {ctx.id!r} has {ctx.n} outcomes; this system has {self.n_outcomes} in every context"
            )
        self._order[ctx.id] = len(self.contexts)
        self.contexts[ctx.id] = ctx
        for i in range(ctx.n):
            m = Modality(ctx.id, i)
            self._parent[m] = m
            self._members[m] = [m]
        return self

    def _key(self, m: Modality):
        return (self._order[m.context], m.index)

    def _check(self, m) -> Modality:
        m = Modality(*m)
        if m not in self._parent:
            raise RegistryError(f"modality {tuple(m)!r} is not registered")
        return m

    def _find(self, m: Modality) -> Modality:
        root = m
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[m] != root:
            self._parent[m], m = root, self._parent[m]
        return root

    def link_certain(self, m1, m2) -> "ExtravalenceRegistry":
        m1, m2 = self._check(m1), self._check(m2)
        r1, r2 = self._find(m1), self._find(m2)
        if r1 == r2:
            return self
        ctx1 = {m.context: m for m in self._members[r1]}
        for m in self._members[r2]:
            if m.context in ctx1:
                raise ExclusivityError(
                    f"linking {tuple(m1)} and {tuple(m2)} would make {tuple(ctx1[m.context])} "
                    f"and {tuple(m)} of context {m.context!r} extravalent"
                )
        # the root is always the minimal member, so class ids stay canonical
        if self._key(r2) < self._key(r1):
            r1, r2 = r2, r1
        self._parent[r2] = r1
        self._members[r1] = sorted(self._members[r1] + self._members.pop(r2), key=self._key)
        return self

    def class_of(self, m) -> Modality:
        return self._find(self._check(m))

    def members(self, class_id) -> list[Modality]:
        return list(self._members[self.class_of(class_id)])

    def classes(self) -> dict:
        return {root: list(ms) for root, ms in sorted(self._members.items(), key=lambda kv: self._key(kv[0]))}

    @property
    def n_classes(self) -> int:
        return len(self._members)

    def __len__(self):
        return len(self._parent)

    def to_dict(self) -> dict:
        links = []
        for root, ms in self.classes().items():
            links.extend([[ms[0].context, ms[0].index], [m.context, m.index]] for m in ms[1:])
        return {
            "n": self.n_outcomes,
            "contexts": [{"id": c.id, "labels": list(c.labels)} for c in self.contexts.values()],
            "links": links,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExtravalenceRegistry":
        ctxs = d["contexts"]
        n = d.get("n", len(ctxs[0]["labels"]) if ctxs else 2)
        reg = cls(n)
        for c in ctxs:
            reg.register_context(Context(c["id"], tuple(c["labels"])))
        for a, b in d.get("links", []):
            reg.link_certain(tuple(a), tuple(b))
        return reg

    @classmethod
    def from_json(cls, text: str) -> "ExtravalenceRegistry":
        return cls.from_dict(json.loads(text))


@dataclass
class Report:
    passed: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def validate_rule_I(prob_rows: Iterable[Sequence[float]], tol: float = TOL_RULE_I) -> Report:
    """Each context's outcome probabilities sum to one, and certainty excludes the rest."""
    violations = []
    for k, row in enumerate(prob_rows):
        row = np.asarray(row, dtype=float)
        s = row.sum()
        if abs(s - 1.0) > tol:
            violations.append({"context": k, "kind": "sum", "value": float(s)})
        certain = np.nonzero(row >= 1.0 - tol)[0]
        if certain.size:
            others = np.delete(row, certain[0])
            if np.any(others > tol):
                violations.append({"context": k, "kind": "exclusivity", "certain": int(certain[0]),
                                   "others": others.tolist()})
    return Report(not violations, violations)


def _group_by_class_pair(reg, observations):
    groups = defaultdict(list)
    for obs in observations:
        m_i, m_f = obs[0], obs[1]
        groups[(reg.class_of(m_i), reg.class_of(m_f))].append(obs)
    return groups


def validate_rule_II(reg: ExtravalenceRegistry, observations, tol: float = TOL_RULE_II) -> Report:
    """Probabilities must depend only on the classes of the two modalities.

    ``observations`` holds ``(m_initial, m_final, probability)`` triples.
    """
    violations = []
    for pair, obs in _group_by_class_pair(reg, observations).items():
        ps = [float(o[2]) for o in obs]
        spread = max(ps) - min(ps)
        if spread > tol:
            violations.append({"classes": pair, "spread": spread, "observations": obs})
    return Report(not violations, violations)


def validate_rule_II_statistical(reg: ExtravalenceRegistry, observations, alpha: float = 1e-3) -> Report:
    """Rule II for Monte Carlo data.

    ``observations`` holds ``(m_initial, m_final, hits, shots)``.  Within a
    class pair every observed frequency is z-tested against the pooled
    frequency at two-sided significance ``alpha``.
    """
    z_crit = norm.isf(alpha / 2.0)
    violations = []
    for pair, obs in _group_by_class_pair(reg, observations).items():
        hits = sum(o[2] for o in obs)
        shots = sum(o[3] for o in obs)
        pooled = hits / shots
        var = pooled * (1.0 - pooled)
        for o in obs:
            freq = o[2] / o[3]
            if var == 0.0:
                z = 0.0 if freq == pooled else np.inf
            else:
                z = (freq - pooled) / np.sqrt(var / o[3])
            if abs(z) > z_crit:
                violations.append({"classes": pair, "observation": o, "z": float(z)})
    return Report(not violations, violations)


def transition_between(reg: ExtravalenceRegistry, c1: Context, c2: Context,
                       class_prob: Callable, tol: float = TOL_STOCH) -> TransitionMatrix:
    """Matrix with entry ``(j, i) = class_prob(class(u_i), class(v_j))``."""
    for c in (c1, c2):
        if c.id not in reg.contexts:
            raise RegistryError(f"context {c.id!r} is not registered")
    n = reg.n_outcomes
    P = np.empty((n, n))
    for i in range(n):
        ci = reg.class_of((c1.id, i))
        for j in range(n):
            P[j, i] = class_prob(ci, reg.class_of((c2.id, j)))
    return validate_stochastic(P, tol)


def born_class_prob(reg: ExtravalenceRegistry) -> Callable:
    """Class-pair probability from the frames attached to registered contexts.

    Any member with a frame represents its class; members of one class are
    expected to share one projector.
    """

    def projector(cls_id):
        for m in reg.members(cls_id):
            frame = reg.contexts[m.context].frame
            if frame is not None:
                return frame[m.index]
        raise RegistryError(f"class {tuple(cls_id)} has no member with an attached frame")

    return lambda a, b: born_probability(projector(a), projector(b))
