"""Kochen-Specker style incidence structures.

Contexts are hyperedges over extravalence classes.  A noncontextual truth
assignment marks exactly one class true in every context, and a class
carries one truth value wherever it appears.  Counting gives a quick
refutation: if every class occurs an even number of times, the number of
true slots is even, so an odd number of contexts is impossible.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import ProjectorFrame

SAT = "SAT"
UNSAT = "UNSAT"
INDETERMINATE = "INDETERMINATE"

MAX_EXHAUSTIVE_CLASSES = 40
DEFAULT_LIMIT = 1 << 24
_CHUNK = 1 << 16


class StructureError(ValueError):
    pass


class ParseError(StructureError):
    def __init__(self, message: str, line: Optional[int] = None, position: Optional[int] = None):
        self.line = line
        self.position = position
        where = ""
        if line is not None:
            where = f"line {line}" + (f", position {position}" if position is not None else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class IncidenceStructure:
    contexts: tuple
    n_classes: int

    def __post_init__(self):
        ctxs = tuple(tuple(int(c) for c in ctx) for ctx in self.contexts)
        object.__setattr__(self, "contexts", ctxs)
        if not ctxs:
            raise StructureError("structure has no contexts")
        n = len(ctxs[0])
        for k, ctx in enumerate(ctxs):
            if len(ctx) != n:
                raise StructureError(f"context {k} has {len(ctx)} classes, expected {n} like the others")
            if len(set(ctx)) != len(ctx):
                dup = [c for c, m in Counter(ctx).items() if m > 1]
                raise StructureError(f"context {k} repeats class {dup[0]}; outcomes of one context are exclusive")
            for c in ctx:
                if not 0 <= c < self.n_classes:
                    raise StructureError(f"context {k}: class {c} outside 0..{self.n_classes - 1}")
        missing = set(range(self.n_classes)) - {c for ctx in ctxs for c in ctx}
        if missing:
            raise StructureError(f"classes never used by any context: {sorted(missing)}")

    @property
    def n_outcomes(self) -> int:
        return len(self.contexts[0])

    @property
    def n_contexts(self) -> int:
        return len(self.contexts)

    def multiplicities(self) -> list[int]:
        counts = Counter(c for ctx in self.contexts for c in ctx)
        return [counts[c] for c in range(self.n_classes)]

    def to_text(self) -> str:
        return "".join(",".join(map(str, ctx)) + "\n" for ctx in self.contexts)

    def to_dict(self) -> dict:
        return {"n_outcomes": self.n_outcomes, "n_classes": self.n_classes,
                "contexts": [list(c) for c in self.contexts]}


def parse_structure(source) -> IncidenceStructure:
    """Parse the text format (one context per line) or a JSON document / dict."""
    if isinstance(source, dict):
        return _from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
        return _from_dict(d)
    contexts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        ctx = []
        pos = 0
        for tok in line.split(","):
            stripped = tok.strip()
            col = pos + (len(tok) - len(tok.lstrip())) + 1
            try:
                ctx.append(int(stripped))
            except ValueError:
                raise ParseError(f"expected a class id, got {stripped!r}", lineno, col) from None
            pos += len(tok) + 1
        contexts.append(ctx)
    if not contexts:
        raise ParseError("no contexts found")
    n_classes = max(max(c) for c in contexts) + 1
    if min(min(c) for c in contexts) < 0:
        raise ParseError("class ids must be nonnegative")
    return IncidenceStructure(tuple(map(tuple, contexts)), n_classes)


def _from_dict(d: dict) -> IncidenceStructure:
    try:
        contexts = [list(map(int, c)) for c in d["contexts"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad structure record: {exc}") from exc
    n_classes = int(d.get("n_classes", max(max(c) for c in contexts) + 1))
    s = IncidenceStructure(tuple(map(tuple, contexts)), n_classes)
    if "n_outcomes" in d and int(d["n_outcomes"]) != s.n_outcomes:
        raise StructureError(f"declared n_outcomes={d['n_outcomes']} but contexts have {s.n_outcomes}")
    return s


@dataclass(frozen=True)
class ParityCertificate:
    n_contexts: int
    multiplicities: tuple

    def to_dict(self) -> dict:
        return {"n_contexts": self.n_contexts, "multiplicities": list(self.multiplicities)}


def parity_check(s: IncidenceStructure) -> Optional[ParityCertificate]:
    mult = s.multiplicities()
    if s.n_contexts % 2 == 1 and all(m % 2 == 0 for m in mult):
        return ParityCertificate(s.n_contexts, tuple(mult))
    return None


@dataclass
class SearchResult:
    status: str
    assignment: Optional[tuple] = None
    certificate: object = None  # ParityCertificate or "exhausted"
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"status": self.status, "stats": self.stats}
        if self.assignment is not None:
            out["assignment"] = [int(v) for v in self.assignment]
            out["true_classes"] = [c for c, v in enumerate(self.assignment) if v]
        if isinstance(self.certificate, ParityCertificate):
            out["certificate"] = {"kind": "parity", **self.certificate.to_dict()}
        elif self.certificate is not None:
            out["certificate"] = {"kind": str(self.certificate)}
        return out


def check_assignment(s: IncidenceStructure, assignment) -> bool:
    """Exactly one true class in every context."""
    if len(assignment) != s.n_classes:
        return False
    return all(sum(bool(assignment[c]) for c in ctx) == 1 for ctx in s.contexts)


def _exhaustive(s: IncidenceStructure, limit: int) -> SearchResult:
    n = s.n_classes
    total = 1 << n
    if n > MAX_EXHAUSTIVE_CLASSES or total > limit:
        return SearchResult(INDETERMINATE, stats={
            "reason": f"exhaustive search over 2^{n} assignments exceeds limit {limit}"})
    # code bit (n-1-c) set means class c is FALSE; ascending codes then walk the
    # assignments in lexicographic order with "true" ranked first
    shifts = np.array([n - 1 - c for c in range(n)], dtype=np.int64)
    masks = [np.array([1 << int(shifts[c]) for c in ctx], dtype=np.int64) for ctx in s.contexts]
    checked = 0
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        ok = np.ones(codes.size, dtype=bool)
        for m in masks:
            n_true = np.zeros(codes.size, dtype=np.int64)
            for bit in m:
                n_true += (codes & bit) == 0
            ok &= n_true == 1
        checked += codes.size
        hits = np.flatnonzero(ok)
        if hits.size:
            code = int(codes[hits[0]])
            assignment = tuple(not (code >> int(shifts[c])) & 1 for c in range(n))
            return SearchResult(SAT, assignment, stats={"mode": "exhaustive", "checked": checked})
    return SearchResult(UNSAT, certificate="exhausted", stats={"mode": "exhaustive", "checked": checked})


def _backtracking(s: IncidenceStructure, limit: int) -> SearchResult:
    n = s.n_classes
    contexts = s.contexts
    in_contexts = [[] for _ in range(n)]
    for k, ctx in enumerate(contexts):
        for c in ctx:
            in_contexts[c].append(k)
    value: list = [None] * n
    nodes = 0

    def assign(c, v, trail) -> bool:
        """Set class c and propagate; False on conflict."""
        stack = [(c, v)]
        while stack:
            c, v = stack.pop()
            if value[c] is not None:
                if value[c] != v:
                    return False
                continue
            value[c] = v
            trail.append(c)
            for k in in_contexts[c]:
                ctx = contexts[k]
                trues = [d for d in ctx if value[d] is True]
                if len(trues) > 1:
                    return False
                free = [d for d in ctx if value[d] is None]
                if trues:
                    stack.extend((d, False) for d in free)
                elif not free:
                    return False
                elif len(free) == 1:
                    stack.append((free[0], True))
        return True

    def undo(trail):
        for c in trail:
            value[c] = None

    def pick_context():
        best, best_free = None, None
        for k, ctx in enumerate(contexts):
            if any(value[d] is True for d in ctx):
                continue
            free = [d for d in ctx if value[d] is None]
            if best is None or len(free) < len(best_free):
                best, best_free = k, free
        return best, best_free

    def solve() -> Optional[bool]:
        nonlocal nodes
        k, free = pick_context()
        if k is None:
            return True
        for c in free:
            nodes += 1
            if nodes > limit:
                return None
            trail = []
            if assign(c, True, trail):
                res = solve()
                if res is not False:
                    return res
            undo(trail)
        return False

    res = solve()
    stats = {"mode": "backtracking", "nodes": nodes}
    if res is None:
        return SearchResult(INDETERMINATE, stats={**stats, "reason": f"node limit {limit} exceeded"})
    if res is False:
        return SearchResult(UNSAT, certificate="exhausted", stats=stats)
    assignment = tuple(bool(v) for v in value)
    return SearchResult(SAT, assignment, stats=stats)


def search_assignment(s: IncidenceStructure, mode: str = "backtracking", limit: int = DEFAULT_LIMIT,
                      use_parity: bool = True) -> SearchResult:
    """Look for a noncontextual truth assignment.

    ``limit`` caps the number of assignments (exhaustive) or search nodes
    (backtracking); hitting it gives an INDETERMINATE result.
    """
    if mode not in ("exhaustive", "backtracking"):
        raise ValueError(f"unknown mode {mode!r}")
    if use_parity:
        cert = parity_check(s)
        if cert is not None:
            return SearchResult(UNSAT, certificate=cert, stats={"mode": "parity"})
    res = _exhaustive(s, limit) if mode == "exhaustive" else _backtracking(s, limit)
    if res.status == SAT and not check_assignment(s, res.assignment):
        raise AssertionError("search produced an assignment that fails re-validation")
    return res


def generate_cabello_shape(seed: int = 0) -> IncidenceStructure:
    """Nine contexts of four slots, eighteen classes each used exactly twice.

    Class ids are relabelled in order of first appearance.
    """
    rng = np.random.default_rng(seed)
    slots = np.repeat(np.arange(18), 2)
    while True:
        rng.shuffle(slots)
        ctxs = slots.reshape(9, 4)
        if all(len(set(row)) == 4 for row in ctxs):
            break
    relabel = {}
    for c in ctxs.ravel():
        relabel.setdefault(int(c), len(relabel))
    return IncidenceStructure(tuple(tuple(relabel[int(c)] for c in row) for row in ctxs), 18)


def random_structure(rng, n_classes: int, n_contexts: int, n_outcomes: int) -> IncidenceStructure:
    """Random structure with every class used at least once.

    The first contexts cover a shuffled list of all classes; the rest are
    drawn freely.  Context order is shuffled at the end.
    """
    rng = np.random.default_rng(rng)
    if n_contexts * n_outcomes < n_classes or n_outcomes > n_classes:
        raise ValueError("not enough slots to use every class")
    order = rng.permutation(n_classes).tolist()
    ctxs = []
    for start in range(0, n_classes, n_outcomes):
        chunk = order[start:start + n_outcomes]
        rest = [c for c in range(n_classes) if c not in chunk]
        chunk += rng.choice(rest, n_outcomes - len(chunk), replace=False).tolist()
        ctxs.append(tuple(chunk))
    while len(ctxs) < n_contexts:
        ctxs.append(tuple(rng.choice(n_classes, n_outcomes, replace=False).tolist()))
    ctxs = [ctxs[k] for k in rng.permutation(len(ctxs))]
    return IncidenceStructure(tuple(ctxs), n_classes)


@dataclass
class RealizationReport:
    passed: bool
    violations: list = field(default_factory=list)
    frames: Optional[list] = None

    def __bool__(self):
        return self.passed


def realize_with_vectors(s: IncidenceStructure, vectors, tol: float = 1e-10) -> RealizationReport:
    """Check that the vectors assigned to each context form an orthonormal basis.

    ``vectors`` maps class id to a vector (a dict or a sequence indexed by
    class id).  Vectors are used as given: a non-unit vector is reported.
    """
    n = s.n_outcomes
    vec = {}
    for c in range(s.n_classes):
        try:
            v = vectors[c]
        except (KeyError, IndexError):
            raise StructureError(f"no vector for class {c}") from None
        v = np.asarray(v, dtype=np.complex128).ravel()
        if v.size != n:
            raise StructureError(f"vector for class {c} has dimension {v.size}, expected {n}")
        vec[c] = v
    violations = []
    for c, v in vec.items():
        if abs(np.linalg.norm(v) - 1.0) > tol:
            violations.append({"kind": "norm", "class": c, "norm": float(np.linalg.norm(v))})
    for k, ctx in enumerate(s.contexts):
        for a in range(n):
            for b in range(a + 1, n):
                ov = abs(np.vdot(vec[ctx[a]], vec[ctx[b]]))
                if ov > tol:
                    violations.append({"kind": "overlap", "context": k,
                                       "pair": (ctx[a], ctx[b]), "overlap": float(ov)})
    if violations:
        return RealizationReport(False, violations)
    frames = [ProjectorFrame(np.column_stack([vec[c] for c in ctx])) for ctx in s.contexts]
    return RealizationReport(True, frames=frames)
