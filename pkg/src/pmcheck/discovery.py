"""k-tails (Biermann) state merging over a prefix tree acceptor.

Nodes of the prefix tree are grouped by their k-tail: the set of label
strings of length at most k that can follow the node, each paired with the
accept/reject mark of the node it reaches.  Equal k-tails are merged, the
quotient is folded until deterministic, and the result is normalised.
"""

from __future__ import annotations

import enum
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .automaton import ProcessModel, normalize, run, Outcome

logger = logging.getLogger(__name__)

Word = tuple[str, ...]


class Mark(enum.Enum):
    NONE = "none"
    ACCEPT = "accept"
    REJECT = "reject"


class DiscoveryError(ValueError):
    pass


class ConflictingLabel(DiscoveryError):
    def __init__(self, sequence: Sequence[str]):
        super().__init__(f"sequence is both positive and negative: {' '.join(sequence) or '<empty>'}")
        self.sequence = tuple(sequence)


class MarkConflict(DiscoveryError):
    """A merged class holds both accepting and rejecting nodes; raise k."""

    def __init__(self, nodes: Iterable[int]):
        self.nodes = tuple(sorted(nodes))
        super().__init__(f"merged class {list(self.nodes)} mixes accept and reject marks")


class Inconsistent(DiscoveryError):
    def __init__(self, model: ProcessModel, trace: Sequence[str], why: str):
        super().__init__(f"learned model {why}: {' '.join(trace)}")
        self.model = model
        self.trace = tuple(trace)


@dataclass(frozen=True)
class LabeledSample:
    positives: tuple[Word, ...] = ()
    negatives: tuple[Word, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "positives", tuple(tuple(t) for t in self.positives))
        object.__setattr__(self, "negatives", tuple(tuple(t) for t in self.negatives))

    def check_consistent(self) -> None:
        clash = set(self.positives) & set(self.negatives)
        if clash:
            raise ConflictingLabel(min(clash))

    def with_examples(self, positives: Iterable[Sequence[str]] = (),
                      negatives: Iterable[Sequence[str]] = ()) -> "LabeledSample":
        return LabeledSample(self.positives + tuple(tuple(t) for t in positives),
                             self.negatives + tuple(tuple(t) for t in negatives))

    @property
    def max_length(self) -> int:
        return max((len(t) for t in self.positives + self.negatives), default=0)


@dataclass
class PtaNode:
    id: int
    children: dict[str, int] = field(default_factory=dict)
    mark: Mark = Mark.NONE


@dataclass
class Pta:
    nodes: list[PtaNode]

    @property
    def root(self) -> PtaNode:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    def walk(self, word: Sequence[str]) -> PtaNode | None:
        node = self.root
        for label in word:
            child = node.children.get(label)
            if child is None:
                return None
            node = self.nodes[child]
        return node


def build_pta(sample: LabeledSample) -> Pta:
    """Prefix tree marking positive ends Accept and negative ends Reject."""
    nodes = [PtaNode(0)]
    labelled = [(t, Mark.ACCEPT) for t in sample.positives]
    labelled += [(t, Mark.REJECT) for t in sample.negatives]
    for word, mark in labelled:
        node = nodes[0]
        for label in word:
            child = node.children.get(label)
            if child is None:
                child = len(nodes)
                nodes.append(PtaNode(child))
                node.children[label] = child
            node = nodes[child]
        if node.mark not in (Mark.NONE, mark):
            raise ConflictingLabel(word)
        node.mark = mark
    return Pta(nodes)


Signature = frozenset[tuple[Word, Mark]]


def ktail_signature(pta: Pta, node: int, k: int) -> Signature:
    """All ``(w, mark)`` with ``|w| <= k`` readable from *node* in the tree."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out: set[tuple[Word, Mark]] = set()
    stack: list[tuple[int, Word]] = [(node, ())]
    while stack:
        n, w = stack.pop()
        out.add((w, pta.nodes[n].mark))
        if len(w) < k:
            for label, child in pta.nodes[n].children.items():
                stack.append((child, w + (label,)))
    return frozenset(out)


@dataclass(frozen=True)
class KtailPartition:
    classes: tuple[frozenset[int], ...]
    k: int

    def class_of(self) -> dict[int, int]:
        return {n: i for i, cls in enumerate(self.classes) for n in cls}


def ktail_partition(pta: Pta, k: int) -> KtailPartition:
    groups: dict[Signature, list[int]] = defaultdict(list)
    for node in pta.nodes:
        groups[ktail_signature(pta, node.id, k)].append(node.id)
    classes = sorted((frozenset(g) for g in groups.values()), key=min)
    return KtailPartition(tuple(classes), k)


def quotient_nfa(pta: Pta, partition: KtailPartition
                 ) -> tuple[set[tuple[int, str, int]], int, set[int]]:
    """Unfolded quotient as ``(edges, initial class, accepting classes)``."""
    cls = partition.class_of()
    edges = {(cls[n.id], label, cls[c]) for n in pta.nodes for label, c in n.children.items()}
    accepting = {cls[n.id] for n in pta.nodes if n.mark is Mark.ACCEPT}
    return edges, cls[0], accepting


def nfa_accepts(edges: set[tuple[int, str, int]], initial: int, accepting: set[int],
                word: Sequence[str]) -> bool:
    current = {initial}
    for label in word:
        current = {d for s, a, d in edges if s in current and a == label}
        if not current:
            return False
    return bool(current & accepting)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root


def quotient(pta: Pta, partition: KtailPartition) -> ProcessModel:
    """Merge each class, then fold same-labelled targets until deterministic."""
    uf = _UnionFind(len(pta))
    children = [dict(n.children) for n in pta.nodes]

    def merge(a: int, b: int) -> None:
        pending = [(a, b)]
        while pending:
            x, y = pending.pop()
            x, y = uf.find(x), uf.find(y)
            if x == y:
                continue
            if y < x:
                x, y = y, x
            uf.parent[y] = x
            for label, t in children[y].items():
                mine = children[x].get(label)
                if mine is None:
                    children[x][label] = t
                else:
                    pending.append((mine, t))
            children[y] = {}

    for cls in partition.classes:
        members = sorted(cls)
        for other in members[1:]:
            merge(members[0], other)

    marks: dict[int, set[Mark]] = defaultdict(set)
    members: dict[int, list[int]] = defaultdict(list)
    for n in pta.nodes:
        rep = uf.find(n.id)
        marks[rep].add(n.mark)
        members[rep].append(n.id)
    for rep, found in marks.items():
        if Mark.ACCEPT in found and Mark.REJECT in found:
            raise MarkConflict(members[rep])

    name = {rep: f"c{rep}" for rep in members}
    delta = {}
    alphabet = set()
    for rep in members:
        for label, t in children[rep].items():
            delta[(name[rep], label)] = name[uf.find(t)]
            alphabet.add(label)
    return ProcessModel(
        states=frozenset(name.values()),
        alphabet=frozenset(alphabet),
        delta=delta,
        initial=name[uf.find(0)],
        end_states=frozenset(name[r] for r, m in marks.items() if Mark.ACCEPT in m),
        sink_states=frozenset(name[r] for r, m in marks.items() if Mark.REJECT in m),
    )


def discover(sample: LabeledSample, k: int) -> ProcessModel:
    """Learn a normalised process model consistent with *sample*."""
    sample = LabeledSample(tuple(dict.fromkeys(sample.positives)),
                           tuple(dict.fromkeys(sample.negatives)))
    sample.check_consistent()
    pta = build_pta(sample)
    partition = ktail_partition(pta, k)
    logger.debug("k=%d: %d PTA nodes in %d classes", k, len(pta), len(partition.classes))
    model = normalize(quotient(pta, partition))
    for trace in sample.positives:
        if run(model, trace).kind is not Outcome.END:
            raise Inconsistent(model, trace, "does not accept positive trace")
    for trace in sample.negatives:
        if run(model, trace).kind is Outcome.END:
            raise Inconsistent(model, trace, "accepts negative trace")
    return model


# --------------------------------------------------------------------------
# Sample files


def parse_sample(text: str) -> LabeledSample:
    """One trace per line; lines after ``#negative`` are negative examples.

    A ``#positive`` header switches back.  Blank lines and other ``#``
    comments are ignored.
    """
    pos: list[Word] = []
    neg: list[Word] = []
    target = pos
    for raw in text.splitlines():
        line = raw.strip()
        low = line.lower()
        if low.startswith("#negative"):
            target = neg
            continue
        if low.startswith("#positive"):
            target = pos
            continue
        if not line or line.startswith("#"):
            continue
        target.append(tuple(line.split()))
    return LabeledSample(tuple(pos), tuple(neg))


def format_sample(sample: LabeledSample) -> str:
    lines = [" ".join(t) for t in sample.positives]
    if sample.negatives:
        lines.append("#negative")
        lines.extend(" ".join(t) for t in sample.negatives)
    return "\n".join(lines) + "\n"
