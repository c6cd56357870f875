"""Per-agent Repage memory: a DAG of evaluation predicates.

Layout for one ``(target, role)``::

    outcome leaves ───────────────────────────────┐
    reported leaf ─> valued-information ─> shared-evaluation ─> image
    reported leaf ─> valued-information ─> shared-voice ─────> reputation

Each valued-information node holds one informer's latest report, weighted
by trust in that informer.  For seller-quality reports the trust is read
live from the informer's ``informer-accuracy`` image, which is therefore
linked in as an extra antecedent; reports about informer accuracy use the
trust current at receipt, so the accuracy layer never depends on itself
and the graph stays acyclic.

Image and reputation never share a node: nothing told as reputation can
reach an image.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Set, Tuple

from .evaluation import (
    W_SAT,
    Distribution,
    expected_quality,
    format_distribution,
    pool,
    quality_to_distribution,
    strength_of,
)

DEFAULT_IDK_THRESHOLD = 0.3
PRIOR_TRUST = 0.5
#: weight of a voice from an informer not yet assessed
VOICE_PRIOR_TRUST = 1.0


class Role(str, enum.Enum):
    SELLER = "seller-quality"
    INFORMER = "informer-accuracy"


class Kind(str, enum.Enum):
    OUTCOME = "outcome"
    VALUED_INFORMATION = "valued-information"
    REPORTED = "reported-evaluation"
    SHARED_EVALUATION = "shared-evaluation"
    SHARED_VOICE = "shared-voice"
    IMAGE = "image"
    REPUTATION = "reputation"


class Channel(str, enum.Enum):
    IMAGE = "image"
    REPUTATION = "reputation"


LEAF_KINDS = frozenset({Kind.OUTCOME, Kind.REPORTED})
_POOL_OF = {Channel.IMAGE: Kind.SHARED_EVALUATION, Channel.REPUTATION: Kind.SHARED_VOICE}
_ROOT_OF = {Channel.IMAGE: Kind.IMAGE, Channel.REPUTATION: Kind.REPUTATION}


class MemoryCorruption(RuntimeError):
    """The dependency graph violated an invariant (e.g. a cycle)."""


@dataclass
class Predicate:
    id: int
    kind: Kind
    target: int
    role: Role
    turn: int
    informer: Optional[int] = None
    channel: Optional[Channel] = None
    distribution: Optional[Distribution] = None
    #: total aggregated weight; strength is this saturated at W_SAT
    mass: float = 0.0
    #: receipt-time trust for reports that are not trust-linked
    fixed_trust: Optional[float] = None
    antecedents: Set[int] = field(default_factory=set)
    consequents: Set[int] = field(default_factory=set)

    @property
    def strength(self) -> float:
        return strength_of(self.mass)

    @property
    def has_value(self) -> bool:
        return self.distribution is not None and self.mass > 0.0


@dataclass(frozen=True)
class Evaluation:
    distribution: Distribution
    strength: float


@dataclass(frozen=True)
class Answer:
    """Reply to a question; both channels empty means I-don't-know."""

    image: Optional[Evaluation] = None
    reputation: Optional[Evaluation] = None
    #: target the evaluations are about (set for recommendations)
    about: Optional[int] = None

    @property
    def variant(self) -> str:
        if self.image is not None and self.reputation is not None:
            return "both"
        if self.image is not None:
            return "image"
        if self.reputation is not None:
            return "reputation"
        return "i-dont-know"

    @property
    def is_idk(self) -> bool:
        return self.image is None and self.reputation is None


IDK = Answer()

Value = Tuple[Optional[Distribution], float]


class RepageMemory:
    """Dependency graph of one agent's evaluations.

    Every ``record_*`` call returns the change-set: ids of the nodes that
    were created or recomputed, in the order they were touched.
    """

    def __init__(self, owner: int, idk_threshold: float = DEFAULT_IDK_THRESHOLD):
        self.owner = owner
        self.idk_threshold = idk_threshold
        self.nodes: Dict[int, Predicate] = {}
        self._next_id = 0
        self._roots: Dict[Tuple[int, Role, Kind], int] = {}
        self._by_kind: Dict[Tuple[Role, Kind], Dict[int, Predicate]] = {}
        self._valued: Dict[Tuple[Channel, int, int, Role], int] = {}
        # informer -> seller-role valued-information ids that use its accuracy
        self._trust_users: Dict[int, List[int]] = {}
        self.recompute_count = 0

    # -- graph plumbing -------------------------------------------------

    def _new(self, kind: Kind, target: int, role: Role, turn: int, **kw) -> Predicate:
        node = Predicate(self._next_id, kind, target, role, turn, **kw)
        self.nodes[node.id] = node
        self._next_id += 1
        return node

    def _link(self, src: int, dst: int) -> None:
        self.nodes[src].consequents.add(dst)
        self.nodes[dst].antecedents.add(src)

    def _unlink_and_drop(self, nid: int) -> None:
        node = self.nodes.pop(nid)
        for c in node.consequents:
            self.nodes[c].antecedents.discard(nid)
        for a in node.antecedents:
            self.nodes[a].consequents.discard(nid)

    def _root(self, target: int, role: Role, kind: Kind, turn: int) -> Predicate:
        key = (target, role, kind)
        nid = self._roots.get(key)
        if nid is not None:
            return self.nodes[nid]
        node = self._new(kind, target, role, turn)
        self._roots[key] = node.id
        self._by_kind.setdefault((role, kind), {})[target] = node
        if kind is Kind.SHARED_EVALUATION:
            self._link(node.id, self._root(target, role, Kind.IMAGE, turn).id)
        elif kind is Kind.SHARED_VOICE:
            self._link(node.id, self._root(target, role, Kind.REPUTATION, turn).id)
        elif kind is Kind.IMAGE and role is Role.INFORMER:
            for vid in self._trust_users.get(target, ()):
                self._link(node.id, vid)
        return node

    def node_for(self, target: int, role: Role, kind: Kind) -> Optional[Predicate]:
        nid = self._roots.get((target, role, kind))
        return None if nid is None else self.nodes[nid]

    def nodes_of(self, target: int, role: Role, kind: Kind) -> List[Predicate]:
        return [
            n for n in self.nodes.values()
            if n.target == target and n.role is role and n.kind is kind
        ]

    # -- evaluation -----------------------------------------------------

    def _trust_from(self, value: Optional[Value], prior: float = PRIOR_TRUST) -> float:
        if value is None:
            return prior
        dist, mass = value
        if dist is None or mass <= 0.0 or strength_of(mass) < self.idk_threshold:
            return prior
        return min(1.0, max(0.0, (expected_quality(dist) - 10.0) / 80.0))

    def _evaluate(self, node: Predicate, value_of: Callable[[int], Value]) -> Value:
        kind = node.kind
        if kind in LEAF_KINDS:
            return node.distribution, node.mass
        if kind is Kind.VALUED_INFORMATION:
            leaf_id = trust_id = None
            for a in node.antecedents:
                if self.nodes[a].kind is Kind.REPORTED:
                    leaf_id = a
                else:
                    trust_id = a
            if leaf_id is None:
                raise MemoryCorruption(f"valued-information {node.id} has no report")
            dist, mass = value_of(leaf_id)
            if node.fixed_trust is not None:
                trust = node.fixed_trust
            else:
                prior = VOICE_PRIOR_TRUST if node.channel is Channel.REPUTATION else PRIOR_TRUST
                trust = prior if trust_id is None else self._trust_from(value_of(trust_id), prior)
            return dist, mass * trust
        # every antecedent contributes its evaluation weighted by its mass
        pooled = pool(value_of(a) for a in sorted(node.antecedents))
        if pooled is None:
            return None, 0.0
        return pooled

    def _stored(self, nid: int) -> Value:
        n = self.nodes[nid]
        return n.distribution, n.mass

    def _affected_in_order(self, start: int) -> List[int]:
        """Transitive consequents of ``start`` in topological order."""
        order: List[int] = []
        state: Dict[int, int] = {}  # 1 = on stack, 2 = done
        stack: List[Tuple[int, Iterator[int]]] = [(start, iter(sorted(self.nodes[start].consequents)))]
        state[start] = 1
        while stack:
            nid, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                state[nid] = 2
                order.append(nid)
                continue
            s = state.get(nxt)
            if s == 1:
                raise MemoryCorruption(f"cycle through predicate {nxt}")
            if s is None:
                state[nxt] = 1
                stack.append((nxt, iter(sorted(self.nodes[nxt].consequents))))
        order.reverse()
        return order[1:]

    def recompute(self, changed: int) -> List[int]:
        """Recompute every transitive consequent of ``changed`` once."""
        if changed not in self.nodes:
            raise KeyError(changed)
        touched = self._affected_in_order(changed)
        for nid in touched:
            node = self.nodes[nid]
            node.distribution, node.mass = self._evaluate(node, self._stored)
            self.recompute_count += 1
        return touched

    def full_recompute(self) -> Dict[int, Tuple[Optional[Distribution], float]]:
        """Recompute all nodes from the leaves, ignoring cached values.

        Returns ``{id: (distribution, strength)}``; the memory itself is not
        modified.
        """
        indeg = {nid: len(n.antecedents) for nid, n in self.nodes.items()}
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        values: Dict[int, Value] = {}
        seen = 0
        while ready:
            nid = ready.pop()
            node = self.nodes[nid]
            values[nid] = self._evaluate(node, values.__getitem__)
            seen += 1
            for c in node.consequents:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if seen != len(self.nodes):
            raise MemoryCorruption("dependency graph has a cycle")
        return {nid: (d, strength_of(m)) for nid, (d, m) in values.items()}

    def snapshot(self) -> Dict[int, Tuple[Optional[Distribution], float]]:
        """Cached ``{id: (distribution, strength)}`` for comparison with
        :meth:`full_recompute`."""
        return {nid: (n.distribution, n.strength) for nid, n in self.nodes.items()}

    # -- events ---------------------------------------------------------

    def record_outcome(self, target: int, role: Role, q: float, turn: int) -> List[int]:
        image = self._root(target, role, Kind.IMAGE, turn)
        leaf = self._new(
            Kind.OUTCOME, target, role, turn,
            distribution=quality_to_distribution(q), mass=1.0,
        )
        self._link(leaf.id, image.id)
        return [leaf.id] + self.recompute(leaf.id)

    def _record_report(
        self, channel: Channel, informer: int, target: int, role: Role,
        d: Distribution, turn: int,
    ) -> List[int]:
        if informer == self.owner:
            raise ValueError("an agent cannot inform itself")
        created: List[int] = []
        key = (channel, informer, target, role)
        vid = self._valued.get(key)
        if vid is None:
            pooled_node = self._root(target, role, _POOL_OF[channel], turn)
            vi = self._new(Kind.VALUED_INFORMATION, target, role, turn,
                           informer=informer, channel=channel)
            self._valued[key] = vi.id
            self._link(vi.id, pooled_node.id)
            if role is Role.SELLER:
                # the trust link is made now or when the informer is first judged
                self._trust_users.setdefault(informer, []).append(vi.id)
                trust_node = self.node_for(informer, Role.INFORMER, Kind.IMAGE)
                if trust_node is not None:
                    self._link(trust_node.id, vi.id)
            created.append(vi.id)
        else:
            vi = self.nodes[vid]
            for a in list(vi.antecedents):
                if self.nodes[a].kind is Kind.REPORTED:
                    self._unlink_and_drop(a)
        if role is Role.INFORMER:
            vi.fixed_trust = self.informer_trust(informer, channel)
        leaf = self._new(Kind.REPORTED, target, role, turn, informer=informer,
                         channel=channel, distribution=tuple(d), mass=1.0)
        self._link(leaf.id, vi.id)
        created.append(leaf.id)
        return created + self.recompute(leaf.id)

    def record_told_image(self, informer: int, target: int, role: Role,
                          d: Distribution, turn: int) -> List[int]:
        return self._record_report(Channel.IMAGE, informer, target, role, d, turn)

    def record_told_reputation(self, informer: int, target: int, role: Role,
                               d: Distribution, turn: int) -> List[int]:
        return self._record_report(Channel.REPUTATION, informer, target, role, d, turn)

    # -- queries --------------------------------------------------------

    def _evaluation(self, target: int, role: Role, kind: Kind) -> Optional[Evaluation]:
        node = self.node_for(target, role, kind)
        if node is None or not node.has_value or node.strength < self.idk_threshold:
            return None
        return Evaluation(node.distribution, node.strength)  # type: ignore[arg-type]

    def evaluations(self, role: Role, kind: Kind) -> Iterator[Tuple[int, Evaluation]]:
        """Every ``(target, evaluation)`` of this kind that passes the
        I-don't-know threshold."""
        for target, dist in self.usable(role, kind):
            node = self._by_kind[(role, kind)][target]
            yield target, Evaluation(dist, node.strength)

    def usable(self, role: Role, kind: Kind) -> Iterator[Tuple[int, Distribution]]:
        thr = self.idk_threshold
        for target, node in self._by_kind.get((role, kind), {}).items():
            m = node.mass
            if m > 0.0 and node.distribution is not None and min(1.0, m / W_SAT) >= thr:
                yield target, node.distribution

    def image(self, target: int, role: Role) -> Optional[Evaluation]:
        return self._evaluation(target, role, Kind.IMAGE)

    def reputation(self, target: int, role: Role) -> Optional[Evaluation]:
        return self._evaluation(target, role, Kind.REPUTATION)

    def query(self, target: int, role: Role) -> Answer:
        img = self._evaluation(target, role, Kind.IMAGE)
        rep = self._evaluation(target, role, Kind.REPUTATION)
        if img is None and rep is None:
            return IDK
        return Answer(img, rep)

    def informer_trust(self, informer: int, channel: Channel = Channel.IMAGE) -> float:
        prior = VOICE_PRIOR_TRUST if channel is Channel.REPUTATION else PRIOR_TRUST
        node = self.node_for(informer, Role.INFORMER, Kind.IMAGE)
        if node is None:
            return prior
        return self._trust_from((node.distribution, node.mass), prior)

    # -- checks and debugging --------------------------------------------

    def check_links(self) -> None:
        for nid, n in self.nodes.items():
            for a in n.antecedents:
                if nid not in self.nodes[a].consequents:
                    raise MemoryCorruption(f"{a} -> {nid} missing consequent link")
            for c in n.consequents:
                if nid not in self.nodes[c].antecedents:
                    raise MemoryCorruption(f"{nid} -> {c} missing antecedent link")
            if n.kind in LEAF_KINDS and n.antecedents:
                raise MemoryCorruption(f"leaf {nid} has antecedents")
        self.full_recompute()

    def dump(self) -> str:
        """Deterministic text form of the graph, one node per line."""
        lines = [f"memory owner={self.owner} nodes={len(self.nodes)}"]
        for nid in sorted(self.nodes):
            n = self.nodes[nid]
            dist = "none" if n.distribution is None else format_distribution(n.distribution)
            extra = "" if n.informer is None else f" informer={n.informer}"
            lines.append(
                f"{nid} {n.kind.value} target={n.target} role={n.role.value}{extra}"
                f" turn={n.turn} dist={dist} strength={n.strength:.6f}"
                f" ante={sorted(n.antecedents)} cons={sorted(n.consequents)}"
            )
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.nodes)
