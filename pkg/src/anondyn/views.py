"""History-tree views.

A view is stored as a mapping from node digest to ``Node``.  The digest of
a node is a structural hash of its label, its black parent's digest and the
multiset of its inbound red edges (source digest, multiplicity).  That tuple
fully determines the sub-view whose bottom is the node, so two nodes have
isomorphic sub-views exactly when their digests agree.  Digests
are therefore used as node references: they are unique inside a view and
stable across views, which turns match-and-merge into a dictionary union.

Every function here is pure; ``View`` objects are never mutated after
construction.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

STANDARD = "standard"
GENERALIZED = "generalized"
KINDS = (STANDARD, GENERALIZED)

MAGIC = b"HTv1"
_KIND_BYTE = {STANDARD: 0, GENERALIZED: 1}
_BYTE_KIND = {v: k for k, v in _KIND_BYTE.items()}

DIGEST_SIZE = 16
ROOT = hashlib.blake2b(b"history-tree-root", digest_size=DIGEST_SIZE).digest()


class ViewError(ValueError):
    """Raised on malformed views or invalid operations on views."""


class DecodeError(ViewError):
    pass


# -- varints -----------------------------------------------------------------

def _put_varint(out: bytearray, value: int) -> None:
    if 0 <= value < 0x80:
        out.append(value)
        return
    if value < 0:
        raise ViewError("varints are unsigned")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _get_varint(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise DecodeError("truncated varint")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7


# -- nodes -------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    label: str | None
    parent: bytes | None
    reds: tuple[tuple[bytes, int], ...] = ()  # inbound, sorted by source


@dataclass(frozen=True)
class ViewNode:
    id: bytes
    depth: int
    label: str | None


@dataclass(frozen=True)
class RedEdge:
    src: bytes
    dst: bytes
    multiplicity: int


def node_digest(label: str, parent: bytes, reds: Iterable[tuple[bytes, int]]) -> bytes:
    h = hashlib.blake2b(digest_size=DIGEST_SIZE)
    buf = bytearray()
    lab = label.encode("utf-8")
    _put_varint(buf, len(lab))
    buf += lab
    buf += parent
    for src, m in reds:
        buf += src
        _put_varint(buf, m)
    h.update(bytes(buf))
    return h.digest()


_ROOT_NODE = Node(None, None, ())


def _fold_reds(reds: Iterable[tuple[bytes, int]]) -> tuple[tuple[bytes, int], ...]:
    acc: Counter[bytes] = Counter()
    for src, m in reds:
        acc[src] += m
    return tuple(sorted(acc.items()))


# -- the view value ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class View:
    """An immutable history-tree view.

    ``nodes`` is in topological order (every node after its parent and its
    red sources).  ``bottom`` is ``None`` for compounds such as the
    collective tree, which may have several sinks.
    """

    nodes: Mapping[bytes, Node]
    bottom: bytes | None
    kind: str = STANDARD

    # identity: isomorphic views compare equal

    @cached_property
    def fingerprint(self) -> bytes:
        if self.bottom is not None:
            return self.bottom
        h = hashlib.blake2b(b"compound", digest_size=DIGEST_SIZE)
        for d in sorted(self.sinks):
            h.update(d)
        return h.digest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, View):
            return NotImplemented
        return (self.kind == other.kind and self.fingerprint == other.fingerprint
                and self.bottom == other.bottom)

    def __hash__(self) -> int:
        return hash((self.kind, self.fingerprint))

    def __contains__(self, ref: object) -> bool:
        return ref in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> bytes:
        return ROOT

    # derived structure

    @cached_property
    def depth(self) -> dict[bytes, int]:
        out: dict[bytes, int] = {}
        for d, node in self.nodes.items():
            out[d] = -1 if node.parent is None else out[node.parent] + 1
        return out

    @cached_property
    def children(self) -> dict[bytes, tuple[bytes, ...]]:
        kids: dict[bytes, list[bytes]] = {d: [] for d in self.nodes}
        for d, node in self.nodes.items():
            if node.parent is not None:
                kids[node.parent].append(d)
        return {d: tuple(sorted(v)) for d, v in kids.items()}

    @cached_property
    def reds_out(self) -> dict[bytes, dict[bytes, int]]:
        out: dict[bytes, dict[bytes, int]] = {d: {} for d in self.nodes}
        for d, node in self.nodes.items():
            for src, m in node.reds:
                out[src][d] = m
        return out

    @cached_property
    def height(self) -> int:
        return 1 + max(self.depth.values())

    @cached_property
    def sinks(self) -> tuple[bytes, ...]:
        return tuple(sorted(d for d in self.nodes
                            if not self.children[d] and not self.reds_out[d]))

    @cached_property
    def leaves(self) -> tuple[bytes, ...]:
        return tuple(sorted(d for d in self.nodes if not self.children[d]))

    @cached_property
    def order(self) -> tuple[bytes, ...]:
        """Canonical node order: by longest root path, then digest."""
        rank: dict[bytes, int] = {}
        for d, node in self.nodes.items():
            if node.parent is None:
                rank[d] = 0
                continue
            r = rank[node.parent]
            for src, _ in node.reds:
                r = max(r, rank[src])
            rank[d] = r + 1
        return tuple(sorted(self.nodes, key=lambda d: (rank[d], d)))

    @cached_property
    def encoded(self) -> bytes:
        return _encode(self)

    @cached_property
    def _levels(self) -> dict[int, tuple[bytes, ...]]:
        out: dict[int, list[bytes]] = {}
        for d in self.order:
            out.setdefault(self.depth[d], []).append(d)
        return {t: tuple(ds) for t, ds in out.items()}

    def level(self, t: int) -> tuple[bytes, ...]:
        return self._levels.get(t, ())

    def node(self, ref: bytes) -> ViewNode:
        if ref not in self.nodes:
            raise ViewError("unknown node reference")
        return ViewNode(ref, self.depth[ref], self.nodes[ref].label)

    def red_edges(self) -> list[RedEdge]:
        return [RedEdge(src, d, m) for d in self.order for src, m in self.nodes[d].reds]

    def ancestors(self, ref: bytes) -> set[bytes]:
        """Black ancestors of ``ref`` (strict)."""
        out = set()
        p = self.nodes[ref].parent
        while p is not None:
            out.add(p)
            p = self.nodes[p].parent
        return out

    def __repr__(self) -> str:
        bottom = self.bottom.hex()[:8] if self.bottom else None
        return f"View(kind={self.kind}, nodes={len(self.nodes)}, height={self.height}, bottom={bottom})"


def _make(nodes: dict[bytes, Node], bottom: bytes | None, kind: str) -> View:
    return View(nodes, bottom, kind)


def root_view(kind: str = STANDARD) -> View:
    return _make({ROOT: _ROOT_NODE}, ROOT, kind)


def new_leaf_view(label: str, kind: str = STANDARD) -> View:
    d = node_digest(label, ROOT, ())
    return _make({ROOT: _ROOT_NODE, d: Node(label, ROOT, ())}, d, kind)


def height(view: View) -> int:
    return view.height


# -- structural operations ---------------------------------------------------

def sub_view(view: View, ref: bytes) -> View:
    """The maximal view inside ``view`` whose bottom is ``ref``."""
    if ref not in view.nodes:
        raise ViewError("unknown node reference")
    keep = {ref}
    stack = [ref]
    while stack:
        node = view.nodes[stack.pop()]
        preds = [src for src, _ in node.reds]
        if node.parent is not None:
            preds.append(node.parent)
        for p in preds:
            if p not in keep:
                keep.add(p)
                stack.append(p)
    return _make({d: n for d, n in view.nodes.items() if d in keep}, ref, view.kind)


def update(view: View, incoming: Sequence[View], label: str) -> View:
    """Add a new bottom labeled ``label`` and match-and-merge ``incoming``.

    Isomorphic incoming views are folded into one red edge whose
    multiplicity is their count.
    """
    if view.bottom is None:
        raise ViewError("cannot update a compound")
    if view.kind == STANDARD:
        for w in incoming:
            if w.kind != STANDARD or w.height != view.height:
                raise ViewError("height mismatch in standard update")
    nodes = dict(view.nodes)
    counts: Counter[bytes] = Counter()
    for w in incoming:
        if w.bottom is None:
            raise ViewError("incoming view has no bottom")
        for d, n in w.nodes.items():
            if d not in nodes:
                nodes[d] = n
        counts[w.bottom] += 1
    reds = tuple(sorted(counts.items()))
    d = node_digest(label, view.bottom, reds)
    nodes[d] = Node(label, view.bottom, reds)
    return _make(nodes, d, view.kind)


def merge(views: Iterable[View], kind: str | None = None) -> View:
    """Match-and-merge several views into a compound (no bottom)."""
    nodes: dict[bytes, Node] = {ROOT: _ROOT_NODE}
    kinds = set()
    for v in views:
        kinds.add(v.kind)
        for d, n in v.nodes.items():
            if d not in nodes:
                nodes[d] = n
    if kind is None:
        kind = GENERALIZED if GENERALIZED in kinds else STANDARD
    return _make(nodes, None, kind)


def chop(view: View) -> View:
    """Forget level L0: drop it, hang L1 on the root, re-merge isomorphic nodes."""
    if view.kind != STANDARD:
        raise ViewError("chop is defined on standard views")
    if view.height < 1:
        raise ViewError("cannot chop the root-only view")
    depth = view.depth
    remap: dict[bytes, bytes | None] = {ROOT: ROOT}
    nodes: dict[bytes, Node] = {ROOT: _ROOT_NODE}
    for d, node in view.nodes.items():
        dep = depth[d]
        if dep < 0:
            continue
        if dep == 0:
            remap[d] = None
            continue
        parent = remap[node.parent]
        if parent is None:
            parent = ROOT
        reds = _fold_reds((remap[s], m) for s, m in node.reds if remap[s] is not None)
        nd = node_digest(node.label, parent, reds)
        remap[d] = nd
        if nd not in nodes:
            nodes[nd] = Node(node.label, parent, reds)
    bottom = None if view.bottom is None else remap[view.bottom]
    if view.bottom is not None and bottom is None:
        bottom = ROOT
    return _make(nodes, bottom, view.kind)


def chop_to(view: View, target_height: int) -> View:
    while view.height > target_height:
        view = chop(view)
    return view


# -- canonical serialization ---------------------------------------------------

def encode_view(view: View) -> bytes:
    """Canonical, bit-exact encoding: nodes in canonical order, varints."""
    return view.encoded


def _varint_bytes(value: int) -> bytes:
    out = bytearray()
    _put_varint(out, value)
    return bytes(out)


_SMALL_VARINTS = tuple(_varint_bytes(i) for i in range(1 << 14))


def _encode(view: View) -> bytes:
    order = view.order
    index = {d: i for i, d in enumerate(order)}
    small = _SMALL_VARINTS
    limit = len(small)
    parts = [bytes((_KIND_BYTE[view.kind],))]
    fields = [len(order) - 1]
    for d in order[1:]:
        node = view.nodes[d]
        lab = _utf8(node.label)
        fields.append(len(lab))
        parts.extend(map(small.__getitem__, fields) if max(fields) < limit
                     else map(_varint_bytes, fields))
        parts.append(lab)
        fields = [index[node.parent], len(node.reds)]
        for pair in sorted((index[s], m) for s, m in node.reds):
            fields.extend(pair)
    fields.append(0 if view.bottom is None else index[view.bottom] + 1)
    parts.extend(map(small.__getitem__, fields) if max(fields) < limit
                 else map(_varint_bytes, fields))
    return b"".join(parts)


@lru_cache(maxsize=4096)
def _utf8(label: str) -> bytes:
    return label.encode("utf-8")


def canonical_code(view: View, ref: bytes) -> bytes:
    """Hash-free canonical code of the sub-view at ``ref``.

    Two nodes (possibly in different views) get equal codes exactly when
    their sub-views are isomorphic; codes are ordered bytewise.
    """
    return encode_view(sub_view(view, ref))


@dataclass
class RawView:
    """A decoded but unvalidated structure.  Index 0 is the root."""

    labels: list[str | None]
    parents: list[int]
    reds: list[list[tuple[int, int]]]  # inbound (src index, multiplicity)
    bottom: int | None
    kind: str = STANDARD


def decode_raw(data: bytes, pos: int = 0) -> tuple[RawView, int]:
    if pos >= len(data):
        raise DecodeError("empty payload")
    kind = _BYTE_KIND.get(data[pos])
    if kind is None:
        raise DecodeError("unknown view kind")
    pos += 1
    count, pos = _get_varint(data, pos)
    if count > len(data):
        raise DecodeError("node count exceeds payload")
    labels: list[str | None] = [None]
    parents = [-1]
    reds: list[list[tuple[int, int]]] = [[]]
    for _ in range(count):
        ln, pos = _get_varint(data, pos)
        if pos + ln > len(data):
            raise DecodeError("truncated label")
        try:
            labels.append(data[pos:pos + ln].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DecodeError("label is not utf-8") from exc
        pos += ln
        parent, pos = _get_varint(data, pos)
        parents.append(parent)
        k, pos = _get_varint(data, pos)
        if k > len(data):
            raise DecodeError("red edge count exceeds payload")
        edges = []
        for _ in range(k):
            src, pos = _get_varint(data, pos)
            m, pos = _get_varint(data, pos)
            edges.append((src, m))
        reds.append(edges)
    b, pos = _get_varint(data, pos)
    bottom = None if b == 0 else b - 1
    return RawView(labels, parents, reds, bottom, kind), pos


def _raw_digests(raw: RawView) -> list[bytes] | None:
    """Digest every raw node without merging; None if the structure is broken."""
    n = len(raw.labels)
    if n == 0 or len(raw.parents) != n or len(raw.reds) != n:
        return None
    if raw.labels[0] is not None or raw.parents[0] != -1 or raw.reds[0]:
        return None
    preds: list[list[int]] = []
    for i in range(n):
        p = [raw.parents[i]] if i else []
        for src, m in raw.reds[i]:
            if not 0 <= src < n or src == i or m < 1:
                return None
            p.append(src)
        if i:
            if raw.labels[i] is None or not 0 <= raw.parents[i] < n or raw.parents[i] == i:
                return None
            if len({s for s, _ in raw.reds[i]}) != len(raw.reds[i]):
                return None
        preds.append(p)
    digests: list[bytes | None] = [None] * n
    digests[0] = ROOT
    state = [0] * n  # 0 new, 1 on stack, 2 done
    state[0] = 2
    for start in range(1, n):
        if state[start]:
            continue
        stack = [(start, 0)]
        state[start] = 1
        while stack:
            i, k = stack[-1]
            if k < len(preds[i]):
                stack[-1] = (i, k + 1)
                j = preds[i][k]
                if state[j] == 1:
                    return None  # cycle
                if state[j] == 0:
                    state[j] = 1
                    stack.append((j, 0))
                continue
            stack.pop()
            state[i] = 2
            reds = sorted((digests[s], m) for s, m in raw.reds[i])
            digests[i] = node_digest(raw.labels[i], digests[raw.parents[i]], reds)
    return digests  # type: ignore[return-value]


def _checked_digests(raw: RawView, kind: str | None) -> list[bytes] | None:
    if kind is not None and raw.kind != kind:
        return None
    if raw.kind not in KINDS:
        return None
    digests = _raw_digests(raw)
    if digests is None:
        return None
    n = len(digests)
    if len(set(digests)) != n:
        return None  # two nodes with isomorphic sub-views
    if raw.bottom is None or not 0 <= raw.bottom < n:
        return None
    depth: list[int | None] = [-1] + [None] * (n - 1)
    for i in range(1, n):
        chain = []
        j = i
        while depth[j] is None:
            chain.append(j)
            j = raw.parents[j]
        base = depth[j]
        for c in reversed(chain):
            base += 1
            depth[c] = base
    has_out = [False] * n
    for i in range(1, n):
        has_out[raw.parents[i]] = True
        for src, _ in raw.reds[i]:
            has_out[src] = True
            if raw.kind == STANDARD and depth[i] != depth[src] + 1:
                return None
    sinks = [i for i in range(n) if not has_out[i]]
    if sinks != [raw.bottom]:
        return None
    return digests


def is_well_formed(raw: RawView, kind: str | None = None) -> bool:
    """True iff ``raw`` satisfies every view invariant (for ``kind`` if given)."""
    return _checked_digests(raw, kind) is not None


def try_view_from_raw(raw: RawView, kind: str | None = None) -> View | None:
    """The view encoded by ``raw``, or None if it is not well formed."""
    digests = _checked_digests(raw, kind)
    if digests is None:
        return None
    by_digest: dict[bytes, Node] = {ROOT: _ROOT_NODE}
    for i in range(1, len(digests)):
        reds = tuple(sorted((digests[s], m) for s, m in raw.reds[i]))
        by_digest[digests[i]] = Node(raw.labels[i], digests[raw.parents[i]], reds)
    nodes = {d: by_digest[d] for d in _topo(by_digest)}
    return _make(nodes, digests[raw.bottom], raw.kind)


def view_from_raw(raw: RawView) -> View:
    view = try_view_from_raw(raw)
    if view is None:
        raise ViewError("structure is not a well-formed view")
    return view


def _topo(nodes: Mapping[bytes, Node]) -> list[bytes]:
    out: list[bytes] = []
    seen: set[bytes] = set()
    for start in nodes:
        if start in seen:
            continue
        stack = [(start, False)]
        while stack:
            d, expanded = stack.pop()
            if expanded:
                out.append(d)
                continue
            if d in seen:
                continue
            seen.add(d)
            stack.append((d, True))
            node = nodes[d]
            preds = [s for s, _ in node.reds]
            if node.parent is not None:
                preds.append(node.parent)
            for p in preds:
                if p not in seen:
                    stack.append((p, False))
    return out


def canonicalize(raw: RawView) -> View:
    """Quotient a structurally valid raw view by sub-view isomorphism.

    Unlike ``view_from_raw`` this accepts duplicate nodes and merges them,
    summing the multiplicities of red edges whose sources merge.  Nodes that
    are not ancestors of the bottom are dropped.
    """
    n = len(raw.labels)
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for i in range(1, n):
        for p in [raw.parents[i]] + [s for s, _ in raw.reds[i]]:
            succ[p].append(i)
            indeg[i] += 1
    order = [0]
    for i in order:
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                order.append(j)
    if len(order) != n:
        raise ViewError("structure has a cycle or unreachable nodes")
    digest = [ROOT] * n
    nodes: dict[bytes, Node] = {ROOT: _ROOT_NODE}
    for i in order[1:]:
        reds = _fold_reds((digest[s], m) for s, m in raw.reds[i])
        d = node_digest(raw.labels[i], digest[raw.parents[i]], reds)
        digest[i] = d
        nodes.setdefault(d, Node(raw.labels[i], digest[raw.parents[i]], reds))
    if raw.bottom is None:
        return _make(nodes, None, raw.kind)
    return sub_view(_make(nodes, digest[raw.bottom], raw.kind), digest[raw.bottom])


def raw_from_view(view: View) -> RawView:
    order = view.order
    index = {d: i for i, d in enumerate(order)}
    labels = [view.nodes[d].label for d in order]
    parents = [-1] + [index[view.nodes[d].parent] for d in order[1:]]
    reds = [[(index[s], m) for s, m in view.nodes[d].reds] for d in order]
    bottom = None if view.bottom is None else index[view.bottom]
    return RawView(labels, parents, reds, bottom, view.kind)


def decode_view(data: bytes) -> View:
    raw, pos = decode_raw(data)
    if pos != len(data):
        raise DecodeError("trailing bytes")
    return view_from_raw(raw)


# -- DOT export ----------------------------------------------------------------

def to_dot(view: View, name: str = "view") -> str:
    order = view.order
    index = {d: i for i, d in enumerate(order)}
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for d in order:
        node = view.nodes[d]
        label = "r" if node.label is None else node.label
        attrs = [f'label="{label}"']
        if d == view.bottom:
            attrs.append("peripheries=2")
        lines.append(f"  n{index[d]} [{', '.join(attrs)}];")
    for d in order:
        node = view.nodes[d]
        if node.parent is not None:
            lines.append(f"  n{index[node.parent]} -> n{index[d]} [color=black];")
    for d in order:
        for src, m in sorted(view.nodes[d].reds, key=lambda e: index[e[0]]):
            lines.append(f'  n{index[src]} -> n{index[d]} [color=red, style=dashed, label="×{m}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
