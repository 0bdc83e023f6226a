"""Matroid constraints: independence oracles, greedy completion, exchange maps."""
from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InfeasibleCompletion, InstanceValidationError, InvalidArgument, NoBijection

MAX_GENERAL_EXCHANGE_RANK = 10


class Matroid:
    """Base class; subclasses define :meth:`is_independent` and :attr:`rank`."""

    kind = "abstract"
    n: int
    rank: int

    def is_independent(self, S: Iterable[int]) -> bool:
        raise NotImplementedError

    def can_add(self, S: Sequence[int], e: int) -> bool:
        """Whether ``S + e`` is independent, for independent ``S`` not containing ``e``."""
        return self.is_independent(list(S) + [e])

    def is_base(self, S: Iterable[int]) -> bool:
        S = set(S)
        return len(S) == self.rank and self.is_independent(S)

    def bases(self):
        """All bases in lexicographic order (exhaustive, for small ground sets)."""
        for S in combinations(range(self.n), self.rank):
            if self.is_independent(S):
                yield S

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_elements(S, n):
    out = [int(e) for e in S]
    for e in out:
        if e < 0 or e >= n:
            raise InvalidArgument(f"element {e} outside ground set of size {n}")
    return out


class UniformMatroid(Matroid):
    kind = "uniform"

    def __init__(self, n: int, k: int):
        if n < 0 or k < 0:
            raise InstanceValidationError("uniform matroid needs n >= 0 and k >= 0")
        if k > n:
            raise InstanceValidationError(f"uniform matroid rank {k} exceeds ground set size {n}")
        self.n, self.k, self.rank = int(n), int(k), int(k)

    def is_independent(self, S):
        S = _check_elements(S, self.n)
        return len(set(S)) <= self.k

    def can_add(self, S, e):
        return len(S) + 1 <= self.k

    def to_dict(self):
        return {"type": "uniform", "n": self.n, "k": self.k}

    def __repr__(self):
        return f"UniformMatroid(n={self.n}, k={self.k})"


class PartitionMatroid(Matroid):
    """At most ``capacities[c]`` elements from each class ``c``."""

    kind = "partition"

    def __init__(self, classes: Sequence[int], capacities: Sequence[int]):
        self.classes = np.asarray(classes, dtype=int)
        self.capacities = np.asarray(capacities, dtype=int)
        if self.classes.ndim != 1:
            raise InstanceValidationError("partition classes must be a flat list")
        if self.classes.size and (self.classes.min() < 0 or self.classes.max() >= self.capacities.size):
            raise InstanceValidationError("partition class index without a capacity")
        if np.any(self.capacities < 0):
            raise InstanceValidationError("partition capacities must be nonnegative")
        self.n = int(self.classes.size)
        sizes = np.bincount(self.classes, minlength=self.capacities.size)
        self.rank = int(np.minimum(sizes, self.capacities).sum())

    def is_independent(self, S):
        S = _check_elements(S, self.n)
        if len(set(S)) != len(S):
            S = sorted(set(S))
        counts = np.bincount(self.classes[S], minlength=self.capacities.size)
        return bool(np.all(counts <= self.capacities))

    def can_add(self, S, e):
        c = self.classes[e]
        used = sum(1 for s in S if self.classes[s] == c)
        return used + 1 <= self.capacities[c]

    def to_dict(self):
        return {
            "type": "partition",
            "n": self.n,
            "classes": self.classes.tolist(),
            "capacities": self.capacities.tolist(),
        }

    def __repr__(self):
        return f"PartitionMatroid(classes={self.classes.tolist()}, capacities={self.capacities.tolist()})"


class CallbackMatroid(Matroid):
    """Matroid given by an arbitrary independence callback (trusted to satisfy the axioms)."""

    kind = "callback"

    def __init__(self, n: int, independent: Callable[[frozenset], bool]):
        self.n = int(n)
        self._independent = independent
        S: list[int] = []
        for e in range(self.n):
            if independent(frozenset(S + [e])):
                S.append(e)
        self.rank = len(S)

    def is_independent(self, S):
        return bool(self._independent(frozenset(_check_elements(S, self.n))))


def is_independent(M: Matroid, S: Iterable[int]) -> bool:
    return M.is_independent(S)


def max_weight_base_completion(M: Matroid, S: Iterable[int], w) -> tuple[int, ...]:
    """Max-weight ``T`` disjoint from ``S`` such that ``S ∪ T`` is a base.

    Matroid greedy on the contraction: scan by decreasing weight, lowest
    index first on ties.
    """
    S = _check_elements(S, M.n)
    if not M.is_independent(S):
        raise InfeasibleCompletion(f"{sorted(S)} is not independent")
    w = np.asarray(w, dtype=float)
    current = list(S)
    inside = set(S)
    T = []
    order = sorted((e for e in range(M.n) if e not in inside), key=lambda e: (-w[e], e))
    for e in order:
        if len(current) == M.rank:
            break
        if M.can_add(current, e):
            current.append(e)
            T.append(e)
    return tuple(sorted(T))


def greedy_base(M: Matroid, S: Iterable[int] = ()) -> tuple[int, ...]:
    """Extend ``S`` to a base using the lowest indices available."""
    S = list(S)
    T = max_weight_base_completion(M, S, np.zeros(M.n))
    return tuple(sorted(S + list(T)))


def random_base(M: Matroid, rng) -> tuple[int, ...]:
    """Greedy completion of the empty set along a uniformly random element order."""
    rng = np.random.default_rng(rng)
    current: list[int] = []
    for e in rng.permutation(M.n):
        e = int(e)
        if len(current) == M.rank:
            break
        if M.can_add(current, e):
            current.append(e)
    return tuple(sorted(current))


def _bipartite_matching(left, right, ok) -> dict | None:
    """Perfect matching by augmenting paths; ``ok(a, b)`` says whether edge (a, b) exists."""
    adj = {a: [b for b in right if ok(a, b)] for a in left}
    match_right: dict = {}

    def augment(a, seen):
        for b in adj[a]:
            if b in seen:
                continue
            seen.add(b)
            if b not in match_right or augment(match_right[b], seen):
                match_right[b] = a
                return True
        return False

    for a in left:
        if not augment(a, set()):
            return None
    return {a: b for b, a in match_right.items()}


def exchange_bijection(M: Matroid, A: Iterable[int], B: Iterable[int]) -> dict[int, int]:
    """Bijection ``π: A → B`` with ``A − a + π(a)`` independent for every ``a``.

    Common elements map to themselves.
    """
    A = sorted(set(_check_elements(A, M.n)))
    B = sorted(set(_check_elements(B, M.n)))
    if not (M.is_base(A) and M.is_base(B)):
        raise NoBijection("both arguments must be bases")
    common = set(A) & set(B)
    pi = {a: a for a in common}
    only_a = [a for a in A if a not in common]
    only_b = [b for b in B if b not in common]
    if isinstance(M, UniformMatroid):
        pi.update(zip(only_a, only_b))
    elif isinstance(M, PartitionMatroid):
        for c in np.unique(M.classes[only_a]) if only_a else []:
            xs = [a for a in only_a if M.classes[a] == c]
            ys = [b for b in only_b if M.classes[b] == c]
            if len(xs) != len(ys):
                raise NoBijection("class counts differ between bases")
            pi.update(zip(xs, ys))
    else:
        if M.rank > MAX_GENERAL_EXCHANGE_RANK:
            raise NoBijection(f"general exchange limited to rank <= {MAX_GENERAL_EXCHANGE_RANK}")
        Aset = set(A)
        matching = _bipartite_matching(
            only_a, only_b, lambda a, b: M.is_independent((Aset - {a}) | {b})
        )
        if matching is None:
            raise NoBijection("exchange graph has no perfect matching")
        pi.update(matching)
    return dict(sorted(pi.items()))


def matroid_from_dict(d: dict) -> Matroid:
    kind = d.get("type")
    if kind == "uniform":
        return UniformMatroid(int(d["n"]), int(d["k"]))
    if kind == "partition":
        M = PartitionMatroid(d["classes"], d["capacities"])
        if "n" in d and int(d["n"]) != M.n:
            raise InstanceValidationError("partition n does not match length of classes")
        return M
    raise InstanceValidationError(f"unknown matroid type {kind!r}")
