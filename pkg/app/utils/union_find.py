"""
Union-find and ground congruence closure

``UnionFind`` is generic over hashable items (path halving, union by rank,
members reported per class). ``CongruenceClosure`` tracks equivalence classes
of ground terms and keeps them closed under function application.
"""

from typing import Dict, Generic, Hashable, Iterable, List, Set, Tuple, TypeVar

from app.models.logic import App, FunctionSymbol, Term

T = TypeVar("T", bound=Hashable)


class UnionFind(Generic[T]):
    def __init__(self, items: Iterable[T] = ()):
        self._parent: Dict[T, T] = {}
        self._rank: Dict[T, int] = {}
        self._members: Dict[T, List[T]] = {}
        for item in items:
            self.add(item)

    def add(self, x: T) -> bool:
        if x in self._parent:
            return False
        self._parent[x] = x
        self._rank[x] = 0
        self._members[x] = [x]
        return True

    def __contains__(self, x: object) -> bool:
        return x in self._parent

    def find(self, x: T) -> T:
        self.add(x)
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: T, b: T) -> bool:
        """Merge the classes of ``a`` and ``b``; False if already merged"""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._members[ra].extend(self._members.pop(rb))
        return True

    def same(self, a: T, b: T) -> bool:
        return self.find(a) == self.find(b)

    def members(self, x: T) -> List[T]:
        return list(self._members[self.find(x)])

    def classes(self) -> List[List[T]]:
        return [list(m) for m in self._members.values()]


class CongruenceClosure:
    """Ground terms modulo asserted equations and congruence"""

    def __init__(self, terms: Iterable[Term] = ()):
        self.uf: UnionFind[Term] = UnionFind()
        self._uses: Dict[Term, List[App]] = {}
        self._signatures: Dict[Tuple[FunctionSymbol, Tuple[Term, ...]], App] = {}
        for t in terms:
            self.add_term(t)

    def add_term(self, t: Term) -> None:
        if t in self.uf:
            return
        if isinstance(t, App):
            for a in t.args:
                self.add_term(a)
                self._uses.setdefault(a, []).append(t)
        self.uf.add(t)
        if isinstance(t, App) and t.args:
            key = self._signature(t)
            other = self._signatures.get(key)
            if other is None:
                self._signatures[key] = t
            else:
                self.merge(t, other)

    def _signature(self, t: App) -> Tuple[FunctionSymbol, Tuple[Term, ...]]:
        return t.fn, tuple(self.uf.find(a) for a in t.args)

    def merge(self, s: Term, t: Term) -> bool:
        """Assert ``s = t``; returns False if they were already equal"""
        self.add_term(s)
        self.add_term(t)
        pending = [(s, t)]
        changed = False
        while pending:
            a, b = pending.pop()
            ra, rb = self.uf.find(a), self.uf.find(b)
            if ra == rb:
                continue
            users: Set[App] = set()
            for m in self.uf.members(ra) + self.uf.members(rb):
                users.update(self._uses.get(m, ()))
            self.uf.union(ra, rb)
            changed = True
            for u in sorted(users, key=str):
                key = self._signature(u)
                other = self._signatures.get(key)
                if other is None:
                    self._signatures[key] = u
                elif not self.uf.same(u, other):
                    pending.append((u, other))
        return changed

    def equal(self, s: Term, t: Term) -> bool:
        self.add_term(s)
        self.add_term(t)
        return self.uf.same(s, t)

    def congruent_applications(self) -> List[Tuple[App, App]]:
        """Pairs of distinct applications of one symbol whose arguments are pairwise equal"""
        pairs: List[Tuple[App, App]] = []
        groups: Dict[Tuple[FunctionSymbol, Tuple[Term, ...]], List[App]] = {}
        for cls in self.uf.classes():
            for t in cls:
                if isinstance(t, App) and t.args:
                    groups.setdefault(self._signature(t), []).append(t)
        for group in groups.values():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    pairs.append((a, b))
        return pairs
