"""Reduced ordered binary decision diagrams.

Nodes live in a single unique table owned by a :class:`BddManager`; a diagram
is referred to by its integer handle.  Handles ``0`` and ``1`` are the constant
functions.  The variable order is the registration order and never changes.

Every operation keeps its own memo table until :meth:`BddManager.clear_caches`
is called, so repeated sub-computations within a step are free.
"""

from __future__ import annotations

import sys
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

BddRef = int
VarId = int

FALSE: BddRef = 0
TRUE: BddRef = 1

_LEAF = 1 << 30

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


class BddError(Exception):
    pass


class BddManager:
    """Owner of the unique table, the operation caches and the variable order.

    A manager is not thread-safe; use one manager per thread of control.
    """

    def __init__(self) -> None:
        self._level: List[int] = [_LEAF, _LEAF]
        self._low: List[int] = [0, 1]
        self._high: List[int] = [0, 1]
        self._unique: Dict[Tuple[int, int, int], int] = {}
        self._names: List[str] = []
        self._index: Dict[str, int] = {}
        self._and_cache: Dict[Tuple[int, int], int] = {}
        self._or_cache: Dict[Tuple[int, int], int] = {}
        self._xor_cache: Dict[Tuple[int, int], int] = {}
        self._not_cache: Dict[int, int] = {}
        self._exists_cache: Dict[Tuple[int, int], int] = {}
        self._relprod_cache: Dict[Tuple[int, int, int], int] = {}
        self._restrict_cache: Dict[Tuple[int, int], int] = {}
        self._relabel_cache: Dict[Tuple[int, int], int] = {}
        self._relabel_maps: Dict[Tuple[Tuple[int, int], ...], Tuple[int, Dict[int, int]]] = {}
        self._isop_cache: Dict[Tuple[int, int], Tuple[Tuple[Tuple[Tuple[int, bool], ...], ...], int]] = {}

    def clear_caches(self) -> None:
        """Drop the operation memo tables; the unique table is kept."""
        for c in (self._and_cache, self._or_cache, self._xor_cache, self._not_cache,
                  self._exists_cache, self._relprod_cache, self._restrict_cache,
                  self._relabel_cache, self._isop_cache):
            c.clear()

    def cache_size(self) -> int:
        return sum(len(c) for c in (self._and_cache, self._or_cache, self._xor_cache, self._not_cache,
                                    self._exists_cache, self._relprod_cache, self._restrict_cache,
                                    self._relabel_cache, self._isop_cache))

    def trim_caches(self, limit: int = 1 << 18) -> None:
        """Clear the memo tables once they hold more than ``limit`` entries in total."""
        if self.cache_size() > limit:
            self.clear_caches()

    def collect(self, roots: Sequence[BddRef]) -> List[BddRef]:
        """Drop every node not reachable from ``roots`` and return their new handles.

        All other handles into this manager become invalid.  Children always
        have smaller handles than their parents, so one pass in handle order
        rebuilds the table.
        """
        level, low, high = self._level, self._low, self._high
        live = bytearray(len(level))
        live[0] = live[1] = 1
        stack = list(roots)
        while stack:
            u = stack.pop()
            if live[u]:
                continue
            live[u] = 1
            stack.append(low[u])
            stack.append(high[u])
        remap = [0] * len(level)
        remap[1] = 1
        nl, nlo, nhi = [_LEAF, _LEAF], [0, 1], [0, 1]
        unique: Dict[Tuple[int, int, int], int] = {}
        for u in range(2, len(level)):
            if live[u]:
                r = len(nl)
                lo, hi = remap[low[u]], remap[high[u]]
                nl.append(level[u])
                nlo.append(lo)
                nhi.append(hi)
                unique[(level[u], lo, hi)] = r
                remap[u] = r
        self._level, self._low, self._high, self._unique = nl, nlo, nhi, unique
        self.clear_caches()
        return [remap[r] for r in roots]

    # ------------------------------------------------------------------
    # variables

    def add_var(self, name: str) -> VarId:
        if name in self._index:
            raise BddError(f"variable {name!r} already declared")
        v = len(self._names)
        self._names.append(name)
        self._index[name] = v
        return v

    def declare(self, *names: str) -> List[VarId]:
        return [self.add_var(n) for n in names]

    def var_id(self, name: str) -> VarId:
        try:
            return self._index[name]
        except KeyError:
            raise BddError(f"unknown variable {name!r}") from None

    def var_name(self, v: VarId) -> str:
        return self._names[v]

    @property
    def num_vars(self) -> int:
        return len(self._names)

    @property
    def var_names(self) -> List[str]:
        return list(self._names)

    def _check_var(self, v: VarId) -> VarId:
        if isinstance(v, str):
            return self.var_id(v)
        if not 0 <= v < len(self._names):
            raise BddError(f"unknown variable id {v}")
        return v

    def var(self, v: VarId | str) -> BddRef:
        """Diagram of the literal ``v``."""
        v = self._check_var(v)
        return self._mk(v, FALSE, TRUE)

    mk_var = var

    def nvar(self, v: VarId | str) -> BddRef:
        v = self._check_var(v)
        return self._mk(v, TRUE, FALSE)

    # ------------------------------------------------------------------
    # node access

    def _mk(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        r = self._unique.get(key)
        if r is None:
            r = len(self._level)
            self._level.append(v)
            self._low.append(lo)
            self._high.append(hi)
            self._unique[key] = r
        return r

    def top(self, f: BddRef) -> Optional[VarId]:
        lv = self._level[f]
        return None if lv == _LEAF else lv

    def low(self, f: BddRef) -> BddRef:
        return self._low[f]

    def high(self, f: BddRef) -> BddRef:
        return self._high[f]

    @property
    def table_size(self) -> int:
        return len(self._level)

    def constant(self, value: bool) -> BddRef:
        return TRUE if value else FALSE

    # ------------------------------------------------------------------
    # boolean operations

    def not_(self, f: BddRef) -> BddRef:
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._not_cache

        def rec(f: int) -> int:
            if f <= 1:
                return 1 - f
            r = cache.get(f)
            if r is None:
                r = mk(level[f], rec(low[f]), rec(high[f]))
                cache[f] = r
            return r

        return rec(f)

    def and_(self, f: BddRef, g: BddRef) -> BddRef:
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._and_cache

        def rec(f: int, g: int) -> int:
            if f == 0 or g == 0:
                return 0
            if f == 1:
                return g
            if g == 1 or f == g:
                return f
            if f > g:
                f, g = g, f
            key = (f, g)
            r = cache.get(key)
            if r is not None:
                return r
            lf, lg = level[f], level[g]
            if lf == lg:
                r = mk(lf, rec(low[f], low[g]), rec(high[f], high[g]))
            elif lf < lg:
                r = mk(lf, rec(low[f], g), rec(high[f], g))
            else:
                r = mk(lg, rec(f, low[g]), rec(f, high[g]))
            cache[key] = r
            return r

        return rec(f, g)

    def or_(self, f: BddRef, g: BddRef) -> BddRef:
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._or_cache

        def rec(f: int, g: int) -> int:
            if f == 1 or g == 1:
                return 1
            if f == 0:
                return g
            if g == 0 or f == g:
                return f
            if f > g:
                f, g = g, f
            key = (f, g)
            r = cache.get(key)
            if r is not None:
                return r
            lf, lg = level[f], level[g]
            if lf == lg:
                r = mk(lf, rec(low[f], low[g]), rec(high[f], high[g]))
            elif lf < lg:
                r = mk(lf, rec(low[f], g), rec(high[f], g))
            else:
                r = mk(lg, rec(f, low[g]), rec(f, high[g]))
            cache[key] = r
            return r

        return rec(f, g)

    def xor(self, f: BddRef, g: BddRef) -> BddRef:
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._xor_cache
        neg = self.not_

        def rec(f: int, g: int) -> int:
            if f == g:
                return 0
            if f == 0:
                return g
            if g == 0:
                return f
            if f == 1:
                return neg(g)
            if g == 1:
                return neg(f)
            if f > g:
                f, g = g, f
            key = (f, g)
            r = cache.get(key)
            if r is not None:
                return r
            lf, lg = level[f], level[g]
            if lf == lg:
                r = mk(lf, rec(low[f], low[g]), rec(high[f], high[g]))
            elif lf < lg:
                r = mk(lf, rec(low[f], g), rec(high[f], g))
            else:
                r = mk(lg, rec(f, low[g]), rec(f, high[g]))
            cache[key] = r
            return r

        return rec(f, g)

    def implies(self, f: BddRef, g: BddRef) -> BddRef:
        return self.or_(self.not_(f), g)

    def iff(self, f: BddRef, g: BddRef) -> BddRef:
        return self.not_(self.xor(f, g))

    def diff(self, f: BddRef, g: BddRef) -> BddRef:
        return self.and_(f, self.not_(g))

    def ite(self, c: BddRef, g: BddRef, h: BddRef) -> BddRef:
        return self.or_(self.and_(c, g), self.and_(self.not_(c), h))

    _BINARY = {
        "and": "and_",
        "or": "or_",
        "xor": "xor",
        "implies": "implies",
        "iff": "iff",
        "diff": "diff",
    }

    def apply(self, op: str, f: BddRef, g: BddRef) -> BddRef:
        try:
            meth = self._BINARY[op]
        except KeyError:
            raise BddError(f"unknown operator {op!r}") from None
        self._check_ref(f)
        self._check_ref(g)
        return getattr(self, meth)(f, g)

    def conj(self, fs: Iterable[BddRef]) -> BddRef:
        r = TRUE
        for f in fs:
            r = self.and_(r, f)
            if r == FALSE:
                break
        return r

    def disj(self, fs: Iterable[BddRef]) -> BddRef:
        r = FALSE
        for f in fs:
            r = self.or_(r, f)
            if r == TRUE:
                break
        return r

    def _check_ref(self, f: BddRef) -> None:
        if not (isinstance(f, int) and 0 <= f < len(self._level)):
            raise BddError(f"{f!r} is not a node of this manager")

    # ------------------------------------------------------------------
    # quantification

    def cube(self, vars: Iterable[VarId | str]) -> BddRef:
        """Positive conjunction of the given variables (the quantifier key)."""
        ids = sorted({self._check_var(v) for v in vars}, reverse=True)
        r = TRUE
        for v in ids:
            r = self._mk(v, FALSE, r)
        return r

    def _as_cube(self, vars: Iterable[VarId | str] | BddRef) -> BddRef:
        if isinstance(vars, int):
            return vars
        return self.cube(vars)

    def exists(self, f: BddRef, vars: Iterable[VarId | str] | BddRef) -> BddRef:
        """Existential abstraction; ``vars`` is an iterable of variables or a cube."""
        c = self._as_cube(vars)
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._exists_cache
        or_ = self.or_

        def rec(f: int, c: int) -> int:
            if f <= 1:
                return f
            lf = level[f]
            while level[c] < lf:
                c = high[c]
            if c == 1:
                return f
            key = (f, c)
            r = cache.get(key)
            if r is not None:
                return r
            if level[c] == lf:
                lo = rec(low[f], high[c])
                r = 1 if lo == 1 else or_(lo, rec(high[f], high[c]))
            else:
                r = mk(lf, rec(low[f], c), rec(high[f], c))
            cache[key] = r
            return r

        return rec(f, c)

    def forall(self, f: BddRef, vars: Iterable[VarId | str] | BddRef) -> BddRef:
        return self.not_(self.exists(self.not_(f), vars))

    def and_exists(self, f: BddRef, g: BddRef, vars: Iterable[VarId | str] | BddRef) -> BddRef:
        """Relational product ``exists vars. f and g`` without building ``f and g``."""
        c = self._as_cube(vars)
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._relprod_cache
        and_, or_, exists = self.and_, self.or_, self.exists

        def rec(f: int, g: int, c: int) -> int:
            if f == 0 or g == 0:
                return 0
            if f == 1 and g == 1:
                return 1
            if f == 1:
                return exists(g, c)
            if g == 1 or f == g:
                return exists(f, c)
            if f > g:
                f, g = g, f
            lf, lg = level[f], level[g]
            top = lf if lf < lg else lg
            while level[c] < top:
                c = high[c]
            if c == 1:
                return and_(f, g)
            key = (f, g, c)
            r = cache.get(key)
            if r is not None:
                return r
            f0, f1 = (low[f], high[f]) if lf == top else (f, f)
            g0, g1 = (low[g], high[g]) if lg == top else (g, g)
            if level[c] == top:
                lo = rec(f0, g0, high[c])
                r = 1 if lo == 1 else or_(lo, rec(f1, g1, high[c]))
            else:
                r = mk(top, rec(f0, g0, c), rec(f1, g1, c))
            cache[key] = r
            return r

        return rec(f, g, c)

    # ------------------------------------------------------------------
    # substitution

    def rename(self, f: BddRef, sigma: Mapping[VarId | str, VarId | str]) -> BddRef:
        """Rename variables of ``f``: the result at ``s`` is ``f`` at ``s`` read through ``sigma``.

        Order-preserving maps are applied by relabelling nodes; any other map
        rebuilds the diagram with ``ite`` on the renamed variables.
        """
        pairs = {self._check_var(k): self._check_var(v) for k, v in sigma.items()}
        pairs = {k: v for k, v in pairs.items() if k != v}
        if not pairs:
            return f
        if len(set(pairs.values())) != len(pairs):
            raise BddError("rename map is not injective")
        supp = self.support(f)
        fixed = supp - pairs.keys()
        clash = fixed & set(pairs.values())
        if clash:
            names = ", ".join(self._names[v] for v in sorted(clash))
            raise BddError(f"rename target overlaps unrenamed support: {names}")
        moved = {k: v for k, v in pairs.items() if k in supp}
        if not moved:
            return f
        if self._order_preserving(supp, moved):
            return self._relabel(f, moved)
        level, low, high, ite = self._level, self._low, self._high, self.ite
        memo: Dict[int, int] = {}

        def rec(u: int) -> int:
            if u <= 1:
                return u
            r = memo.get(u)
            if r is None:
                v = level[u]
                r = ite(self.var(moved.get(v, v)), rec(high[u]), rec(low[u]))
                memo[u] = r
            return r

        return rec(f)

    def _order_preserving(self, supp: Set[int], moved: Dict[int, int]) -> bool:
        seq = [moved.get(v, v) for v in sorted(supp)]
        return all(a < b for a, b in zip(seq, seq[1:]))

    def _relabel(self, f: BddRef, moved: Dict[int, int]) -> BddRef:
        key = tuple(sorted(moved.items()))
        entry = self._relabel_maps.get(key)
        if entry is None:
            entry = (len(self._relabel_maps), dict(moved))
            self._relabel_maps[key] = entry
        mid, mapping = entry
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._relabel_cache

        def rec(f: int) -> int:
            if f <= 1:
                return f
            ck = (f, mid)
            r = cache.get(ck)
            if r is None:
                v = level[f]
                r = mk(mapping.get(v, v), rec(low[f]), rec(high[f]))
                cache[ck] = r
            return r

        return rec(f)

    def cofactor(self, f: BddRef, assignment: Mapping[VarId | str, bool]) -> BddRef:
        """Substitute constants for variables."""
        asg = {self._check_var(k): bool(v) for k, v in assignment.items()}
        level, low, high, mk = self._level, self._low, self._high, self._mk
        memo: Dict[int, int] = {}

        def rec(f: int) -> int:
            if f <= 1:
                return f
            r = memo.get(f)
            if r is None:
                v = level[f]
                if v in asg:
                    r = rec(high[f] if asg[v] else low[f])
                else:
                    r = mk(v, rec(low[f]), rec(high[f]))
                memo[f] = r
            return r

        return rec(f)

    def restrict(self, f: BddRef, care: BddRef) -> BddRef:
        """Generalized cofactor: agrees with ``f`` wherever ``care`` holds.

        Off the care set the value is whatever the recursion produces.  If the
        recursion would grow the diagram, ``f`` itself is returned.
        """
        if care == FALSE:
            raise BddError("restrict with an empty care set")
        level, low, high, mk, cache = self._level, self._low, self._high, self._mk, self._restrict_cache
        or_ = self.or_

        def rec(f: int, c: int) -> int:
            if c == 1 or f <= 1:
                return f
            if f == c:
                return 1
            key = (f, c)
            r = cache.get(key)
            if r is not None:
                return r
            lf, lc = level[f], level[c]
            if lc < lf:
                r = rec(f, or_(low[c], high[c]))
            else:
                c0, c1 = (low[c], high[c]) if lc == lf else (c, c)
                if c0 == 0:
                    r = rec(high[f], c1)
                elif c1 == 0:
                    r = rec(low[f], c0)
                else:
                    r = mk(lf, rec(low[f], c0), rec(high[f], c1))
            cache[key] = r
            return r

        r = rec(f, care)
        if self.node_count(r) > self.node_count(f):
            return f
        return r

    # ------------------------------------------------------------------
    # inspection

    def support(self, f: BddRef) -> Set[VarId]:
        level, low, high = self._level, self._low, self._high
        seen: Set[int] = set()
        out: Set[int] = set()
        stack = [f]
        while stack:
            u = stack.pop()
            if u <= 1 or u in seen:
                continue
            seen.add(u)
            out.add(level[u])
            stack.append(low[u])
            stack.append(high[u])
        return out

    def node_count(self, f: BddRef | Sequence[BddRef]) -> int:
        """Number of decision nodes (terminals excluded)."""
        roots = [f] if isinstance(f, int) else list(f)
        low, high = self._low, self._high
        seen: Set[int] = set()
        stack = roots
        while stack:
            u = stack.pop()
            if u <= 1 or u in seen:
                continue
            seen.add(u)
            stack.append(low[u])
            stack.append(high[u])
        return len(seen)

    def evaluate(self, f: BddRef, assignment: Mapping[VarId | str, bool]) -> bool:
        asg = {self._check_var(k): bool(v) for k, v in assignment.items()}
        level, low, high = self._level, self._low, self._high
        while f > 1:
            v = level[f]
            if v not in asg:
                raise BddError(f"assignment misses variable {self._names[v]!r}")
            f = high[f] if asg[v] else low[f]
        return f == TRUE

    def count(self, f: BddRef, over: Iterable[VarId | str]) -> int:
        """Number of assignments to ``over`` satisfying ``f``."""
        levels = sorted({self._check_var(v) for v in over})
        supp = self.support(f)
        if not supp <= set(levels):
            raise BddError("count: support of f is not contained in the variable set")
        pos = {v: i for i, v in enumerate(levels)}
        n = len(levels)
        level, low, high = self._level, self._low, self._high
        memo: Dict[int, int] = {}

        def depth(u: int) -> int:
            return n if u <= 1 else pos[level[u]]

        def rec(u: int) -> int:
            # models over the variables strictly from depth(u) on
            if u <= 1:
                return u
            r = memo.get(u)
            if r is None:
                d = depth(u)
                lo, hi = low[u], high[u]
                r = rec(lo) * (1 << (depth(lo) - d - 1)) + rec(hi) * (1 << (depth(hi) - d - 1))
                memo[u] = r
            return r

        return rec(f) * (1 << depth(f))

    def enumerate_sats(self, f: BddRef, over: Iterable[VarId | str]) -> Iterator[Dict[VarId, bool]]:
        """Yield every assignment to ``over`` that satisfies ``f``, each once."""
        levels = sorted({self._check_var(v) for v in over})
        supp = self.support(f)
        if not supp <= set(levels):
            missing = ", ".join(self._names[v] for v in sorted(supp - set(levels)))
            raise BddError(f"enumerate_sats: variables outside 'over': {missing}")
        level, low, high = self._level, self._low, self._high
        n = len(levels)

        def rec(u: int, i: int, acc: Dict[int, bool]) -> Iterator[Dict[int, bool]]:
            if u == 0:
                return
            if i == n:
                yield dict(acc)
                return
            v = levels[i]
            if u > 1 and level[u] == v:
                branches = ((False, low[u]), (True, high[u]))
            else:
                branches = ((False, u), (True, u))
            for val, child in branches:
                if child == 0:
                    continue
                acc[v] = val
                yield from rec(child, i + 1, acc)
            acc.pop(v, None)

        yield from rec(f, 0, {})

    def pick_one(self, f: BddRef) -> Optional[Dict[VarId, bool]]:
        """One satisfying partial assignment (on the support path), or None."""
        if f == FALSE:
            return None
        out: Dict[int, bool] = {}
        level, low, high = self._level, self._low, self._high
        while f > 1:
            if low[f] != FALSE:
                out[level[f]] = False
                f = low[f]
            else:
                out[level[f]] = True
                f = high[f]
        return out

    def cube_from(self, assignment: Mapping[VarId | str, bool]) -> BddRef:
        items = sorted(((self._check_var(k), bool(v)) for k, v in assignment.items()), reverse=True)
        r = TRUE
        for v, val in items:
            r = self._mk(v, FALSE, r) if val else self._mk(v, r, FALSE)
        return r

    # ------------------------------------------------------------------
    # covers

    def isop(self, lower: BddRef, upper: BddRef) -> Tuple[List[Dict[VarId, bool]], BddRef]:
        """Irredundant sum-of-products cover ``c`` with ``lower <= c <= upper``.

        Minato-Morreale recursion.  Returns the cubes and the cover's diagram.
        """
        if self.and_(lower, self.not_(upper)) != FALSE:
            raise BddError("isop: lower bound is not contained in upper bound")
        level, low, high, cache = self._level, self._low, self._high, self._isop_cache
        and_, or_, not_, mk = self.and_, self.or_, self.not_, self._mk

        def rec(L: int, U: int):
            if L == 0:
                return (), 0
            if U == 1:
                return ((),), 1
            key = (L, U)
            r = cache.get(key)
            if r is not None:
                return r
            lL, lU = level[L], level[U]
            x = lL if lL < lU else lU
            L0, L1 = (low[L], high[L]) if lL == x else (L, L)
            U0, U1 = (low[U], high[U]) if lU == x else (U, U)
            c0, f0 = rec(and_(L0, not_(U1)), U0)
            c1, f1 = rec(and_(L1, not_(U0)), U1)
            Ln = or_(and_(L0, not_(f0)), and_(L1, not_(f1)))
            cd, fd = rec(Ln, and_(U0, U1))
            cubes = tuple(((x, False),) + c for c in c0) + tuple(((x, True),) + c for c in c1) + cd
            f = or_(mk(x, f0, 0), or_(mk(x, 0, f1), fd))
            r = (cubes, f)
            cache[key] = r
            return r

        cubes, f = rec(lower, upper)
        return [dict(c) for c in cubes], f

    # ------------------------------------------------------------------
    # transfer, checks, dumps

    def transfer(self, f: BddRef, target: "BddManager", rename: Optional[Callable[[str], str]] = None) -> BddRef:
        """Rebuild ``f`` inside ``target``, matching variables by name."""
        level, low, high, names = self._level, self._low, self._high, self._names
        memo: Dict[int, int] = {}

        def rec(u: int) -> int:
            if u <= 1:
                return u
            r = memo.get(u)
            if r is None:
                name = names[level[u]]
                if rename is not None:
                    name = rename(name)
                v = target.var(name)
                r = target.ite(v, rec(high[u]), rec(low[u]))
                memo[u] = r
            return r

        return rec(f)

    def check_invariants(self) -> None:
        """Structural scan of the unique table; raises BddError on a violation."""
        seen: Dict[Tuple[int, int, int], int] = {}
        for u in range(2, len(self._level)):
            v, lo, hi = self._level[u], self._low[u], self._high[u]
            if lo == hi:
                raise BddError(f"node {u} is redundant")
            if (v, lo, hi) in seen:
                raise BddError(f"nodes {seen[(v, lo, hi)]} and {u} are duplicates")
            seen[(v, lo, hi)] = u
            if self._unique.get((v, lo, hi)) != u:
                raise BddError(f"node {u} missing from the unique table")
            for child in (lo, hi):
                if self._level[child] <= v:
                    raise BddError(f"node {u} violates the variable order")

    def to_dot(self, f: BddRef | Sequence[BddRef], name: str = "bdd") -> str:
        roots = [f] if isinstance(f, int) else list(f)
        lines = [f"digraph {name} {{"]
        seen: Set[int] = set()
        stack = list(roots)
        lines.append('  n0 [shape=box,label="0"];')
        lines.append('  n1 [shape=box,label="1"];')
        while stack:
            u = stack.pop()
            if u <= 1 or u in seen:
                continue
            seen.add(u)
            lo, hi = self._low[u], self._high[u]
            lines.append(f'  n{u} [label="{self._names[self._level[u]]}"];')
            lines.append(f"  n{u} -> n{lo} [style=dashed];")
            lines.append(f"  n{u} -> n{hi};")
            stack.extend((lo, hi))
        for i, r in enumerate(roots):
            lines.append(f'  r{i} [shape=plaintext,label="f{i}"];')
            lines.append(f"  r{i} -> n{r};")
        lines.append("}")
        return "\n".join(lines) + "\n"
