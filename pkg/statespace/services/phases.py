import logging
from collections import deque
from typing import Sequence

from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors, smith_normal_decomp

from statespace.core.config import settings
from statespace.core.errors import DimMismatch, InvalidState, Overflow
from statespace.models import AbelianGroupInvariants, PresentedMonoid

logger = logging.getLogger(__name__)

Vector = tuple[int, ...]


def _vector(x: Sequence[int], m: PresentedMonoid, name: str) -> Vector:
    v = tuple(int(e) for e in x)
    if len(v) != m.n_gens:
        raise DimMismatch(f"{name} must have length n_gens", n_gens=m.n_gens, length=len(v))
    if any(e < 0 for e in v):
        raise InvalidState(f"{name} must have non-negative exponents", value=list(v))
    return v


def _check_size(value: int) -> None:
    if value.bit_length() > settings.MAX_INT_BITS:
        raise Overflow("integer normal form exceeded the size policy", bits=value.bit_length())


def _relation_matrix(m: PresentedMonoid) -> DomainMatrix | None:
    rows = [[x - y for x, y in zip(u, v)] for u, v in m.relations if u != v]
    if not rows:
        return None
    return DomainMatrix([[ZZ(x) for x in row] for row in rows], (len(rows), m.n_gens), ZZ)


def _smith(m: PresentedMonoid) -> tuple[list[int], list[list[int]]]:
    """Smith normal form S = U·R·W of the relation matrix R.

    Returns the diagonal of S, zeros included, and the unimodular column transform W.
    """
    r = _relation_matrix(m)
    if r is None:
        return [], [[int(i == j) for j in range(m.n_gens)] for i in range(m.n_gens)]
    snf, _, w = smith_normal_decomp(r)
    entries = snf.to_list()
    diag = [abs(int(entries[i][i])) for i in range(min(r.shape))]
    w = [[int(x) for x in row] for row in w.to_list()]
    for value in diag + [x for row in w for x in row]:
        _check_size(value)
    return diag, w


def k0(m: PresentedMonoid) -> AbelianGroupInvariants:
    """Z^n modulo the differences u − v of the relations."""
    r = _relation_matrix(m)
    factors = [abs(int(f)) for f in invariant_factors(r)] if r is not None else []
    for f in factors:
        _check_size(f)
    nonzero = [f for f in factors if f]
    out = AbelianGroupInvariants(free_rank=m.n_gens - len(nonzero), torsion=tuple(f for f in nonzero if f > 1))
    logger.debug(
        "Computed K0",
        extra={"extra_info": {"event": "k0", "n_gens": m.n_gens, "relations": len(m.relations), "result": str(out)}},
    )
    return out


def k0_equal(m: PresentedMonoid, a: Sequence[int], b: Sequence[int]) -> bool:
    """Whether [a] = [b] in K₀(m)."""
    a, b = _vector(a, m, "a"), _vector(b, m, "b")
    diag, w = _smith(m)
    x = [p - q for p, q in zip(a, b)]
    z = [sum(x[i] * w[i][j] for i in range(m.n_gens)) for j in range(m.n_gens)]
    on_diag = all(z[j] % d == 0 if d else z[j] == 0 for j, d in enumerate(diag))
    return on_diag and all(v == 0 for v in z[len(diag) :])


def localize(m: PresentedMonoid, elem: Sequence[int]) -> PresentedMonoid:
    """Adjoin τ with elem + τ ~ 0."""
    e = _vector(elem, m, "elem")
    relations = [(u + (0,), v + (0,)) for u, v in m.relations]
    relations.append((e + (1,), (0,) * (m.n_gens + 1)))
    return PresentedMonoid(n_gens=m.n_gens + 1, relations=tuple(relations))


def _rewrites(m: PresentedMonoid, x: Vector):
    for u, v in m.relations:
        for src, dst in ((u, v), (v, u)):
            if all(p >= q for p, q in zip(x, src)):
                yield tuple(p - q + r for p, q, r in zip(x, src, dst))


def _closure(m: PresentedMonoid, start: Vector, depth: int, goal: Vector | None = None) -> set[Vector]:
    """Elements reachable from ``start`` in at most ``depth`` rewrites."""
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        x, steps = queue.popleft()
        if x == goal:
            break
        if steps == depth:
            continue
        for y in _rewrites(m, x):
            if y not in seen:
                seen.add(y)
                if len(seen) > settings.MAX_REWRITE_STATES:
                    logger.warning(
                        "Rewriting closure hit the state cap",
                        extra={"extra_info": {"event": "rewrite_cap", "states": len(seen)}},
                    )
                    return seen
                queue.append((y, steps + 1))
    return seen


def congruent(m: PresentedMonoid, x: Sequence[int], y: Sequence[int], bound: int | None = None) -> bool:
    """Bounded semi-decision of x ~ y; False means "not found within bound"."""
    x, y = _vector(x, m, "x"), _vector(y, m, "y")
    if x == y:
        return True
    bound = settings.STABLE_EQUIV_BOUND if bound is None else bound
    return y in _closure(m, x, bound, goal=y)


def stable_equiv(
    a: Sequence[int], b: Sequence[int], psi: Sequence[int], m: PresentedMonoid, bound: int | None = None
) -> tuple[int, int] | None:
    """Least (i, j), ordered by i + j then i, with a + iψ ~ b + jψ."""
    a, b, psi = _vector(a, m, "a"), _vector(b, m, "b"), _vector(psi, m, "psi")
    bound = settings.STABLE_EQUIV_BOUND if bound is None else bound
    for total in range(2 * bound + 1):
        for i in range(max(0, total - bound), min(total, bound) + 1):
            j = total - i
            left = tuple(p + i * s for p, s in zip(a, psi))
            right = tuple(q + j * s for q, s in zip(b, psi))
            if congruent(m, left, right, bound):
                return i, j
    return None


def is_group(m: PresentedMonoid, bound: int | None = None) -> bool:
    """Whether every generator has an inverse found within the rewriting bound."""
    bound = settings.STABLE_EQUIV_BOUND if bound is None else bound
    zero_class = _closure(m, (0,) * m.n_gens, bound)
    return all(any(z[g] > 0 for z in zero_class) for g in range(m.n_gens))


def grading(m: PresentedMonoid) -> tuple[int, ...] | None:
    """Unit weights when every relation preserves total degree, else None."""
    if all(sum(u) == sum(v) for u, v in m.relations):
        return (1,) * m.n_gens
    return None
