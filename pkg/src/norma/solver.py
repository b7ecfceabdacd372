"""Satisfiability of conjunctions of linear size constraints over the rationals.

Constants live in Q + Q*omega, where omega is a positive infinite element,
so the size -inf is the exact constant -omega. Equalities are eliminated by
Gaussian substitution, inequalities by Fourier-Motzkin with strictness flags,
and a witness is rebuilt by back-substitution and verified exactly. ``max``
terms become auxiliaries bounded below by their arguments; when a witness
puts an auxiliary strictly above all arguments, the search branches on which
argument attains the maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .sizes import Add, Constraint, Max, Mul, NegInf, Num, SizeExpr, SizeVar, Sub

BLOWUP_CAP = 64


@dataclass(frozen=True, order=False)
class Ext:
    """a + b*omega with rational a, b; ordered lexicographically on (b, a)."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __add__(self, o: "Ext") -> "Ext":
        return Ext(self.a + o.a, self.b + o.b)

    def __sub__(self, o: "Ext") -> "Ext":
        return Ext(self.a - o.a, self.b - o.b)

    def __neg__(self) -> "Ext":
        return Ext(-self.a, -self.b)

    def scale(self, k: Fraction) -> "Ext":
        return Ext(self.a * k, self.b * k)

    def sign(self) -> int:
        if self.b:
            return 1 if self.b > 0 else -1
        return (self.a > 0) - (self.a < 0)

    def __lt__(self, o: "Ext") -> bool:
        return (self - o).sign() < 0

    def __le__(self, o: "Ext") -> bool:
        return (self - o).sign() <= 0

    def __gt__(self, o: "Ext") -> bool:
        return (self - o).sign() > 0

    def __ge__(self, o: "Ext") -> bool:
        return (self - o).sign() >= 0

    def is_finite(self) -> bool:
        return self.b == 0

    def __str__(self) -> str:
        if not self.b:
            return str(self.a)
        if self.b == -1 and not self.a:
            return "-inf"
        return f"{self.a} + {self.b}w"


ZERO = Ext()
ONE = Ext(Fraction(1))
NEG_OMEGA = Ext(Fraction(0), Fraction(-1))


def ext(v) -> Ext:
    """Coerce an int, Fraction, float -inf or Ext to Ext."""
    if isinstance(v, Ext):
        return v
    if isinstance(v, float):
        if v == float("-inf"):
            return NEG_OMEGA
        return Ext(Fraction(v))
    return Ext(Fraction(v))


# ---------------------------------------------------------------------------
# Evaluation and model checking
# ---------------------------------------------------------------------------


def evaluate(e: SizeExpr, model: Mapping[str, object]) -> Ext:
    """Value of ``e`` under ``model``; max is evaluated semantically."""
    if isinstance(e, Num):
        return Ext(Fraction(e.value))
    if isinstance(e, NegInf):
        return NEG_OMEGA
    if isinstance(e, SizeVar):
        return ext(model[e.name])
    if isinstance(e, Add):
        return evaluate(e.left, model) + evaluate(e.right, model)
    if isinstance(e, Sub):
        return evaluate(e.left, model) - evaluate(e.right, model)
    if isinstance(e, Mul):
        left, right = evaluate(e.left, model), evaluate(e.right, model)
        if left.is_finite():
            return right.scale(left.a)
        if right.is_finite():
            return left.scale(right.a)
        raise ValueError("product of two infinite sizes")
    if isinstance(e, Max):
        return max((evaluate(a, model) for a in e.args), key=_ext_key)
    raise TypeError(f"not a size expression: {e!r}")


def _ext_key(x: Ext):
    return (x.b, x.a)


def holds(c: Constraint, model: Mapping[str, object]) -> bool:
    d = (evaluate(c.lhs, model) - evaluate(c.rhs, model)).sign()
    if c.op == "=":
        return d == 0
    if c.op == ">=":
        return d >= 0
    return d > 0


def check_model(constraints: Iterable[Constraint], model: Mapping[str, object]) -> bool:
    """True iff every constraint holds; False if a variable is unassigned."""
    try:
        return all(holds(c, model) for c in constraints)
    except KeyError:
        return False


# ---------------------------------------------------------------------------
# Linear rows
# ---------------------------------------------------------------------------


@dataclass
class _Lin:
    coeffs: dict[str, Fraction] = field(default_factory=dict)
    const: Ext = ZERO

    def add(self, o: "_Lin", k: Fraction = Fraction(1)) -> "_Lin":
        coeffs = dict(self.coeffs)
        for v, c in o.coeffs.items():
            nc = coeffs.get(v, 0) + k * c
            if nc:
                coeffs[v] = nc
            else:
                coeffs.pop(v, None)
        return _Lin(coeffs, self.const + o.const.scale(k))

    def scale(self, k: Fraction) -> "_Lin":
        if not k:
            return _Lin()
        return _Lin({v: c * k for v, c in self.coeffs.items()}, self.const.scale(k))


@dataclass(frozen=True)
class _Max:
    aux: str
    args: tuple[_Lin, ...]


class _Linearizer:
    def __init__(self) -> None:
        self.maxes: list[_Max] = []

    def lin(self, e: SizeExpr) -> _Lin:
        if isinstance(e, Num):
            return _Lin({}, Ext(Fraction(e.value)))
        if isinstance(e, NegInf):
            return _Lin({}, NEG_OMEGA)
        if isinstance(e, SizeVar):
            return _Lin({e.name: Fraction(1)})
        if isinstance(e, Add):
            return self.lin(e.left).add(self.lin(e.right))
        if isinstance(e, Sub):
            return self.lin(e.left).add(self.lin(e.right), Fraction(-1))
        if isinstance(e, Mul):
            left, right = self.lin(e.left), self.lin(e.right)
            if not left.coeffs and left.const.is_finite():
                return right.scale(left.const.a)
            if not right.coeffs and right.const.is_finite():
                return left.scale(right.const.a)
            raise ValueError(f"non-linear size expression {e}")
        if isinstance(e, Max):
            name = f"$max{len(self.maxes)}"
            self.maxes.append(_Max(name, tuple(self.lin(a) for a in e.args)))
            return _Lin({name: Fraction(1)})
        raise TypeError(f"not a size expression: {e!r}")


@dataclass(frozen=True)
class _Row:
    """sum(coeffs * vars) + const  REL  0 with REL in {=, >=, >}."""

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Ext
    rel: str

    @staticmethod
    def make(lin: _Lin, rel: str) -> "_Row":
        items = sorted((v, c) for v, c in lin.coeffs.items() if c)
        if items:
            k = abs(items[0][1])
            if k != 1:
                items = [(v, c / k) for v, c in items]
                lin = _Lin(lin.coeffs, lin.const.scale(1 / k))
        return _Row(tuple(items), lin.const, rel)

    def coeff(self, v: str) -> Fraction:
        for w, c in self.coeffs:
            if w == v:
                return c
        return Fraction(0)

    def lin(self) -> _Lin:
        return _Lin(dict(self.coeffs), self.const)

    def trivially_holds(self) -> bool:
        s = self.const.sign()
        return s == 0 if self.rel == "=" else s >= 0 if self.rel == ">=" else s > 0


# ---------------------------------------------------------------------------
# Decision procedure
# ---------------------------------------------------------------------------


@dataclass
class SatResult:
    sat: bool
    model: dict[str, Ext] | None = None
    imprecise: bool = False

    def __bool__(self) -> bool:
        return self.sat


class _Blowup(Exception):
    pass


def _substitute(row: _Row, v: str, expr: _Lin) -> _Row:
    c = row.coeff(v)
    if not c:
        return row
    lin = row.lin()
    lin.coeffs.pop(v)
    return _Row.make(lin.add(expr, c), row.rel)


def _eval_lin(lin: _Lin, model: Mapping[str, Ext]) -> Ext:
    total = lin.const
    for v, c in lin.coeffs.items():
        total = total + model.get(v, ZERO).scale(c)
    return total


def _relaxation_model(rows: list[_Row], priority: set[str], cap: int) -> dict[str, Ext] | None:
    """Exact FM decision for a conjunction of rows; a model or None."""
    equations: list[tuple[str, _Lin]] = []
    rows = list(dict.fromkeys(rows))
    # Gaussian elimination of equalities.
    while True:
        eq = next((r for r in rows if r.rel == "=" and r.coeffs), None)
        if eq is None:
            break
        v = next((w for w, _ in eq.coeffs if w not in priority), eq.coeffs[0][0])
        c = eq.coeff(v)
        expr = eq.lin()
        expr.coeffs.pop(v)
        expr = expr.scale(-1 / c)
        equations.append((v, expr))
        rows = [_substitute(r, v, expr) for r in rows if r is not eq]
        rows = list(dict.fromkeys(rows))
    ineqs = []
    for r in rows:
        if not r.coeffs:
            if not r.trivially_holds():
                return None
        else:
            ineqs.append(r)
    # Fourier-Motzkin on inequalities.
    eliminated: list[tuple[str, list[_Row]]] = []
    while ineqs:
        occ: dict[str, tuple[int, int]] = {}
        for r in ineqs:
            for v, c in r.coeffs:
                p, n = occ.get(v, (0, 0))
                occ[v] = (p + 1, n) if c > 0 else (p, n + 1)
        v = min(occ, key=lambda w: (w not in priority, occ[w][0] * occ[w][1], sum(occ[w]), w))
        pos = [r for r in ineqs if r.coeff(v) > 0]
        neg = [r for r in ineqs if r.coeff(v) < 0]
        rest = [r for r in ineqs if not r.coeff(v)]
        eliminated.append((v, pos + neg))
        derived = []
        for p in pos:
            for q in neg:
                a, b = p.coeff(v), -q.coeff(v)
                lin = p.lin().scale(b).add(q.lin(), a)
                lin.coeffs.pop(v, None)
                rel = ">" if p.rel == ">" or q.rel == ">" else ">="
                derived.append(_Row.make(lin, rel))
        if len(derived) > cap:
            raise _Blowup()
        ineqs = []
        for r in dict.fromkeys(rest + derived):
            if not r.coeffs:
                if not r.trivially_holds():
                    return None
            else:
                ineqs.append(r)
    # Back-substitution.
    model: dict[str, Ext] = {}
    for v, bounds in reversed(eliminated):
        lo, lo_strict, hi, hi_strict = None, False, None, False
        for r in bounds:
            c = r.coeff(v)
            lin = r.lin()
            lin.coeffs.pop(v)
            bound = _eval_lin(lin, model).scale(-1 / c)
            strict = r.rel == ">"
            if c > 0:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_strict = bound, strict
            else:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_strict = bound, strict
        model[v] = _pick(lo, lo_strict, hi, hi_strict)
    for v, expr in reversed(equations):
        model[v] = _eval_lin(expr, model)
    return model


def _pick(lo, lo_strict, hi, hi_strict) -> Ext:
    if lo is None and hi is None:
        return ZERO
    if lo is None:
        if hi > ZERO or (hi == ZERO and not hi_strict):
            return ZERO
        return hi - ONE if hi_strict else hi
    if not lo_strict:
        return lo
    if hi is None:
        return lo + ONE
    return (lo + hi).scale(Fraction(1, 2))


def _rows_of(constraints: Iterable[Constraint], linz: _Linearizer) -> list[_Row]:
    rows = []
    for c in constraints:
        lin = linz.lin(c.lhs).add(linz.lin(c.rhs), Fraction(-1))
        rows.append(_Row.make(lin, c.op))
    return rows


def _max_rows(m: _Max) -> list[_Row]:
    aux = _Lin({m.aux: Fraction(1)})
    return [_Row.make(aux.add(a, Fraction(-1)), ">=") for a in m.args]


def sat(constraints: Iterable[Constraint], cap: int = BLOWUP_CAP) -> SatResult:
    """Decide satisfiability over Q (+ the -inf constant), with a verified witness."""
    constraints = list(constraints)
    linz = _Linearizer()
    base = _rows_of(constraints, linz)
    for m in linz.maxes:
        base += _max_rows(m)
    priority = {m.aux for m in linz.maxes}
    variables = {c.name for con in constraints for c in con.vars()}
    imprecise = [False]

    def solve(rows: list[_Row], depth: int) -> dict[str, Ext] | None:
        try:
            model = _relaxation_model(rows, priority, cap)
        except _Blowup:
            imprecise[0] = True
            model = _linprog_model(rows)
        if model is None:
            return None
        for v in variables | priority:
            model.setdefault(v, ZERO)
        for m in linz.maxes:
            value = model[m.aux]
            attained = [a for a in m.args if _eval_lin(a, model) == value]
            if attained:
                continue
            if depth > len(linz.maxes):
                return None
            for a in m.args:
                upper = _Row.make(a.add(_Lin({m.aux: Fraction(1)}), Fraction(-1)), ">=")
                sub = solve(rows + [upper], depth + 1)
                if sub is not None:
                    return sub
            return None
        return model

    model = solve(base, 0)
    if model is None:
        return SatResult(False, None, imprecise[0])
    witness = {v: model[v] for v in variables}
    if not check_model(constraints, witness):
        if imprecise[0]:
            return SatResult(False, None, True)
        raise AssertionError("solver produced a witness that does not verify")
    return SatResult(True, witness, imprecise[0])


def _linprog_model(rows: list[_Row]) -> dict[str, Ext] | None:
    """Floating-point fallback; the caller re-verifies any model exactly."""
    import numpy as np
    from scipy.optimize import linprog

    big = 1e6
    names = sorted({v for r in rows for v, _ in r.coeffs})
    index = {v: k for k, v in enumerate(names)}
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for r in rows:
        vec = np.zeros(len(names))
        for v, c in r.coeffs:
            vec[index[v]] = float(c)
        const = float(r.const.a) + big * float(r.const.b)
        if r.rel == "=":
            a_eq.append(vec)
            b_eq.append(-const)
        else:
            a_ub.append(-vec)
            b_ub.append(const - (1e-6 if r.rel == ">" else 0.0))
    if not names:
        return {} if all(r.trivially_holds() for r in rows) else None
    res = linprog(
        np.zeros(len(names)),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=[(None, None)] * len(names),
        method="highs",
    )
    if res.status != 0:
        return None
    return {v: Ext(Fraction(float(x)).limit_denominator(10**6)) for v, x in zip(names, res.x)}
