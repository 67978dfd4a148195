"""IMEX Runge-Kutta double Butcher tableaux.

A scheme is the pair (A_ex, w_ex) for the explicit (transport, penalization
deviation) part and (A_im, w_im) for the diagonally implicit (relaxation)
part.  This module stores, validates and classifies such pairs, checks the
additive order conditions up to third order and the algebraic conditions for
asymptotic preservation, and ships the registry of named schemes used
throughout the package.
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

ZERO_TOL = 1e-14
CONDITION_TOL = 1e-12


class TableauError(ValueError):
    """Malformed tableau or a tableau outside the supported classes."""


class SchemeKind(str, Enum):
    TYPE_A = "A"
    TYPE_CK = "CK"
    TYPE_ARS = "ARS"


@dataclass(frozen=True, eq=False)
class ImexTableau:
    name: str
    A_ex: np.ndarray
    A_im: np.ndarray
    w_ex: np.ndarray
    w_im: np.ndarray
    order: int
    c_ex: np.ndarray = field(init=False)
    c_im: np.ndarray = field(init=False)

    def __post_init__(self):
        arrays = {}
        for key in ("A_ex", "A_im", "w_ex", "w_im"):
            a = np.array(getattr(self, key), dtype=float)
            arrays[key] = a
        A_ex, A_im = arrays["A_ex"], arrays["A_im"]
        if A_ex.ndim != 2 or A_ex.shape[0] != A_ex.shape[1]:
            raise TableauError(f"{self.name}: explicit matrix must be square, got {A_ex.shape}")
        nu = A_ex.shape[0]
        if A_im.shape != (nu, nu):
            raise TableauError(f"{self.name}: implicit matrix shape {A_im.shape} != {(nu, nu)}")
        for key in ("w_ex", "w_im"):
            if arrays[key].shape != (nu,):
                raise TableauError(f"{self.name}: {key} must have length {nu}")
        if np.any(np.triu(A_ex) != 0.0):
            raise TableauError(f"{self.name}: explicit matrix is not strictly lower triangular")
        if np.any(np.triu(A_im, 1) != 0.0):
            raise TableauError(f"{self.name}: implicit matrix is not lower triangular")
        for key, a in arrays.items():
            a.setflags(write=False)
            object.__setattr__(self, key, a)
        c_ex = A_ex.sum(axis=1)
        c_im = A_im.sum(axis=1)
        c_ex.setflags(write=False)
        c_im.setflags(write=False)
        object.__setattr__(self, "c_ex", c_ex)
        object.__setattr__(self, "c_im", c_im)
        object.__setattr__(self, "order", int(self.order))

    @property
    def nu(self) -> int:
        return self.A_ex.shape[0]

    def __repr__(self):
        return f"ImexTableau({self.name!r}, nu={self.nu}, order={self.order})"


def build_tableau(name, A_ex, A_im, w_ex, w_im, order) -> ImexTableau:
    """Validate raw coefficients and return an immutable tableau."""
    return ImexTableau(name, A_ex, A_im, w_ex, w_im, order)


# --------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class SchemeClass:
    kind: SchemeKind
    isa: bool
    gsa: bool


def classify(t: ImexTableau, zero_tol: float = ZERO_TOL) -> SchemeClass:
    d = np.abs(np.diag(t.A_im))
    if np.all(d > zero_tol):
        kind = SchemeKind.TYPE_A
    elif d[0] <= zero_tol and np.all(np.abs(t.A_im[0]) <= zero_tol) and np.all(d[1:] > zero_tol):
        a = t.A_im[1:, 0]
        if np.all(np.abs(a) <= zero_tol) and abs(t.w_im[0]) <= zero_tol:
            kind = SchemeKind.TYPE_ARS
        else:
            kind = SchemeKind.TYPE_CK
    else:
        raise TableauError(f"{t.name}: implicit part is neither type A nor type CK")
    isa = bool(np.all(np.abs(t.A_im[-1] - t.w_im) <= zero_tol))
    gsa = isa and bool(np.all(np.abs(t.A_ex[-1] - t.w_ex) <= zero_tol))
    return SchemeClass(kind, isa, gsa)


# --------------------------------------------------------------------------
# condition reports

@dataclass(frozen=True)
class Condition:
    id: str
    residual: float
    satisfied: bool
    applicable: bool = True


@dataclass
class ConditionReport:
    scheme: str
    tolerance: float
    entries: list[Condition] = field(default_factory=list)
    verdicts: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def add(self, cid: str, residual: float):
        residual = float(residual)
        self.entries.append(Condition(cid, residual, abs(residual) <= self.tolerance))

    def skip(self, cid: str):
        self.entries.append(Condition(cid, math.nan, False, applicable=False))

    def __getitem__(self, cid: str) -> Condition:
        for c in self.entries:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def select(self, prefix: str) -> list[Condition]:
        return [c for c in self.entries if c.id.startswith(prefix)]

    def passed(self, prefix: str = "") -> bool:
        sel = self.select(prefix)
        return bool(sel) and all(c.satisfied for c in sel)

    def failures(self) -> list[Condition]:
        return [c for c in self.entries if c.applicable and not c.satisfied]


def check_order_conditions(t: ImexTableau, p: int, tol: float = CONDITION_TOL) -> ConditionReport:
    """Classical and additive coupling order conditions up to order ``p <= 3``.

    Entry ids carry a prefix: ``ex:`` explicit method alone, ``im:`` the DIRK
    alone, ``mix:`` coupling conditions involving both tableaux.  Coupling
    conditions use the internal row-sum abscissae of each tableau.
    """
    if not 1 <= p <= 3:
        raise ValueError("order conditions are implemented for 1 <= p <= 3")
    rep = ConditionReport(t.name, tol)
    b = {"e": t.w_ex, "i": t.w_im}
    c = {"e": t.c_ex, "i": t.c_im}
    A = {"e": t.A_ex, "i": t.A_im}

    def tag(*parts):
        if all(x == "e" for x in parts):
            return "ex"
        if all(x == "i" for x in parts):
            return "im"
        return "mix"

    for k in "ei":
        rep.add(f"{tag(k)}:sum(b{k})=1", b[k].sum() - 1.0)
    if p >= 2:
        for k in "ei":
            for m in "ei":
                rep.add(f"{tag(k, m)}:b{k}.c{m}=1/2", b[k] @ c[m] - 0.5)
    if p >= 3:
        for k in "ei":
            for m, n in (("e", "e"), ("e", "i"), ("i", "i")):
                rep.add(f"{tag(k, m, n)}:b{k}.(c{m}*c{n})=1/3", b[k] @ (c[m] * c[n]) - 1.0 / 3.0)
        for k in "ei":
            for m in "ei":
                for n in "ei":
                    rep.add(f"{tag(k, m, n)}:b{k}.A{m}.c{n}=1/6", b[k] @ A[m] @ c[n] - 1.0 / 6.0)
    return rep


def _maxabs(x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.max(np.abs(x))) if x.size else 0.0


def check_ap_conditions(t: ImexTableau, tol: float = CONDITION_TOL) -> ConditionReport:
    """Algebraic asymptotic-preservation conditions and the AA / AA-c verdicts.

    Type A schemes are tested with the full implicit matrix, CK/ARS schemes
    with its invertible lower block and the split first column.  The index-1
    conditions use the implicit weights in place of the unnamed vector ``b``.
    The verdicts are derived from the entries only:

    * AA-c: GSA and the projection conditions (type A: ``w A^-1 e = 1`` and
      ``w_ex = w A^-1 A_ex``; CK: their three block counterparts).
    * AA: GSA and either type A, or one of the two penalized CK condition
      sets holds.
    """
    rep = ConditionReport(t.name, tol)
    cls = classify(t)
    nu = t.nu
    rep.add("gsa:implicit", _maxabs(t.A_im[-1] - t.w_im))
    rep.add("gsa:explicit", _maxabs(t.A_ex[-1] - t.w_ex))
    rep.notes.append("index-1 conditions use b = w (implicit weights)")

    ap_ids = ("ap:wAinv_e=1", "ap:w_ex=wAinvA_ex")
    ck_ids = ("ck:w1=whatAinv_a", "ck:w_ex1=whatAinv_a_ex", "ck:what_ex=whatAinvAhat_ex")
    pen_ids = ("apars:eAinvAhat_ex=0", "apars:eAinva_ex=0", "apars:eAinva=0")
    pen2_ids = ("apars2:Ainva_ex=0", "apars2:Ainva=0")
    idx_ids = ("index1:bAinvc_ex=1", "index1:bAinvc_ex2=1", "index1:bAinvA_exc_ex=1/2")

    if cls.kind is SchemeKind.TYPE_A:
        try:
            Ainv = np.linalg.inv(t.A_im)
        except np.linalg.LinAlgError:
            Ainv = None
        if Ainv is None:
            for cid in ap_ids + idx_ids:
                rep.skip(cid)
            rep.notes.append("implicit matrix not invertible")
        else:
            wA = t.w_im @ Ainv
            rep.add(ap_ids[0], wA.sum() - 1.0)
            rep.add(ap_ids[1], _maxabs(t.w_ex - wA @ t.A_ex))
            if cls.gsa:
                e_last = np.zeros(nu)
                e_last[-1] = 1.0
                rep.add("ap:wAinv=e_last", _maxabs(wA - e_last))
            ce = t.c_ex
            rep.add(idx_ids[0], wA @ ce - 1.0)
            rep.add(idx_ids[1], wA @ ce**2 - 1.0)
            rep.add(idx_ids[2], wA @ t.A_ex @ ce - 0.5)
        for cid in ("app:eAinva=0",) + ck_ids + pen_ids + pen2_ids:
            rep.skip(cid)
    else:
        Ahat = t.A_im[1:, 1:]
        a = t.A_im[1:, 0]
        Ahat_ex = t.A_ex[1:, 1:]
        a_ex = t.A_ex[1:, 0]
        w1, what = t.w_im[0], t.w_im[1:]
        wex1, what_ex = t.w_ex[0], t.w_ex[1:]
        Hinv = np.linalg.inv(Ahat)
        wH = what @ Hinv
        e_last = Hinv[-1]
        rep.add(ap_ids[0], wH.sum() - 1.0)
        rep.add(ap_ids[1], _maxabs(what_ex - wH @ Ahat_ex))
        rep.add(ck_ids[0], w1 - wH @ a)
        rep.add(ck_ids[1], wex1 - wH @ a_ex)
        rep.add(ck_ids[2], _maxabs(what_ex - wH @ Ahat_ex))
        rep.add("app:eAinva=0", e_last @ a)
        rep.add(pen_ids[0], _maxabs(e_last @ Ahat_ex))
        rep.add(pen_ids[1], e_last @ a_ex)
        rep.add(pen_ids[2], e_last @ a)
        rep.add(pen2_ids[0], _maxabs(Hinv @ a_ex))
        rep.add(pen2_ids[1], _maxabs(Hinv @ a))
        ce = t.c_ex[1:]
        rep.add(idx_ids[0], wH @ ce - 1.0)
        rep.add(idx_ids[1], wH @ ce**2 - 1.0)
        rep.add(idx_ids[2], wH @ (t.A_ex @ t.c_ex)[1:] - 0.5)

    gsa = rep.passed("gsa:")
    if cls.kind is SchemeKind.TYPE_A:
        projection = rep.passed("ap:wAinv_e") and rep.passed("ap:w_ex")
        aa = gsa and projection
    else:
        projection = rep.passed("ck:")
        aa = gsa and projection and (rep.passed("apars:") or rep.passed("apars2:"))
    rep.verdicts["gsa"] = gsa
    rep.verdicts["aa_c"] = gsa and projection
    rep.verdicts["aa"] = aa
    return rep


# --------------------------------------------------------------------------
# named schemes

def ars_111() -> ImexTableau:
    return build_tableau(
        "ARS(1,1,1)",
        [[0, 0], [1, 0]], [[0, 0], [0, 1]],
        [1, 0], [0, 1], order=1)


def dp_a_121(gamma: float = 1 + math.sqrt(2) / 2) -> ImexTableau:
    """Two-level type A first order scheme; gamma >= 1/2 keeps it monotone."""
    g = gamma
    return build_tableau(
        "DP-A(1,2,1)",
        [[0, 0], [1, 0]], [[g, 0], [1 - g, g]],
        [1, 0], [1 - g, g], order=1)


def dp_ars_121(gamma: float = 1 - math.sqrt(2) / 2) -> ImexTableau:
    g = gamma
    d = g / (1 - g)
    return build_tableau(
        "DP-ARS(1,2,1)",
        [[0, 0, 0], [d, 0, 0], [1, 0, 0]],
        [[0, 0, 0], [0, g, 0], [0, 1 - g, g]],
        [1, 0, 0], [0, 1 - g, g], order=1)


def ars_222(gamma: float = 1 - math.sqrt(2) / 2, name: str = "ARS(2,2,2)") -> ImexTableau:
    g = gamma
    d = 1 - 1 / (2 * g)
    return build_tableau(
        name,
        [[0, 0, 0], [g, 0, 0], [d, 1 - d, 0]],
        [[0, 0, 0], [0, g, 0], [0, 1 - g, g]],
        [d, 1 - d, 0], [0, 1 - g, g], order=2)


def dp_ars_222() -> ImexTableau:
    return ars_222(1 + math.sqrt(2) / 2, name="DP-ARS(2,2,2)")


def jf_ck_232() -> ImexTableau:
    return build_tableau(
        "JF-CK(2,3,2)",
        [[0, 0, 0], [0.5, 0, 0], [0, 1, 0]],
        [[0, 0, 0], [0, 0.5, 0], [0.5, 0, 0.5]],
        [0, 1, 0], [0.5, 0, 0.5], order=2)


def dp1_a_242() -> ImexTableau:
    return build_tableau(
        "DP1-A(2,4,2)",
        [[0, 0, 0, 0],
         [1 / 3, 0, 0, 0],
         [1, 0, 0, 0],
         [0.5, 0, 0.5, 0]],
        [[0.5, 0, 0, 0],
         [1 / 6, 0.5, 0, 0],
         [-0.5, 0.5, 0.5, 0],
         [1.5, -1.5, 0.5, 0.5]],
        [0.5, 0, 0.5, 0], [1.5, -1.5, 0.5, 0.5], order=2)


def dp2_a_242(gamma: float, name: str | None = None) -> ImexTableau:
    """Second order GSA type A scheme; monotone for z >= 1/(2g^2-4g+1) when g > 1+sqrt(2)/2."""
    g = gamma
    return build_tableau(
        name or f"DP2-A(2,4,2)[gamma={g:g}]",
        [[0, 0, 0, 0],
         [0, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0.5, 0.5, 0]],
        [[g, 0, 0, 0],
         [-g, g, 0, 0],
         [0, 1 - g, g, 0],
         [0, 0.5, 0.5 - g, g]],
        [0, 0.5, 0.5, 0], [0, 0.5, 0.5 - g, g], order=2)


def ars_443() -> ImexTableau:
    return build_tableau(
        "ARS(4,4,3)",
        [[0, 0, 0, 0, 0],
         [1 / 2, 0, 0, 0, 0],
         [11 / 18, 1 / 18, 0, 0, 0],
         [5 / 6, -5 / 6, 1 / 2, 0, 0],
         [1 / 4, 7 / 4, 3 / 4, -7 / 4, 0]],
        [[0, 0, 0, 0, 0],
         [0, 1 / 2, 0, 0, 0],
         [0, 1 / 6, 1 / 2, 0, 0],
         [0, -1 / 2, 1 / 2, 1 / 2, 0],
         [0, 3 / 2, -3 / 2, 1 / 2, 1 / 2]],
        [1 / 4, 7 / 4, 3 / 4, -7 / 4, 0],
        [0, 3 / 2, -3 / 2, 1 / 2, 1 / 2], order=3)


def bpr_ck_353() -> ImexTableau:
    return build_tableau(
        "BPR-CK(3,5,3)",
        [[0, 0, 0, 0, 0],
         [1, 0, 0, 0, 0],
         [4 / 9, 2 / 9, 0, 0, 0],
         [1 / 4, 0, 3 / 4, 0, 0],
         [1 / 4, 0, 3 / 4, 0, 0]],
        [[0, 0, 0, 0, 0],
         [1 / 2, 1 / 2, 0, 0, 0],
         [5 / 18, -1 / 9, 1 / 2, 0, 0],
         [1 / 2, 0, 0, 1 / 2, 0],
         [1 / 4, 0, 3 / 4, -1 / 2, 1 / 2]],
        [1 / 4, 0, 3 / 4, 0, 0],
        [1 / 4, 0, 3 / 4, -1 / 2, 1 / 2], order=3)


def _build_registry() -> dict[str, ImexTableau]:
    schemes = [
        ars_111(),
        dp_ars_121(),
        dp_a_121(),
        ars_222(),
        dp_ars_222(),
        jf_ck_232(),
        dp1_a_242(),
        dp2_a_242(1 / 3, name="DP2-A1(2,4,2)"),
        dp2_a_242(2.0, name="DP2-A2(2,4,2)"),
        ars_443(),
        bpr_ck_353(),
    ]
    return {t.name: t for t in schemes}


_REGISTRY = _build_registry()

_ALIASES = {
    "DP2-A₁(2,4,2)": "DP2-A1(2,4,2)",
    "DP2-A₂(2,4,2)": "DP2-A2(2,4,2)",
}


def registry() -> dict[str, ImexTableau]:
    """Named schemes, in table order. Returns a fresh dict over shared tableaux."""
    return dict(_REGISTRY)


def get_scheme(name: str) -> ImexTableau:
    key = _ALIASES.get(name, name).replace(" ", "")
    try:
        return _REGISTRY[key]
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; known: {', '.join(_REGISTRY)}") from None


# --------------------------------------------------------------------------
# plain-text tableau files

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt}
_CONSTS = {"pi": math.pi}


def eval_expr(text: str) -> float:
    """Evaluate a coefficient such as ``1/3``, ``-0.5`` or ``1-sqrt(2)/2``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        raise TableauError(f"unsupported coefficient expression: {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise TableauError(f"cannot parse coefficient {text!r}") from exc
    return ev(tree)


def parse_tableau(text: str) -> ImexTableau:
    """Parse the plain-text format.

    Header ``name nu order``, then nu rows of the explicit matrix, one row of
    explicit weights, nu rows of the implicit matrix and one row of implicit
    weights. Blank lines and ``#`` comments are ignored.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    if not lines:
        raise TableauError("empty tableau file")
    header = lines[0]
    if len(header) != 3:
        raise TableauError("header must be 'name nu order'")
    name, nu, order = header[0], int(header[1]), int(header[2])
    body = lines[1:]
    if len(body) != 2 * nu + 2:
        raise TableauError(f"expected {2 * nu + 2} coefficient rows, found {len(body)}")
    rows = [[eval_expr(tok) for tok in row] for row in body]
    for r in rows:
        if len(r) != nu:
            raise TableauError(f"row has {len(r)} entries, expected {nu}")
    return build_tableau(name, rows[:nu], rows[nu + 1:2 * nu + 1], rows[nu], rows[2 * nu + 1], order)


def format_tableau(t: ImexTableau) -> str:
    def row(v):
        return " ".join(repr(float(x)) for x in v)
    out = [f"{t.name} {t.nu} {t.order}"]
    out += [row(r) for r in t.A_ex] + [row(t.w_ex)]
    out += [row(r) for r in t.A_im] + [row(t.w_im)]
    return "\n".join(out) + "\n"


def load_tableau(path) -> ImexTableau:
    return parse_tableau(Path(path).read_text(encoding="utf-8"))
