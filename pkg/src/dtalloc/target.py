"""The allocation target: type checking, the heap machine, and heap audits.

Pairs and closures do not exist here. A tuple comes into being empty
(malloc), is filled left to right (assign1, then assign2), and the pair
type of the tuple records with two flags how much of it has been filled.
Projection and closure application demand the flags they need, so a
program that reads too early fails to type rather than reading garbage.
ctag repackages a fully filled tuple of code and environment as a
function.

Typing is heap-indexed: locations type at the current pair type of their
cell. Unlike source pair types, a target pair type may join components
from different universes; the pair type then lives in the larger one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import conversion
from .errors import ErrKind, FuelExhausted, StuckError, TypeCheckError
from .heap import UNINIT, Config, Heap, HeapCell, locs_in
from .syntax import (
    App,
    Assign1,
    Assign2,
    Clo,
    Code,
    CodeTy,
    Context,
    CTag,
    Expr,
    Fst,
    Let,
    Loc,
    Malloc,
    Pair,
    Pi,
    Sigma,
    Snd,
    UnitTm,
    UnitTy,
    Univ,
    Universe,
    Var,
    free_vars,
    fresh_name,
    push_binder,
    subst,
    subst_many,
)

_SOURCE_ONLY = (Pair, Clo)


def tgt_wf(e: Expr) -> None:
    """Reject pair and closure literals syntactically."""
    stack = [e]
    while stack:
        cur = stack.pop()
        if isinstance(cur, _SOURCE_ONLY):
            what = "pair literal" if isinstance(cur, Pair) else "closure literal"
            raise TypeCheckError(
                ErrKind.LANG_VIOLATION, f"{what} must be compiled to allocation", cur.pos
            )
        if isinstance(cur, Expr):
            for f in cur.__dataclass_fields__:
                if f != "pos":
                    val = getattr(cur, f)
                    if isinstance(val, Expr):
                        stack.append(val)


def tgt_equiv(
    heap: Heap, ctx: Context, a: Expr, b: Expr, fuel: int = conversion.DEFAULT_FUEL
) -> bool:
    return conversion.equiv(ctx.defs(), a, b, heap=heap, fuel=fuel)


def tgt_subtype(
    heap: Heap, ctx: Context, small: Expr, big: Expr, fuel: int = conversion.DEFAULT_FUEL
) -> bool:
    return conversion.subtype(ctx.defs(), small, big, heap=heap, fuel=fuel)


def tgt_normalize(
    heap: Heap, ctx: Context, e: Expr, fuel: int = conversion.DEFAULT_FUEL
) -> Expr:
    return conversion.normalize(ctx.defs(), e, heap=heap, fuel=fuel)


def _norm_ty(heap: Heap, ctx: Context, ty: Expr, pos) -> Expr:
    try:
        return tgt_normalize(heap, ctx, ty)
    except FuelExhausted:
        raise TypeCheckError(ErrKind.EQUIV_FAIL, "type normalization ran out of fuel", pos)


def _ensure_subtype(heap: Heap, ctx: Context, inferred: Expr, expected: Expr, pos, what: str):
    try:
        ok = tgt_subtype(heap, ctx, inferred, expected)
    except FuelExhausted:
        raise TypeCheckError(ErrKind.EQUIV_FAIL, f"conversion ran out of fuel for {what}", pos)
    if not ok:
        raise TypeCheckError(ErrKind.SUBTYPE_FAIL, f"{what} has the wrong type", pos)


def _sort_of(heap: Heap, ctx: Context, e: Expr, what: str) -> Universe:
    t = _norm_ty(heap, ctx, tgt_infer(heap, ctx, e), e.pos)
    if isinstance(t, Univ):
        return t.kind
    raise TypeCheckError(ErrKind.UNIVERSE_ERROR, f"{what} is not a type", e.pos)


def _pair_sort(s1: Universe, s2: Universe) -> Universe:
    # components of different levels join at the larger level
    if s1 == Universe.STAR and s2 == Universe.STAR:
        return Universe.STAR
    return Universe.BOX


def tgt_check(heap: Heap, ctx: Context, e: Expr, ty: Expr) -> None:
    inferred = tgt_infer(heap, ctx, e)
    _ensure_subtype(heap, ctx, inferred, ty, e.pos, "term")


def tgt_infer(heap: Heap, ctx: Context, e: Expr) -> Expr:
    """Infer the type of a target term under the given heap."""
    match e:
        case Var(x):
            b = ctx.lookup(x)
            if b is None:
                raise TypeCheckError(ErrKind.UNBOUND_VAR, f"unbound variable '{x}'", e.pos)
            return b.ty
        case Univ(Universe.STAR):
            return Univ(Universe.BOX)
        case Univ(Universe.BOX):
            raise TypeCheckError(ErrKind.UNIVERSE_ERROR, "the top universe has no type", e.pos)
        case UnitTy():
            return Univ(Universe.STAR)
        case UnitTm():
            return UnitTy()
        case Loc(i):
            cell = heap.cell(i)
            if cell is None:
                raise TypeCheckError(ErrKind.UNKNOWN_LOC, f"location {i} is not allocated", e.pos)
            return cell.cell_type
        case Pi(x, dom, cod):
            _sort_of(heap, ctx, dom, "function domain")
            ctx2, x2 = push_binder(ctx, x, dom)
            s = _sort_of(heap, ctx2, subst(cod, Var(x2), x), "function codomain")
            return Univ(s)
        case Sigma(x, dom, _, cod, _):
            s1 = _sort_of(heap, ctx, dom, "pair type component")
            ctx2, x2 = push_binder(ctx, x, dom)
            s2 = _sort_of(heap, ctx2, subst(cod, Var(x2), x), "pair type component")
            return Univ(_pair_sort(s1, s2))
        case CodeTy(n, envty, x, argty, res):
            _require_closed(e, "code type")
            empty = Context()
            _sort_of(heap, empty, envty, "code environment type")
            ctx_n, n2 = push_binder(empty, n, envty)
            argty2 = subst(argty, Var(n2), n) if x != n else argty
            res2 = subst(res, Var(n2), n) if x != n else res
            _sort_of(heap, ctx_n, argty2, "code argument type")
            ctx_nx, x2 = push_binder(ctx_n, x, argty2)
            s = _sort_of(heap, ctx_nx, subst(res2, Var(x2), x), "code result type")
            return Univ(s)
        case Code(n, envty, x, argty, body):
            _require_closed(e, "code")
            empty = Context()
            _sort_of(heap, empty, envty, "code environment type")
            ctx_n, n2 = push_binder(empty, n, envty)
            argty2 = subst(argty, Var(n2), n) if x != n else argty
            body2 = subst(body, Var(n2), n) if x != n else body
            _sort_of(heap, ctx_n, argty2, "code argument type")
            ctx_nx, x2 = push_binder(ctx_n, x, argty2)
            res = tgt_infer(heap, ctx_nx, subst(body2, Var(x2), x))
            return CodeTy(n2, envty, x2, argty2, res)
        case App(f, a):
            fn_ty = _norm_ty(heap, ctx, tgt_infer(heap, ctx, f), f.pos)
            if not isinstance(fn_ty, Pi):
                raise TypeCheckError(
                    ErrKind.NOT_A_FUNCTION, "application of a non-function", f.pos
                )
            tgt_check(heap, ctx, a, fn_ty.dom)
            return subst(fn_ty.cod, a, fn_ty.binder)
        case Fst(inner):
            t = _norm_ty(heap, ctx, tgt_infer(heap, ctx, inner), inner.pos)
            if not isinstance(t, Sigma):
                raise TypeCheckError(ErrKind.NOT_A_PAIR, "projection from a non-pair", inner.pos)
            if t.flag1 != 1:
                raise TypeCheckError(
                    ErrKind.FLAG_ERROR, "first slot may be uninitialized", e.pos
                )
            return t.dom
        case Snd(inner):
            t = _norm_ty(heap, ctx, tgt_infer(heap, ctx, inner), inner.pos)
            if not isinstance(t, Sigma):
                raise TypeCheckError(ErrKind.NOT_A_PAIR, "projection from a non-pair", inner.pos)
            if (t.flag1, t.flag2) != (1, 1):
                raise TypeCheckError(
                    ErrKind.FLAG_ERROR, "second slot may be uninitialized", e.pos
                )
            return subst(t.cod, Fst(inner), t.binder)
        case Malloc(x, t1, t2):
            _sort_of(heap, ctx, t1, "allocated component type")
            ctx2, x2 = push_binder(ctx, x, t1)
            t2r = subst(t2, Var(x2), x)
            _sort_of(heap, ctx2, t2r, "allocated component type")
            return Sigma(x2, t1, 0, t2r, 0)
        case Assign1(t, v):
            ty = _norm_ty(heap, ctx, tgt_infer(heap, ctx, t), t.pos)
            if not isinstance(ty, Sigma):
                raise TypeCheckError(ErrKind.NOT_A_PAIR, "assignment to a non-tuple", t.pos)
            if ty.flag1 != 0:
                raise TypeCheckError(
                    ErrKind.FLAG_ERROR, "first slot is already initialized", e.pos
                )
            tgt_check(heap, ctx, v, ty.dom)
            return Sigma(ty.binder, ty.dom, 1, ty.cod, ty.flag2)
        case Assign2(t, v):
            ty = _norm_ty(heap, ctx, tgt_infer(heap, ctx, t), t.pos)
            if not isinstance(ty, Sigma):
                raise TypeCheckError(ErrKind.NOT_A_PAIR, "assignment to a non-tuple", t.pos)
            if (ty.flag1, ty.flag2) != (1, 0):
                raise TypeCheckError(
                    ErrKind.FLAG_ERROR,
                    "second assignment needs a filled first slot and an empty second slot",
                    e.pos,
                )
            tgt_check(heap, ctx, v, subst(ty.cod, Fst(t), ty.binder))
            return Sigma(ty.binder, ty.dom, 1, ty.cod, 1)
        case CTag(t):
            ty = _norm_ty(heap, ctx, tgt_infer(heap, ctx, t), t.pos)
            if not isinstance(ty, Sigma):
                raise TypeCheckError(
                    ErrKind.NOT_A_FUNCTION, "ctag expects a code-and-environment pair", t.pos
                )
            if (ty.flag1, ty.flag2) != (1, 1):
                raise TypeCheckError(
                    ErrKind.FLAG_ERROR, "ctag needs both slots initialized", e.pos
                )
            code_ty = _norm_ty(heap, ctx, ty.dom, t.pos)
            if not isinstance(code_ty, CodeTy):
                raise TypeCheckError(
                    ErrKind.NOT_A_FUNCTION, "ctag expects a code-and-environment pair", t.pos
                )
            if ty.binder in free_vars(ty.cod):
                raise TypeCheckError(
                    ErrKind.NOT_A_FUNCTION, "ctag expects a code-and-environment pair", t.pos
                )
            try:
                env_ok = tgt_equiv(heap, ctx, ty.cod, code_ty.env_ty)
            except FuelExhausted:
                raise TypeCheckError(
                    ErrKind.EQUIV_FAIL, "conversion ran out of fuel for ctag", e.pos
                )
            if not env_ok:
                raise TypeCheckError(
                    ErrKind.NOT_A_FUNCTION, "ctag expects a code-and-environment pair", t.pos
                )
            return _ctag_result(code_ty, Snd(t))
        case Let(x, bound, annot, body):
            _sort_of(heap, ctx, annot, "let annotation")
            tgt_check(heap, ctx, bound, annot)
            ctx2, x2 = push_binder(ctx, x, annot, defn=bound)
            body_ty = tgt_infer(heap, ctx2, subst(body, Var(x2), x))
            return subst(body_ty, bound, x2)
        case Pair() | Clo():
            what = "pair literal" if isinstance(e, Pair) else "closure literal"
            raise TypeCheckError(
                ErrKind.LANG_VIOLATION, f"{what} must be compiled to allocation", e.pos
            )
    raise TypeError(f"unknown expression node: {e!r}")


def _require_closed(e: Expr, what: str) -> None:
    fv = free_vars(e)
    if fv:
        names = ", ".join(sorted(fv))
        raise TypeCheckError(ErrKind.OPEN_CODE, f"{what} mentions outer variables: {names}", e.pos)


def _ctag_result(code_ty: CodeTy, env: Expr) -> Pi:
    """The function type a tagged tuple acquires: the code's argument and
    result types with the tuple's second projection as the environment."""
    n, x = code_ty.env_binder, code_ty.arg_binder
    argty, res = code_ty.arg_ty, code_ty.result_ty
    if x in free_vars(env):
        x2 = fresh_name(x, free_vars(env) | free_vars(res) | free_vars(argty) | {n})
        res = subst(res, Var(x2), x)
        x = x2
    if x == n:
        return Pi(x, subst(argty, env, n), res)
    return Pi(x, subst(argty, env, n), subst(res, env, n))


# ---------------------------------------------------------------------------
# The heap machine

def is_tgt_value(e: Expr) -> bool:
    match e:
        case UnitTm() | UnitTy() | Univ() | Pi() | Sigma() | CodeTy() | Code() | Loc():
            return True
        case CTag(inner):
            return isinstance(inner, Loc)
    return False


def tgt_step(config: Config) -> tuple[Config, str] | None:
    """One machine step, or None when the expression is a value."""
    r = _step(config.heap, config.expr)
    if r is None:
        return None
    heap2, e2, rule = r
    return Config(heap2, e2), rule


def _step(heap: Heap, e: Expr) -> tuple[Heap, Expr, str] | None:
    if is_tgt_value(e):
        return None
    match e:
        case Let(x, bound, annot, body):
            if not is_tgt_value(bound):
                heap2, b2, rule = _step_sub(heap, bound)
                return heap2, Let(x, b2, annot, body, pos=e.pos), rule
            return heap, subst(body, bound, x), "let"
        case App(f, a):
            if not is_tgt_value(f):
                heap2, f2, rule = _step_sub(heap, f)
                return heap2, App(f2, a, pos=e.pos), rule
            if not is_tgt_value(a):
                heap2, a2, rule = _step_sub(heap, a)
                return heap2, App(f, a2, pos=e.pos), rule
            if isinstance(f, CTag) and isinstance(f.expr, Loc):
                cell = heap.cell(f.expr.loc_id)
                if cell is None:
                    raise StuckError("application through a dangling location")
                if cell.flags != (1, 1) or cell.slot1 is UNINIT or cell.slot2 is UNINIT:
                    raise StuckError("application through a partly initialized tuple")
                if not isinstance(cell.slot1, Code):
                    raise StuckError("tagged tuple does not hold code")
                c = cell.slot1
                m = {c.env_binder: cell.slot2}
                m[c.arg_binder] = a
                return heap, subst_many(c.body, m), "app-ctag"
            raise StuckError(f"cannot apply {type(f).__name__}")
        case Fst(inner):
            if not is_tgt_value(inner):
                heap2, i2, rule = _step_sub(heap, inner)
                return heap2, Fst(i2, pos=e.pos), rule
            if isinstance(inner, Loc):
                cell = heap.cell(inner.loc_id)
                if cell is None:
                    raise StuckError("projection through a dangling location")
                if cell.flags[0] != 1 or cell.slot1 is UNINIT:
                    raise StuckError("first slot is uninitialized")
                return heap, cell.slot1, "fst-loc"
            raise StuckError("first projection of a non-tuple value")
        case Snd(inner):
            if not is_tgt_value(inner):
                heap2, i2, rule = _step_sub(heap, inner)
                return heap2, Snd(i2, pos=e.pos), rule
            if isinstance(inner, Loc):
                cell = heap.cell(inner.loc_id)
                if cell is None:
                    raise StuckError("projection through a dangling location")
                if cell.flags[1] != 1 or cell.slot2 is UNINIT:
                    raise StuckError("second slot is uninitialized")
                return heap, cell.slot2, "snd-loc"
            raise StuckError("second projection of a non-tuple value")
        case Malloc(x, t1, t2):
            # stored types are not evaluated
            heap2, i = heap.alloc(HeapCell(Sigma(x, t1, 0, t2, 0), UNINIT, UNINIT))
            return heap2, Loc(i), "malloc"
        case Assign1(t, v):
            if not is_tgt_value(t):
                heap2, t2, rule = _step_sub(heap, t)
                return heap2, Assign1(t2, v, pos=e.pos), rule
            if not is_tgt_value(v):
                heap2, v2, rule = _step_sub(heap, v)
                return heap2, Assign1(t, v2, pos=e.pos), rule
            if isinstance(t, Loc):
                cell = heap.cell(t.loc_id)
                if cell is None:
                    raise StuckError("assignment through a dangling location")
                if cell.flags[0] != 0:
                    raise StuckError("first slot was already written")
                ty = cell.cell_type
                new_ty = Sigma(ty.binder, ty.dom, 1, ty.cod, ty.flag2)
                heap2 = heap.with_cell(t.loc_id, HeapCell(new_ty, v, cell.slot2))
                return heap2, t, "assign1"
            raise StuckError("assignment to a non-tuple value")
        case Assign2(t, v):
            if not is_tgt_value(t):
                heap2, t2, rule = _step_sub(heap, t)
                return heap2, Assign2(t2, v, pos=e.pos), rule
            if not is_tgt_value(v):
                heap2, v2, rule = _step_sub(heap, v)
                return heap2, Assign2(t, v2, pos=e.pos), rule
            if isinstance(t, Loc):
                cell = heap.cell(t.loc_id)
                if cell is None:
                    raise StuckError("assignment through a dangling location")
                if cell.flags != (1, 0):
                    raise StuckError("second slot needs a filled first slot and an empty second")
                ty = cell.cell_type
                new_ty = Sigma(ty.binder, ty.dom, 1, ty.cod, 1)
                heap2 = heap.with_cell(t.loc_id, HeapCell(new_ty, cell.slot1, v))
                return heap2, t, "assign2"
            raise StuckError("assignment to a non-tuple value")
        case CTag(inner):
            if not is_tgt_value(inner):
                heap2, i2, rule = _step_sub(heap, inner)
                return heap2, CTag(i2, pos=e.pos), rule
            raise StuckError("ctag of a non-tuple value")
        case Var(x):
            raise StuckError(f"free variable '{x}' cannot step")
    raise StuckError(f"{type(e).__name__} cannot step in the target machine")


def _step_sub(heap: Heap, e: Expr) -> tuple[Heap, Expr, str]:
    r = _step(heap, e)
    if r is None:
        raise StuckError("subterm is already a value")
    return r


def _as_config(start: Config | Expr) -> Config:
    return start if isinstance(start, Config) else Config(Heap(), start)


def tgt_eval(start: Config | Expr, fuel: int = conversion.DEFAULT_FUEL) -> Config:
    config = _as_config(start)
    for _ in range(fuel):
        r = tgt_step(config)
        if r is None:
            return config
        config = r[0]
    if tgt_step(config) is None:
        return config
    raise FuelExhausted(fuel)


def tgt_steps(
    start: Config | Expr, fuel: int = conversion.DEFAULT_FUEL
) -> list[tuple[Config, str]]:
    """The full machine run as (configuration, rule) pairs, starting from
    (start, "init")."""
    config = _as_config(start)
    out = [(config, "init")]
    for _ in range(fuel):
        r = tgt_step(config)
        if r is None:
            return out
        config = r[0]
        out.append(r)
    if tgt_step(config) is None:
        return out
    raise FuelExhausted(fuel)


def tgt_trace(start: Config | Expr, fuel: int = conversion.DEFAULT_FUEL) -> list[str]:
    from .sexpr import Lang, print_expr

    return [
        f"STEP {k} | {rule} | {print_expr(c.expr, Lang.TARGET)} | {c.heap.summary()}"
        for k, (c, rule) in enumerate(tgt_steps(start, fuel))
    ]


# ---------------------------------------------------------------------------
# Heap audits

@dataclass
class HeapReport:
    ok: bool
    problems: list[str] = field(default_factory=list)


def heap_wf(heap: Heap) -> HeapReport:
    """Audit every cell: flag order, slot presence, value-ness, dangling
    locations, and slot typing against the cell's pair type."""
    problems: list[str] = []
    for i, cell in enumerate(heap.cells):
        where = f"cell {i}"
        if not isinstance(cell.cell_type, Sigma):
            problems.append(f"{where}: cell type is not a pair type")
            continue
        f1, f2 = cell.flags
        if (f1, f2) == (0, 1):
            problems.append(f"{where}: second slot filled before the first")
        for which, flag, slot in ((1, f1, cell.slot1), (2, f2, cell.slot2)):
            if flag == 0 and slot is not UNINIT:
                problems.append(f"{where}: slot {which} written but flag is 0")
            if flag == 1 and slot is UNINIT:
                problems.append(f"{where}: slot {which} flagged but empty")
            if slot is not UNINIT:
                if not is_tgt_value(slot):
                    problems.append(f"{where}: slot {which} holds a non-value")
                for loc in sorted(locs_in(slot)):
                    if heap.cell(loc) is None:
                        problems.append(f"{where}: slot {which} mentions dangling location {loc}")
        for loc in sorted(locs_in(cell.cell_type)):
            if heap.cell(loc) is None:
                problems.append(f"{where}: cell type mentions dangling location {loc}")
        empty = Context()
        if f1 == 1 and cell.slot1 is not UNINIT:
            try:
                tgt_check(heap, empty, cell.slot1, cell.cell_type.dom)
            except (TypeCheckError, FuelExhausted) as err:
                problems.append(f"{where}: slot 1 does not type at its slot type ({err})")
        if f2 == 1 and cell.slot2 is not UNINIT:
            expected = subst(cell.cell_type.cod, Fst(Loc(i)), cell.cell_type.binder)
            try:
                tgt_check(heap, empty, cell.slot2, expected)
            except (TypeCheckError, FuelExhausted) as err:
                problems.append(f"{where}: slot 2 does not type at its slot type ({err})")
    return HeapReport(not problems, problems)
