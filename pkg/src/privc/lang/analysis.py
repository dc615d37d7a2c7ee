"""Static label analysis: expression privacy and public-side-effect detection."""

from __future__ import annotations

from ..errors import UnboundVariable
from . import ast as A


class TypeEnv:
    """Scoped name -> type map used by the label analysis and the erasure pass."""

    def __init__(self, parent=None):
        self.vars = {}
        self.parent = parent

    def child(self):
        return TypeEnv(self)

    def bind(self, name, ty):
        self.vars[name] = ty

    def lookup(self, name):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise UnboundVariable(name)

    @classmethod
    def of_program(cls, program):
        """Top-level bindings only; enough to analyze straight-line programs."""
        env = cls()
        _bind_stmt(program.body, env)
        return env


def _bind_stmt(s, env):
    if isinstance(s, A.Seq):
        _bind_stmt(s.first, env)
        _bind_stmt(s.second, env)
    elif isinstance(s, A.Decl):
        env.bind(s.name, s.ty)
    elif isinstance(s, A.ArrDecl):
        env.bind(s.name, A.ArrPtr(s.ty.label, s.ty.bty))
    elif isinstance(s, (A.FunDef, A.FunProto)):
        env.bind(s.name, A.FunTy(tuple(p.ty for p in s.params), s.ret))


def label_of(e, env: TypeEnv):
    """Privacy label of an expression: private iff it reads private data.

    Locations themselves (address-of, allocation results, sizes) are public.
    """
    if isinstance(e, (A.Num, A.NullLit, A.SizeOf, A.Malloc, A.PMalloc)):
        return A.PUBLIC
    if isinstance(e, A.Var):
        lbl = A.label_of_type(env.lookup(e.name))
        return lbl or A.PUBLIC
    if isinstance(e, A.ArrRead):
        arr = A.label_of_type(env.lookup(e.name)) or A.PUBLIC
        return A.join_labels(arr, label_of(e.index, env)) or A.PUBLIC
    if isinstance(e, A.BinOp):
        return A.join_labels(label_of(e.left, env), label_of(e.right, env)) or A.PUBLIC
    if isinstance(e, A.AddrOf):
        env.lookup(e.name)
        return A.PUBLIC
    if isinstance(e, A.Deref):
        lbl = A.label_of_type(env.lookup(e.name)) or A.PUBLIC
        return lbl
    if isinstance(e, A.PreInc):
        return A.label_of_type(env.lookup(e.name)) or A.PUBLIC
    if isinstance(e, A.Cast):
        return label_of(e.expr, env)
    if isinstance(e, A.Call):
        ty = env.lookup(e.name)
        ret = A.label_of_type(ty.ret) if isinstance(ty, A.FunTy) else None
        lbl = ret or A.PUBLIC
        for a in e.args:
            lbl = A.join_labels(lbl, label_of(a, env))
        return lbl or A.PUBLIC
    if isinstance(e, A.Declassify):
        return A.PUBLIC
    raise TypeError(f"label_of: not an expression: {e!r}")


def is_private(e, env: TypeEnv) -> bool:
    return label_of(e, env) == A.PRIVATE


def _writes_public(name, env) -> bool:
    lbl = A.label_of_type(env.lookup(name))
    return lbl != A.PRIVATE


def has_public_side_effects(s, env: TypeEnv) -> bool:
    """True iff s writes public state, (de)allocates, or performs I/O.

    Recurses through statements and through the bodies of called functions
    (functions must be bound in env as FunTy; their flag is precomputed by the
    interpreter at declaration time via this same analysis).
    """
    flags = getattr(env, "_fun_flags", {})
    return _hse_stmt(s, env, flags)


def _hse_expr(e, env, flags) -> bool:
    if isinstance(e, (A.Num, A.NullLit, A.SizeOf, A.Var, A.AddrOf, A.Deref, A.Declassify)):
        return False
    if isinstance(e, (A.Malloc, A.PMalloc)):
        return True
    if isinstance(e, A.ArrRead):
        return _hse_expr(e.index, env, flags)
    if isinstance(e, A.BinOp):
        return _hse_expr(e.left, env, flags) or _hse_expr(e.right, env, flags)
    if isinstance(e, A.PreInc):
        return _writes_public(e.name, env)
    if isinstance(e, A.Cast):
        return _hse_expr(e.expr, env, flags)
    if isinstance(e, A.Call):
        if any(_hse_expr(a, env, flags) for a in e.args):
            return True
        return flags.get(e.name, False)
    return False


def _hse_stmt(s, env, flags) -> bool:
    if isinstance(s, (A.Skip, A.Decl, A.ArrDecl, A.FunProto)):
        return False
    if isinstance(s, A.Seq):
        return _hse_stmt(s.first, env, flags) or _hse_stmt(s.second, env, flags)
    if isinstance(s, A.Block):
        return _hse_stmt(s.body, env, flags)
    if isinstance(s, A.Assign):
        return _writes_public(s.name, env) or _hse_expr(s.expr, env, flags)
    if isinstance(s, A.ArrWrite):
        return (_writes_public(s.name, env)
                or _hse_expr(s.index, env, flags) or _hse_expr(s.expr, env, flags))
    if isinstance(s, A.DerefWrite):
        return _writes_public(s.name, env) or _hse_expr(s.expr, env, flags)
    if isinstance(s, A.If):
        return (_hse_expr(s.cond, env, flags)
                or _hse_stmt(s.then, env, flags) or _hse_stmt(s.els, env, flags))
    if isinstance(s, A.While):
        return _hse_expr(s.cond, env, flags) or _hse_stmt(s.body, env, flags)
    if isinstance(s, (A.Free, A.PFree, A.SmcInput, A.SmcOutput)):
        return True
    if isinstance(s, A.ExprStmt):
        return _hse_expr(s.expr, env, flags)
    if isinstance(s, A.FunDef):
        return False  # defining a function is not a side effect; its body is flagged separately
    raise TypeError(f"has_public_side_effects: not a statement: {s!r}")
