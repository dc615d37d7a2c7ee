"""AST for the annotated C subset.

Types carry a privacy label: "public", "private", or None for the unlabeled
(erased) dialect. Every grammar production has exactly one constructor here;
parenthesized expressions fold away at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

PUBLIC = "public"
PRIVATE = "private"

INT = "int"
FLOAT = "float"
VOID = "void"


def join_labels(a: Optional[str], b: Optional[str]) -> Optional[str]:
    """Label join: private dominates public; None (unlabeled) acts as public."""
    if a == PRIVATE or b == PRIVATE:
        return PRIVATE
    if a == PUBLIC or b == PUBLIC:
        return PUBLIC
    return None


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class Base:
    label: Optional[str]
    bty: str  # int | float | void

    def __str__(self):
        return f"{self.label} {self.bty}" if self.label else self.bty


@dataclass(frozen=True)
class Ptr:
    label: Optional[str]
    bty: str
    indirection: int  # >= 1

    def __str__(self):
        stars = "*" * self.indirection
        return f"{self.label} {self.bty}{stars}" if self.label else f"{self.bty}{stars}"


@dataclass(frozen=True)
class ArrPtr:
    """Const handle produced by an array declaration; points at the data block."""

    label: Optional[str]
    bty: str

    def __str__(self):
        base = f"{self.label} {self.bty}" if self.label else self.bty
        return f"{base}[]"


@dataclass(frozen=True)
class FunTy:
    params: Tuple[object, ...]
    ret: object

    def __str__(self):
        ps = ", ".join(str(p) for p in self.params) or "void"
        return f"({ps}) -> {self.ret}"


def label_of_type(ty) -> Optional[str]:
    if isinstance(ty, (Base, Ptr, ArrPtr)):
        return ty.label
    return None  # function types carry no privacy label


# ---------------------------------------------------------------- expressions

@dataclass
class Num:
    value: object  # int or float
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Var:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class ArrRead:
    name: str
    index: object
    pos: tuple = field(default=(0, 0), compare=False)
    private_hint: bool = False  # erased AST: index was private in the labeled source


@dataclass
class BinOp:
    op: str  # - + / * == != <
    left: object
    right: object
    pos: tuple = field(default=(0, 0), compare=False)
    private_hint: bool = False


@dataclass
class AddrOf:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Deref:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class PreInc:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)
    private_hint: bool = False


@dataclass
class Call:
    name: str
    args: list = field(default_factory=list)
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Cast:
    ty: object
    expr: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class SizeOf:
    ty: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Malloc:
    size: object
    pos: tuple = field(default=(0, 0), compare=False)
    from_pmalloc: bool = False  # erased AST: originated from a pmalloc rewrite


@dataclass
class PMalloc:
    count: object
    ty: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class NullLit:
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Declassify:
    """Test-only backdoor: reconstructs a private value in-program.

    Only evaluated when the simulator was built with the backdoor enabled;
    production runs reject it.
    """

    expr: object
    pos: tuple = field(default=(0, 0), compare=False)


# ---------------------------------------------------------------- statements

@dataclass
class Skip:
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Decl:
    ty: object
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class ArrDecl:
    ty: object  # element Base type
    name: str
    size: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Assign:
    name: str
    expr: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class ArrWrite:
    name: str
    index: object
    expr: object
    pos: tuple = field(default=(0, 0), compare=False)
    private_hint: bool = False


@dataclass
class DerefWrite:
    name: str
    expr: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Seq:
    first: object
    second: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Block:
    body: object  # single statement (often a Seq chain)
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class If:
    cond: object
    then: object
    els: object
    pos: tuple = field(default=(0, 0), compare=False)
    private_hint: bool = False


@dataclass
class While:
    cond: object
    body: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Param:
    ty: object
    name: str


@dataclass
class FunDef:
    ret: object
    name: str
    params: list
    body: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class FunProto:
    ret: object
    name: str
    params: list
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Free:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)
    from_pfree: bool = False


@dataclass
class PFree:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class SmcInput:
    # target is x or x[elem]; length present for whole-array transfers
    name: str
    party: object
    length: object = None
    erased: bool = False  # mcinput in the erased dialect
    elem: object = None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class SmcOutput:
    name: str
    party: object
    length: object = None
    erased: bool = False
    elem: object = None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class ExprStmt:
    expr: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass
class Program:
    body: object  # statement (Seq chain) or Skip for the empty program

    def __iter__(self):
        return iter(flatten(self.body))


def seq(stmts):
    """Canonical right-fold of statements into a Seq chain (Skip when empty).

    Nested Seq chains are flattened and interior skips dropped, so parsing is
    shape-stable under pretty-printing.
    """
    flat = []
    for s in stmts:
        if s is None:
            continue
        if isinstance(s, (Seq, Skip)):
            flat.extend(flatten(s))
        else:
            flat.append(s)
    if not flat:
        return Skip()
    out = flat[-1]
    for s in reversed(flat[:-1]):
        out = Seq(s, out, pos=getattr(s, "pos", (0, 0)))
    return out


def flatten(stmt):
    """Seq chain -> flat statement list."""
    out = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        elif not isinstance(s, Skip):
            out.append(s)
    return out
