"""Erasure: labeled program/state -> unlabeled reference program/state.

Program erasure strips privacy labels, rewrites the secure primitives to their
plain equivalents (pmalloc -> malloc(e * sizeof(ty)), pfree -> free,
smcinput/smcoutput -> mcinput/mcoutput) and records "was private" hints on the
erased nodes so the reference evaluator can mirror the secure run's
synchronization points.

State erasure is a god's-eye operation: the checker holds all q parties'
memories and reconstructs every private datum. That is legitimate for a
simulator and impossible for any real participant; nothing in the production
interpreters depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import MalformedShare
from .field import to_signed
from .lang import analysis
from .lang import ast as A
from .memory import (ORIGIN_HEAP, Location, SizeModel, decode_ptr, decode_val,
                     encode_fun, encode_ptr, encode_val, PointerData)
from .runtime import pattern_to_float

# ----------------------------------------------------------------- programs


def erase_type(ty):
    if isinstance(ty, A.Base):
        return A.Base(None, ty.bty)
    if isinstance(ty, A.Ptr):
        return A.Ptr(None, ty.bty, ty.indirection)
    if isinstance(ty, A.ArrPtr):
        return A.ArrPtr(None, ty.bty)
    if isinstance(ty, A.FunTy):
        return A.FunTy(tuple(erase_type(t) for t in ty.params), erase_type(ty.ret))
    return ty


class _Eraser:
    def __init__(self):
        self.env = analysis.TypeEnv()

    def label(self, e) -> bool:
        try:
            return analysis.label_of(e, self.env) == A.PRIVATE
        except Exception:
            return False

    def expr(self, e):
        if isinstance(e, A.Num):
            return A.Num(e.value, e.pos)
        if isinstance(e, A.NullLit):
            return A.NullLit(e.pos)
        if isinstance(e, A.Var):
            return A.Var(e.name, e.pos)
        if isinstance(e, A.ArrRead):
            hint = e.private_hint or self.label(e.index)
            return A.ArrRead(e.name, self.expr(e.index), e.pos, private_hint=hint)
        if isinstance(e, A.BinOp):
            hint = e.private_hint or self.label(e)
            return A.BinOp(e.op, self.expr(e.left), self.expr(e.right), e.pos,
                           private_hint=hint)
        if isinstance(e, A.AddrOf):
            return A.AddrOf(e.name, e.pos)
        if isinstance(e, A.Deref):
            return A.Deref(e.name, e.pos)
        if isinstance(e, A.PreInc):
            return A.PreInc(e.name, e.pos, private_hint=e.private_hint or self.label(e))
        if isinstance(e, A.Call):
            return A.Call(e.name, [self.expr(a) for a in e.args], e.pos)
        if isinstance(e, A.Cast):
            return A.Cast(erase_type(e.ty), self.expr(e.expr), e.pos)
        if isinstance(e, A.SizeOf):
            return A.SizeOf(erase_type(e.ty), e.pos)
        if isinstance(e, A.Malloc):
            return A.Malloc(self.expr(e.size), e.pos)
        if isinstance(e, A.PMalloc):
            # pmalloc(e, ty) => malloc(Erase(e) * sizeof(Erase(ty)))
            elem = e.ty if isinstance(e.ty, A.Base) else A.Base(e.ty.label, e.ty.bty)
            return A.Malloc(
                A.BinOp("*", self.expr(e.count), A.SizeOf(erase_type(elem), e.pos), e.pos),
                e.pos, from_pmalloc=True)
        if isinstance(e, A.Declassify):
            return self.expr(e.expr)
        raise TypeError(f"erase: not an expression: {e!r}")

    def stmt(self, s):
        if isinstance(s, A.Skip):
            return A.Skip(s.pos)
        if isinstance(s, A.Seq):
            first = self.stmt(s.first)
            return A.Seq(first, self.stmt(s.second), s.pos)
        if isinstance(s, A.Block):
            return A.Block(self.stmt(s.body), s.pos)
        if isinstance(s, A.Decl):
            self.env.bind(s.name, s.ty)
            return A.Decl(erase_type(s.ty), s.name, s.pos)
        if isinstance(s, A.ArrDecl):
            self.env.bind(s.name, A.ArrPtr(s.ty.label, s.ty.bty))
            return A.ArrDecl(erase_type(s.ty), s.name, self.expr(s.size), s.pos)
        if isinstance(s, A.Assign):
            return A.Assign(s.name, self.expr(s.expr), s.pos)
        if isinstance(s, A.ArrWrite):
            hint = s.private_hint or self.label(s.index)
            return A.ArrWrite(s.name, self.expr(s.index), self.expr(s.expr), s.pos,
                              private_hint=hint)
        if isinstance(s, A.DerefWrite):
            return A.DerefWrite(s.name, self.expr(s.expr), s.pos)
        if isinstance(s, A.If):
            hint = s.private_hint or self.label(s.cond)
            return A.If(self.expr(s.cond), self.stmt(s.then), self.stmt(s.els),
                        s.pos, private_hint=hint)
        if isinstance(s, A.While):
            return A.While(self.expr(s.cond), self.stmt(s.body), s.pos)
        if isinstance(s, A.FunDef):
            self.env.bind(s.name, A.FunTy(tuple(p.ty for p in s.params), s.ret))
            inner = _Eraser()
            inner.env = self.env.child()
            for p in s.params:
                inner.env.bind(p.name, p.ty)
            return A.FunDef(erase_type(s.ret), s.name,
                            [A.Param(erase_type(p.ty), p.name) for p in s.params],
                            inner.stmt(s.body), s.pos)
        if isinstance(s, A.FunProto):
            self.env.bind(s.name, A.FunTy(tuple(p.ty for p in s.params), s.ret))
            return A.FunProto(erase_type(s.ret), s.name,
                              [A.Param(erase_type(p.ty), p.name) for p in s.params],
                              s.pos)
        if isinstance(s, A.Free):
            return A.Free(s.name, s.pos)
        if isinstance(s, A.PFree):
            return A.Free(s.name, s.pos, from_pfree=True)
        if isinstance(s, A.SmcInput):
            return A.SmcInput(s.name, self.expr(s.party),
                              self.expr(s.length) if s.length is not None else None,
                              erased=True,
                              elem=self.expr(s.elem) if s.elem is not None else None,
                              pos=s.pos)
        if isinstance(s, A.SmcOutput):
            return A.SmcOutput(s.name, self.expr(s.party),
                               self.expr(s.length) if s.length is not None else None,
                               erased=True,
                               elem=self.expr(s.elem) if s.elem is not None else None,
                               pos=s.pos)
        if isinstance(s, A.ExprStmt):
            return A.ExprStmt(self.expr(s.expr), s.pos)
        raise TypeError(f"erase: not a statement: {s!r}")


def erase_stmt(s):
    return _Eraser().stmt(s)


def erase_program(program: A.Program) -> A.Program:
    return A.Program(_Eraser().stmt(program.body))


# -------------------------------------------------------------------- state

@dataclass
class ErasedBlock:
    data: bytes
    ty: object
    count: int
    freed: bool
    origin: str


@dataclass
class ErasedState:
    gamma: Dict[str, Tuple[Location, object]]
    sigma: Dict[int, ErasedBlock]
    dropped: Tuple[int, ...] = ()  # temporary-space block ids left behind


def _reconstruct_scalar(sim, shares, bty):
    try:
        if bty == A.FLOAT:
            return pattern_to_float(sim.proto.reconstruct(shares))
        return to_signed(sim.proto.reconstruct(shares), sim.params.p)
    except Exception as exc:  # pragma: no cover - defensive
        raise MalformedShare(str(exc)) from exc


def _declassify_ptr(sim, pvs: List[PointerData]) -> Tuple[Location, int]:
    """God's-eye: reconstruct the one-hot tags and return the true location."""
    locs = pvs[0].locs
    for m in range(len(locs)):
        tag = sim.proto.reconstruct(tuple(pv.tags[m] for pv in pvs))
        if tag == 1:
            return locs[m], m
    raise MalformedShare("pointer tags are not one-hot")


def erase_state(sim) -> ErasedState:
    """Erase a finished secure run into a single plaintext (gamma, sigma) view."""
    sizes = sim.sizes
    pub_sizes = SizeModel()
    gamma = {}
    for name, (loc, ty) in sim.env.snapshot_bindings().items():
        gamma[name] = (loc, erase_type(ty))
    sigma: Dict[int, ErasedBlock] = {}
    for lid in sim.mems[0].user_ids():
        blocks = [m.block(lid) for m in sim.mems]
        blk = blocks[0]
        freed = blk.freed
        ty = blk.ty
        if isinstance(ty, A.FunTy):
            info = sim.funs.get(lid)
            if info is not None:
                from .lang.pretty import pretty as _pp
                erased_def = erase_stmt(A.FunDef(info.ret, _fun_name(sim, lid),
                                                 info.params, info.body))
                payload = encode_fun(False, _pp(A.Program(erased_def)))
            else:
                payload = bytes(blk.data)
            sigma[lid] = ErasedBlock(payload, erase_type(ty), 1, freed, blk.origin)
            continue
        if isinstance(ty, (A.Ptr, A.ArrPtr)) and blk.origin != ORIGIN_HEAP:
            pvs = [decode_ptr(b.count, bytes(b.data)) for b in blocks]
            if pvs[0].alpha == 1:
                true_loc, _ = pvs[0].locs[0], 0
            else:
                true_loc, _ = _declassify_ptr(sim, pvs)
            mu = true_loc.offset
            if getattr(ty, "label", None) == A.PRIVATE and isinstance(ty, A.Ptr):
                if ty.indirection == 1:
                    ratio_n = pub_sizes.size_of(A.Base(None, ty.bty))
                    ratio_d = sizes.size_of(A.Base(A.PRIVATE, ty.bty))
                    mu = mu * ratio_n // ratio_d
            pd = PointerData((Location(true_loc.block, mu),), (1,),
                             pvs[0].indirection)
            sigma[lid] = ErasedBlock(encode_ptr(pd), erase_type(ty), 1, freed,
                                     blk.origin)
            continue
        if isinstance(ty, A.Base):
            if ty.label == A.PRIVATE:
                esz = sizes.size_of(ty)
                out = b""
                for i in range(blk.count):
                    shares = tuple(decode_val(ty, bytes(b.data[i * esz:(i + 1) * esz]),
                                              sizes) for b in blocks)
                    v = _reconstruct_scalar(sim, shares, ty.bty)
                    out += encode_val(A.Base(None, ty.bty), v, pub_sizes)
                sigma[lid] = ErasedBlock(out, erase_type(ty), blk.count, freed,
                                         blk.origin)
            else:
                sigma[lid] = ErasedBlock(bytes(blk.data), erase_type(ty), blk.count,
                                         freed, blk.origin)
            continue
        # heap blocks (void*) carry their element type in alloc_ty when private
        if blk.alloc_ty is not None and A.label_of_type(blk.alloc_ty) == A.PRIVATE:
            ety = blk.alloc_ty
            esz = sizes.size_of(ety)
            count = len(blk.data) // esz
            out = b""
            for i in range(count):
                shares = tuple(decode_val(ety, bytes(b.data[i * esz:(i + 1) * esz]),
                                          sizes) for b in blocks)
                v = _reconstruct_scalar(sim, shares, ety.bty)
                out += encode_val(A.Base(None, ety.bty), v, pub_sizes)
            sigma[lid] = ErasedBlock(out, erase_type(ty), len(out), freed, blk.origin)
        else:
            sigma[lid] = ErasedBlock(bytes(blk.data), erase_type(ty), blk.count,
                                     freed, blk.origin)
    dropped = tuple(sorted(l for l in sim.mems[0].blocks if l < 0))
    return ErasedState(gamma, sigma, dropped)


def _fun_name(sim, lid) -> str:
    for name, (loc, ty) in sim.env.snapshot_bindings().items():
        if loc.block == lid and isinstance(ty, A.FunTy):
            return name
    return "f"


def vanilla_state(van) -> ErasedState:
    """The reference run's state in the same comparable shape."""
    gamma = {name: (loc, ty) for name, (loc, ty) in van.env.snapshot_bindings().items()}
    sigma = {}
    for lid in van.mem.user_ids():
        blk = van.mem.block(lid)
        sigma[lid] = ErasedBlock(bytes(blk.data), blk.ty, blk.count, blk.freed,
                                 blk.origin)
    return ErasedState(gamma, sigma)


# ------------------------------------------------------------ psi congruence

def _psi_map(psi) -> Dict[int, int]:
    """Compose the recorded swaps into an erased-id -> reference-id bijection."""
    pi: Dict[int, int] = {}

    def get(x):
        return pi.get(x, x)

    for a, b in psi:
        ia, ib = get(a), get(b)
        pi[a], pi[b] = ib, ia
    return pi


@dataclass
class Divergence:
    where: str
    detail: str

    def __str__(self):
        return f"{self.where}: {self.detail}"


def psi_congruent(sim, van, psi=None) -> Tuple[bool, Optional[Divergence]]:
    """Erased secure state vs reference state, modulo the recorded free swaps."""
    psi = sim.psi if psi is None else psi
    erased = erase_state(sim)
    ref = vanilla_state(van)
    pi = _psi_map(psi)

    def remap(l: Location) -> Location:
        return Location(pi.get(l.block, l.block), l.offset)

    if set(erased.gamma) != set(ref.gamma):
        only = set(erased.gamma) ^ set(ref.gamma)
        return False, Divergence("gamma", f"binding sets differ on {sorted(only)}")
    for name, (loc, ty) in erased.gamma.items():
        rloc, rty = ref.gamma[name]
        if ty != rty:
            return False, Divergence(f"gamma[{name}]", f"{ty} != {rty}")
        if remap(loc) != rloc:
            return False, Divergence(f"gamma[{name}]", f"{remap(loc)} != {rloc}")
    if set(erased.sigma) != set(ref.sigma):
        only = set(erased.sigma) ^ set(ref.sigma)
        return False, Divergence("sigma", f"block id sets differ on {sorted(only)}")
    for lid in sorted(erased.sigma):
        eb = erased.sigma[lid]
        rb = ref.sigma[pi.get(lid, lid)]
        if eb.ty != rb.ty:
            return False, Divergence(f"block {lid}", f"type {eb.ty} != {rb.ty}")
        if eb.freed != rb.freed:
            return False, Divergence(f"block {lid}", f"freed {eb.freed} != {rb.freed}")
        if isinstance(eb.ty, (A.Ptr, A.ArrPtr)) and eb.origin != ORIGIN_HEAP:
            epd = decode_ptr(1, eb.data)
            rpd = decode_ptr(1, rb.data)
            if epd.indirection != rpd.indirection:
                return False, Divergence(
                    f"block {lid}", f"indirection {epd.indirection} != {rpd.indirection}")
            # a pointer dangling in the reference world has an indeterminate
            # value (C semantics after free); only live targets are compared
            rtarget = ref.sigma.get(rpd.locs[0].block)
            if rtarget is not None and rtarget.freed:
                continue
            if remap(epd.locs[0]) != rpd.locs[0]:
                return False, Divergence(
                    f"block {lid}", f"pointer {remap(epd.locs[0])} != {rpd.locs[0]}")
            continue
        if eb.data != rb.data:
            off = next(i for i, (x, y) in enumerate(zip(eb.data, rb.data)) if x != y) \
                if len(eb.data) == len(rb.data) else -1
            return False, Divergence(f"block {lid}",
                                     f"bytes differ at offset {off} "
                                     f"({eb.data.hex()} vs {rb.data.hex()})")
    return True, None


# ------------------------------------------------------------ code congruence

# secure-side code -> acceptable reference codes; identity is implicit.
# The multiparty pointer/free aliases cover rules the secure side selects by
# the runtime location count, which the erased program cannot know statically.
_ALIASES = {
    "iep": {"mpiet", "mpief"},
    "iepd": {"mpiet", "mpief"},
    "mpcmp": {"mpcmpt", "mpcmpf"},
    "fc1": {"fc"},
    "pin3": {"pin"}, "pin4": {"pin1"}, "pin5": {"pin2"},
    "pin6": {"pin1"}, "pin7": {"pin2"},
    "cl1": {"cl"}, "cv1": {"cv"},
    "r1": {"r"}, "w1": {"w"}, "w2": {"w"},
    "d1": {"dv"}, "dp1": {"dp"}, "da1": {"da"}, "das": {"da"},
    "wdp2": {"wdp1"}, "wdp3": {"wdp"}, "wdp4": {"wdp"}, "wdp5": {"wdp"},
    "wp1": {"wp"}, "wp2": {"wp"}, "rp1": {"rp"},
    "ra1": {"ra"}, "rea": {"rae"}, "wea": {"wae"}, "wea1": {"wae"}, "wea2": {"wae"},
    "rao1": {"rao"}, "wa1": {"wa"}, "wa2": {"wa"}, "wao1": {"wao"}, "wao2": {"wao"},
    "inp2": {"inp"}, "inp3": {"inp1"}, "out2": {"out"}, "out3": {"out1"},
    "mpra": {"mpra"}, "mpwa": {"mpwe"},
    "mprdp": {"mprdp", "rdp"}, "mprdp1": {"mprdp1", "rdp1"},
    "mpwdp": {"mpwdp", "wdp"}, "mpwdp1": {"mpwdp1", "wdp1"},
    "mpwdp2": {"mpwdp1", "wdp1"}, "mpwdp3": {"mpwdp", "wdp"},
    "mpfre": {"mpfre", "fre"}, "pfre": {"fre"},
}

_EXPANSIONS = {
    "malp": ("ty", "bm", "mal"),
}


def code_congruent(D, D_hat) -> Tuple[bool, Optional[Divergence]]:
    """Greedy left-to-right match of a secure code list against a reference list."""
    codes = [d[0] if isinstance(d, tuple) else d for d in D]
    ref = list(D_hat)
    i = j = 0
    while i < len(codes):
        d = codes[i]
        if d in _EXPANSIONS:
            want = _EXPANSIONS[d]
            if tuple(ref[j:j + len(want)]) != want:
                return False, Divergence(
                    f"code {i}", f"{d} expects {list(want)}, found {ref[j:j + len(want)]}")
            i += 1
            j += len(want)
            continue
        if j >= len(ref):
            return False, Divergence(f"code {i}", f"{d} has no reference code left")
        v = ref[j]
        if d == v or v in _ALIASES.get(d, ()):
            i += 1
            j += 1
            continue
        return False, Divergence(f"code {i}", f"{d} !~ {v}")
    if j != len(ref):
        return False, Divergence("code end", f"{len(ref) - j} reference codes left over")
    return True, None
