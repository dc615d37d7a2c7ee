"""Big-step evaluator for the labeled language over q lockstep parties.

The simulator owns all q per-party memories and mutates them in lockstep;
protocol calls are the only synchronization points. Each rule appends its
evaluation code to the per-party D lists and its touched locations to the
per-party L lists. Private-conditioned branches execute both arms on shares
and resolve effects obliviously; their internal codes are hidden behind the
single iep/iepd entry (the location lists are never hidden).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import (DivisionByZero, IndexOutOfParties, LabelViolation,
                     LoopBudgetExceeded, MissingInput, NotFreeable,
                     ObliviousFault, PrivateLoopGuard, RuntimeFault,
                     ShapeMismatch, UnsupportedConstruct)
from .field import FieldParams, Protocols, c_div, to_signed
from .lang import analysis
from .lang import ast as A
from .memory import (ORIGIN_DECL, ORIGIN_DEFAULT, ORIGIN_HEAP, Location,
                     Memory, MemoryBlock, PointerData, SizeModel, decode_arr,
                     decode_ptr, decode_val, encode_fun, encode_ptr,
                     encode_val, perm_list, perm_list_ptr)
from .runtime import (SKIP, Env, PrivVal, PtrVal, PubVal, TypeView,
                      float_to_pattern, pattern_to_float)

VOID_STAR = A.Ptr(None, A.VOID, 1)
L_DEFAULT = Location(0, 0)

TRACKING_MODES = ("auto", "variable", "location")


@dataclass
class DeltaEntry:
    """One tracked location: original value, then-branch value, restoration tag."""

    orig: object  # list of per-party byte strings, or per-party PointerData
    then: object = None
    tag: int = 0
    ty: object = None
    kind: str = "bytes"  # bytes | ptr


@dataclass
class FunInfo:
    ret: object
    params: list
    body: object
    flag: bool  # has public side effects


class Simulator:
    """One secure run: program, q parties, protocol suite, traces."""

    def __init__(self, program, params: FieldParams = FieldParams(), seed: int = 0,
                 inputs: Optional[Dict[int, dict]] = None, backend: str = "shamir",
                 tracking: str = "auto", legacy_per_statement: bool = False,
                 private_scalar_bytes: int = 16, loop_budget: int = 10 ** 6,
                 enable_declassify: bool = False):
        if isinstance(program, str):
            program = _parse_labeled(program)
        self.program = program
        self.params = params
        self.q = params.q
        self.proto = Protocols(params, seed, backend)
        self.sizes = SizeModel(private_scalar_bytes)
        self.mems = [Memory() for _ in range(self.q)]
        self.env = Env()
        self.types = TypeView(self.env)
        self.inputs = inputs or {}
        self.outputs: List[list] = [[] for _ in range(self.q)]
        self.D: List[list] = [[] for _ in range(self.q)]
        self.L: List[list] = [[] for _ in range(self.q)]
        self.psi: List[Tuple[int, int]] = []
        self.acc = 0
        self.delta: List[dict] = []  # one ordered map per active nesting level
        self._schemes: List[str] = []  # tracking scheme per active level
        self.funs: Dict[int, FunInfo] = {}
        self.fun_flags: Dict[str, bool] = {}
        self.oob_misaligned: List[tuple] = []
        if tracking not in TRACKING_MODES:
            raise ValueError(f"tracking mode {tracking!r}")
        self.tracking = tracking
        self.legacy = legacy_per_statement
        self._legacy_frames: List[tuple] = []  # (effective cond shares, x_mod set)
        self.loop_budget = loop_budget
        self.enable_declassify = enable_declassify
        self._hide_codes = 0
        self._step_hook = None  # test hook: called as hook(self) after every code
        self._steps = 0
        # the distinguished default block: zeroed, never freeable
        for mem in self.mems:
            loc = mem.fresh()
            assert loc == L_DEFAULT
            mem.install(loc.block, MemoryBlock(
                bytearray(4), A.Base(A.PUBLIC, A.INT), 1,
                perm_list(A.PUBLIC, 4), origin=ORIGIN_DEFAULT))

    # ------------------------------------------------------------ trace plumbing

    def code(self, c: str):
        if self._hide_codes:
            return
        for p in range(self.q):
            self.D[p].append((c, self.acc))
        self._steps += 1
        if self._step_hook is not None:
            self._step_hook(self)

    def touch(self, *locs: Location):
        for p in range(self.q):
            self.L[p].extend(locs)

    # ------------------------------------------------------------ run

    def run(self):
        self.eval_stmt(self.program.body)
        return self

    # ------------------------------------------------------------ helpers

    def _label(self, e) -> str:
        return analysis.label_of(e, self.types)

    def _temp(self) -> bool:
        return self.acc > 0

    def _alloc(self, ty, count, payloads, perms, origin, alloc_ty=None,
               force_temp=False) -> Location:
        loc = None
        for p, mem in enumerate(self.mems):
            lp = mem.fresh(temp=force_temp or self._temp())
            loc = lp if loc is None else loc
            assert lp == loc, "parties desynchronized on allocation"
            mem.install(lp.block, MemoryBlock(
                bytearray(payloads[p]), ty, count, list(perms), origin=origin,
                alloc_ty=alloc_ty))
        return loc

    def _scalar_payloads(self, ty: A.Base, v) -> List[bytes]:
        """Per-party byte encodings of a value stored at type ty."""
        if ty.label == A.PRIVATE:
            shares = self._as_shares(v, ty.bty)
            return [encode_val(ty, shares[p], self.sizes) for p in range(self.q)]
        if isinstance(v, PrivVal):
            raise LabelViolation("private value written to public storage")
        x = v.value if isinstance(v, PubVal) else v
        return [encode_val(ty, x, self.sizes)] * self.q

    def _as_shares(self, v, bty: str) -> Tuple[int, ...]:
        if isinstance(v, PrivVal):
            return v.shares
        if isinstance(v, PubVal):
            if bty == A.FLOAT:
                return self.proto.const_share(float_to_pattern(float(v.value)))
            return self.proto.const_share(int(v.value))
        raise LabelViolation(f"cannot share {v!r}")

    def _read_scalar(self, loc: Location, ty: A.Base):
        if ty.label == A.PRIVATE:
            shares = tuple(m.read_val(loc, ty, self.sizes) for m in self.mems)
            return PrivVal(shares, ty.bty)
        # party 1's copy is canonical; cross-party agreement is the confluence
        # checker's concern, not an evaluation precondition
        return PubVal(self.mems[0].read_val(loc, ty, self.sizes))

    def _ptr_read(self, lid: int, label) -> PtrVal:
        pds = []
        for m in self.mems:
            blk = m.block(lid)
            pds.append(decode_ptr(blk.count, bytes(blk.data)))
        locs, ind = pds[0].locs, pds[0].indirection
        assert all(pd.locs == locs and pd.indirection == ind for pd in pds)
        return PtrVal(locs, tuple(pd.tags for pd in pds), ind, label)

    def _ptr_write(self, lid: int, pv: PtrVal, label):
        for p, m in enumerate(self.mems):
            m.update_ptr(lid, PointerData(pv.locs, pv.tags_pp[p], pv.indirection),
                         label or A.PUBLIC)

    def _one_hot(self) -> Tuple[Tuple[int, ...], ...]:
        one = self.proto.const_share(1)
        return tuple((one[p],) for p in range(self.q))

    def _as_ptrval(self, v, ty: A.Ptr) -> PtrVal:
        """Coerce a location-ish value into a pointer payload for ty."""
        if isinstance(v, PtrVal):
            if ty.label == A.PRIVATE and v.label != A.PRIVATE and v.alpha == 1:
                return PtrVal(v.locs, self._one_hot(), v.indirection, A.PRIVATE)
            if ty.label != A.PRIVATE and v.label == A.PRIVATE:
                raise LabelViolation("private pointer assigned to public pointer")
            return PtrVal(v.locs, v.tags_pp, v.indirection, ty.label)
        if isinstance(v, Location):
            tags = self._one_hot() if ty.label == A.PRIVATE else tuple([(1,)] * self.q)
            return PtrVal((v,), tags, ty.indirection, ty.label)
        raise LabelViolation(f"cannot store {v!r} in pointer {ty}")

    def _element_ty(self, ty: A.Ptr):
        if ty.indirection > 1:
            return A.Ptr(ty.label, ty.bty, ty.indirection - 1)
        return A.Base(ty.label, ty.bty)

    def _stride(self, elem_ty) -> int:
        return self.sizes.size_of(elem_ty)

    def _require_public_ctx(self, what):
        if self.acc > 0:
            raise ObliviousFault(f"{what} inside a private-conditioned branch")

    def _priv_val(self, v, bty=A.INT) -> PrivVal:
        if isinstance(v, PrivVal):
            return v
        return PrivVal(self._as_shares(v, bty), bty)

    # ------------------------------------------------------------- statements

    def eval_stmt(self, s):
        if isinstance(s, A.Skip):
            return SKIP
        if isinstance(s, A.Seq):
            self.eval_stmt(s.first)
            v = self.eval_stmt(s.second)
            self.code("ss")
            return v
        if isinstance(s, A.Block):
            self.env.push()
            try:
                v = self.eval_stmt(s.body)
            finally:
                self.env.pop()
            self.code("sb")
            return v
        if isinstance(s, A.Decl):
            return self._decl(s)
        if isinstance(s, A.ArrDecl):
            return self._arr_decl(s)
        if isinstance(s, A.Assign):
            return self._assign(s)
        if isinstance(s, A.ArrWrite):
            return self._arr_write(s)
        if isinstance(s, A.DerefWrite):
            return self._deref_write(s)
        if isinstance(s, A.If):
            return self._if(s)
        if isinstance(s, A.While):
            return self._while(s)
        if isinstance(s, A.FunDef):
            return self._fun_def(s)
        if isinstance(s, A.FunProto):
            self.env.bind(s.name, L_DEFAULT, A.FunTy(tuple(p.ty for p in s.params), s.ret))
            self.code("fpd")
            return SKIP
        if isinstance(s, A.Free):
            return self._free(s)
        if isinstance(s, A.PFree):
            return self._pfree(s)
        if isinstance(s, A.SmcInput):
            return self._smcinput(s)
        if isinstance(s, A.SmcOutput):
            return self._smcoutput(s)
        if isinstance(s, A.ExprStmt):
            return self.eval_expr(s.expr)
        raise TypeError(f"not a statement: {s!r}")

    def _decl(self, s: A.Decl):
        ty = s.ty
        if isinstance(ty, A.Base):
            n = self.sizes.size_of(ty)
            label = ty.label or A.PUBLIC
            loc = self._alloc(ty, 1, [b"\x00" * n] * self.q,
                              perm_list(label, n), ORIGIN_DECL)
            self.env.bind(s.name, loc, ty)
            self.touch(loc)
            self.code("d1" if ty.label == A.PRIVATE else "dv")
            return SKIP
        if isinstance(ty, A.Ptr):
            pd = PointerData((L_DEFAULT,), (1,), ty.indirection)
            payloads = [encode_ptr(pd)] * self.q
            loc = self._alloc(ty, 1, payloads,
                              perm_list_ptr(ty.label or A.PUBLIC, 1), ORIGIN_DECL)
            self.env.bind(s.name, loc, ty)
            self.touch(loc)
            self.code("dp1" if ty.label == A.PRIVATE else "dp")
            return SKIP
        raise UnsupportedConstruct(f"declaration of {ty!r}")

    def _arr_decl(self, s: A.ArrDecl):
        size_v = self.eval_expr(s.size)
        if not isinstance(size_v, PubVal):
            raise LabelViolation("array sizes must be public")
        alpha = int(size_v.value)
        if alpha <= 0:
            raise RuntimeFault(f"array size {alpha}")
        ety = s.ty
        label = ety.label or A.PUBLIC
        handle_ty = A.ArrPtr(ety.label, ety.bty)
        # data block first so the handle can reference it
        esz = self.sizes.size_of(ety)
        # allocate handle id then data id to mirror l = phi(); l1 = phi()
        handle_loc = None
        data_loc = None
        for p, mem in enumerate(self.mems):
            h = mem.fresh(temp=self._temp())
            d = mem.fresh(temp=self._temp())
            handle_loc, data_loc = h, d
            pd = PointerData((d,), (1,), 1)
            mem.install(h.block, MemoryBlock(
                bytearray(encode_ptr(pd)), handle_ty, 1,
                perm_list_ptr(label, 1), origin=ORIGIN_DECL))
            mem.install(d.block, MemoryBlock(
                bytearray(esz * alpha), ety, alpha,
                perm_list(label, esz * alpha), origin=ORIGIN_DECL))
        self.env.bind(s.name, handle_loc, handle_ty)
        self.touch(handle_loc, data_loc)
        self.code("da1" if ety.label == A.PRIVATE else "da")
        return SKIP

    def _array_parts(self, name):
        loc, ty = self.env.lookup(name)
        if not isinstance(ty, A.ArrPtr):
            raise LabelViolation(f"{name} is not an array")
        blk = self.mems[0].block(loc.block)
        pd = decode_ptr(blk.count, bytes(blk.data))
        data = pd.locs[0].block
        ety = A.Base(ty.label, ty.bty)
        count = self.mems[0].block(data).count
        return loc, data, ety, count

    def _assign(self, s: A.Assign):
        v = self.eval_expr(s.expr)
        loc, ty = self.env.lookup(s.name)
        if isinstance(ty, A.Base):
            if ty.label != A.PRIVATE:
                self._require_public_ctx(f"write to public variable {s.name}")
                if isinstance(v, PrivVal):
                    raise LabelViolation(f"private value assigned to public {s.name}")
                payloads = self._scalar_payloads(ty, self._coerce_pub(v, ty))
                for p, m in enumerate(self.mems):
                    m.update_val(loc, payloads[p])
                self.touch(loc)
                self.code("w")
                return SKIP
            # private target
            if self.legacy and self._legacy_frames and self._legacy_tracked(s.name):
                return self._legacy_assign(s.name, loc, ty, v)
            was_public = not isinstance(v, PrivVal)
            payloads = self._scalar_payloads(ty, v)
            for p, m in enumerate(self.mems):
                m.update_val(loc, payloads[p])
            self.touch(loc)
            self.code("w2" if was_public else "w1")
            return SKIP
        if isinstance(ty, A.Ptr):
            if ty.label != A.PRIVATE:
                self._require_public_ctx(f"write to public pointer {s.name}")
            pv = self._as_ptrval(v, ty)
            self._ptr_write(loc.block, pv, ty.label)
            self.touch(loc)
            if ty.label == A.PRIVATE:
                self.code("wp1" if pv.alpha == 1 else "wp2")
            else:
                self.code("wp")
            return SKIP
        raise LabelViolation(f"cannot assign to {ty}")

    def _coerce_pub(self, v, ty: A.Base):
        x = v.value if isinstance(v, PubVal) else v
        if isinstance(x, Location) or isinstance(x, PtrVal):
            raise LabelViolation(f"pointer value assigned to {ty}")
        if ty.bty == A.INT:
            return PubVal(int(x))
        return PubVal(float(x))

    def _legacy_tracked(self, name) -> bool:
        return any(name in frame[1] for frame in self._legacy_frames)

    def _legacy_assign(self, name, loc, ty, v):
        """PICCO-style single-statement resolution: every tracked write resolves."""
        eff = self._legacy_frames[-1][0]
        rhs = self._as_shares(v, ty.bty)
        cur = self._read_scalar(loc, ty).shares
        out = self.proto.resolve(eff, rhs, cur)
        for p, m in enumerate(self.mems):
            m.update_val(loc, encode_val(ty, out[p], self.sizes))
        self.touch(loc)
        self.code("w2" if not isinstance(v, PrivVal) else "w1")
        return SKIP

    def _arr_write(self, s: A.ArrWrite):
        idx_label = self._label(s.index)
        idx_v = self.eval_expr(s.index)
        val = self.eval_expr(s.expr)
        handle, data, ety, count = self._array_parts(s.name)
        esz = self.sizes.size_of(ety)
        if idx_label == A.PRIVATE or isinstance(idx_v, PrivVal):
            if ety.label != A.PRIVATE:
                raise LabelViolation("private-index write into a public array")
            idx = self._priv_val(idx_v).shares
            olds = [tuple(decode_arr(ety, m, bytes(mem.block(data).data), self.sizes)
                          for mem in self.mems) for m in range(count)]
            new = self.proto.array_write(idx, olds, self._as_shares(val, ety.bty))
            for m in range(count):
                for p, mem in enumerate(self.mems):
                    mem.update_arr(data, m, encode_val(ety, new[m][p], self.sizes))
            self.touch(handle, *[Location(data, m) for m in range(count)])
            self.code("mpwa")
            return SKIP
        i = int(idx_v.value)
        if 0 <= i < count:
            if ety.label != A.PRIVATE:
                self._require_public_ctx(f"write to public array {s.name}")
                if isinstance(val, PrivVal):
                    raise LabelViolation("private value into public array")
                enc = encode_val(ety, self._coerce_pub(val, ety).value, self.sizes)
                for mem in self.mems:
                    mem.update_arr(data, i, enc)
                self.touch(handle, Location(data, i))
                self.code("wa")
                return SKIP
            if self.acc > 0:
                self._dynamic_update(Location(data, i * esz), ety)
            was_public = not isinstance(val, PrivVal)
            payloads = self._scalar_payloads(ety, val)
            for p, mem in enumerate(self.mems):
                mem.update_arr(data, i, payloads[p])
            self.touch(handle, Location(data, i))
            self.code("wa2" if was_public else "wa1")
            return SKIP
        # out-of-bounds public-index write: raw byte store, metadata untouched
        start = Location(data, i * esz)
        if ety.label != A.PRIVATE:
            self._require_public_ctx(f"out-of-bounds write via public array {s.name}")
            if isinstance(val, PrivVal):
                raise LabelViolation("private value into public array")
            enc = encode_val(ety, self._coerce_pub(val, ety).value, self.sizes)
            spans = None
            for mem in self.mems:
                spans = mem.write_raw(start, enc)
            self._flag_alignment(spans, ety, s.pos)
            self.touch(handle, start)
            self.code("wao")
            return SKIP
        if self.acc > 0:
            self._dynamic_update(start, ety)
        was_public = not isinstance(val, PrivVal)
        payloads = self._scalar_payloads(ety, val)
        spans = None
        for p, mem in enumerate(self.mems):
            spans = mem.write_raw(start, payloads[p])
        self._flag_alignment(spans, ety, s.pos)
        self.touch(handle, start)
        self.code("wao2" if was_public else "wao1")
        return SKIP

    def _flag_alignment(self, spans, ety, pos):
        if spans is None:
            return
        if not self.mems[0].spans_well_aligned(spans, ety, self.sizes):
            self.oob_misaligned.append((pos, tuple(spans)))

    def _deref_write(self, s: A.DerefWrite):
        loc, ty = self.env.lookup(s.name)
        if not isinstance(ty, A.Ptr):
            raise LabelViolation(f"*{s.name}: not a pointer")
        v = self.eval_expr(s.expr)
        pv = self._ptr_read(loc.block, ty.label)
        elem = self._element_ty(ty)
        if ty.label != A.PRIVATE:
            self._require_public_ctx(f"write through public pointer {s.name}")
            target = pv.locs[0]
            if isinstance(elem, A.Base):
                if isinstance(v, PrivVal):
                    raise LabelViolation("private value through public pointer")
                enc = encode_val(elem, self._coerce_pub(v, elem).value, self.sizes)
                self._write_offset(target, [enc] * self.q, elem, s.pos)
                self.code("wdp")
            else:
                inner = self._as_ptrval(v, elem)
                self._store_ptr_at(target, inner, elem)
                self.code("wdp1")
            self.touch(loc, target)
            return SKIP
        # private pointer
        if pv.alpha == 1:
            target = pv.locs[0]
            if self.acc > 0:
                self._dynamic_update(target, elem)
            if isinstance(elem, A.Base):
                was_public = not isinstance(v, PrivVal)
                shares = self._as_shares(v, elem.bty)
                enc = [encode_val(elem, shares[p], self.sizes) for p in range(self.q)]
                self._write_offset(target, enc, elem, s.pos)
                self.code("wdp4" if was_public else "wdp3")
            else:
                inner = self._as_ptrval(v, elem)
                self._store_ptr_at(target, inner, elem)
                self.code("wdp2")
            self.touch(loc, target)
            return SKIP
        # multi-location oblivious write
        if self.acc > 0:
            for t in pv.locs:
                self._dynamic_update(t, elem)
        if isinstance(elem, A.Base):
            olds = [tuple(self._read_offset_shares(t, elem)) for t in pv.locs]
            tags = [tuple(pv.tags_pp[p][m] for p in range(self.q))
                    for m in range(pv.alpha)]
            new = self.proto.deref_write(olds, tags, self._as_shares(v, elem.bty))
            for m, t in enumerate(pv.locs):
                enc = [encode_val(elem, new[m][p], self.sizes) for p in range(self.q)]
                self._write_offset(t, enc, elem, s.pos)
            self.code("mpwdp")
        else:
            inner = self._as_ptrval(v, elem)
            for m, t in enumerate(pv.locs):
                old = self._load_ptr_at(t, elem)
                sel = tuple(pv.tags_pp[p][m] for p in range(self.q))
                merged = self._resolve_ptr(sel, inner, old, count=False)
                self._store_ptr_at(t, merged, elem)
            self.code("mpwdp1")
        self.touch(loc, *pv.locs)
        return SKIP

    def _elem_aligned(self, target: Location, elem: A.Base) -> bool:
        esz = self.sizes.size_of(elem)
        blk = self.mems[0].block(target.block)
        holds = blk.ty == elem or blk.origin == ORIGIN_HEAP
        return (holds and target.offset % esz == 0
                and target.offset + esz <= len(blk.data))

    def _write_offset(self, target: Location, payloads, elem: A.Base, pos):
        """Write one element at a byte offset; raw path when unaligned or spilling."""
        if self._elem_aligned(target, elem):
            for p, mem in enumerate(self.mems):
                mem.update_val(target, payloads[p])
            return
        spans = None
        for p, mem in enumerate(self.mems):
            spans = mem.write_raw(target, payloads[p])
        self._flag_alignment(spans, elem, pos)

    def _read_offset_shares(self, target: Location, elem: A.Base):
        vals = self._read_offset_value(target, elem)
        if isinstance(vals, PrivVal):
            return vals.shares
        return self._as_shares(vals, elem.bty)

    def _read_offset_value(self, target: Location, elem: A.Base, pos=None):
        esz = self.sizes.size_of(elem)
        if self._elem_aligned(target, elem):
            return self._read_scalar(target, elem)
        datas = []
        spans = None
        for mem in self.mems:
            raw, spans = mem.read_raw(target, esz)
            datas.append(raw)
        self._flag_alignment(spans, elem, pos)
        if elem.label == A.PRIVATE:
            return PrivVal(tuple(decode_val(elem, d, self.sizes) for d in datas),
                           elem.bty)
        assert all(d == datas[0] for d in datas)
        return PubVal(decode_val(elem, datas[0], self.sizes))

    def _load_ptr_at(self, target: Location, elem: A.Ptr) -> PtrVal:
        if target.offset != 0:
            raise UnsupportedConstruct("pointer load at a nonzero offset")
        return self._ptr_read(target.block, elem.label)

    def _store_ptr_at(self, target: Location, pv: PtrVal, elem: A.Ptr):
        if target.offset != 0:
            raise UnsupportedConstruct("pointer store at a nonzero offset")
        self._ptr_write(target.block, pv, elem.label)

    # ------------------------------------------------------------- if / while

    def _if(self, s: A.If):
        if self._label(s.cond) == A.PRIVATE:
            return self._private_if(s)
        cond = self.eval_expr(s.cond)
        if isinstance(cond, PrivVal):
            raise LabelViolation("private guard escaped the label analysis")
        taken = cond.value != 0
        branch = s.then if taken else s.els
        self.env.push()
        try:
            self.eval_stmt(branch)
        finally:
            self.env.pop()
        self.code("iet" if taken else "ief")
        return SKIP

    def _while(self, s: A.While):
        if self._label(s.cond) == A.PRIVATE:
            raise PrivateLoopGuard("while guard depends on private data")
        iters = 0
        while True:
            cond = self.eval_expr(s.cond)
            if cond.value == 0:
                self.code("wle")
                return SKIP
            iters += 1
            if iters > self.loop_budget:
                raise LoopBudgetExceeded(f"{self.loop_budget} iterations")
            self.env.push()
            try:
                self.eval_stmt(s.body)
            finally:
                self.env.pop()
            self.code("wlc")

    # -------------------------------------------------- private-conditioned if

    def _private_if(self, s: A.If):
        cond_v = self._priv_val(self.eval_expr(s.cond))
        x_mod, j = self.dyn_extract(s.then, s.els)
        scheme = "location" if j else "variable"
        if self.tracking == "location":
            scheme = "location"
        elif self.tracking == "variable":
            if j:
                raise RuntimeFault(
                    "variable tracking forced on a branch with dereference or "
                    "public-index array writes")
            scheme = "variable"
        if self.legacy:
            if j:
                raise RuntimeFault("legacy per-statement mode cannot track locations")
            return self._private_if_legacy(s, cond_v, x_mod)
        if scheme == "variable":
            self.private_if_else_variable_tracking(s, cond_v, x_mod)
        else:
            self.private_if_else_location_tracking(s, cond_v, x_mod)
        return SKIP

    def _alloc_res(self, cond_v: PrivVal) -> Location:
        ty = A.Base(A.PRIVATE, A.INT)
        payloads = [encode_val(ty, cond_v.shares[p], self.sizes) for p in range(self.q)]
        n = self.sizes.size_of(ty)
        return self._alloc(ty, 1, payloads, perm_list(A.PRIVATE, n), ORIGIN_DECL,
                           force_temp=True)

    def _eval_branch(self, branch):
        self.env.push()
        self._hide_codes += 1
        try:
            self.eval_stmt(branch)
        finally:
            self._hide_codes -= 1
            self.env.pop()

    def private_if_else_variable_tracking(self, s, cond_v, x_mod):
        res_loc = self._alloc_res(cond_v)
        self.touch(res_loc)
        self.acc += 1
        self.delta.append({})
        self._schemes.append("variable")
        try:
            temps = self._initialize_variables(x_mod)
            self._eval_branch(s.then)
            self._restore_variables(x_mod, temps)
            self._eval_branch(s.els)
            self._resolve_variables(x_mod, temps, cond_v)
        finally:
            self._schemes.pop()
            self.delta.pop()
            self.acc -= 1
        self.code("iep")

    def _initialize_variables(self, x_mod):
        temps = {}
        for x in x_mod:
            loc, ty = self.env.lookup(x)
            if A.label_of_type(ty) != A.PRIVATE:
                raise ObliviousFault(f"public {x} modified inside a private-conditioned branch")
            if isinstance(ty, A.Base):
                n = self.sizes.size_of(ty)
                cur = [bytes(m.block(loc.block).data[loc.offset:loc.offset + n])
                       for m in self.mems]
                l_t = self._alloc(ty, 1, cur, perm_list(A.PRIVATE, n), ORIGIN_DECL,
                                  force_temp=True)
                l_e = self._alloc(ty, 1, cur, perm_list(A.PRIVATE, n), ORIGIN_DECL,
                                  force_temp=True)
                temps[x] = ("scalar", l_t, l_e)
                self.touch(loc, l_t, l_e)
            elif isinstance(ty, A.ArrPtr):
                _, data, ety, count = self._array_parts(x)
                esz = self.sizes.size_of(ety)
                cur = [bytes(m.block(data).data) for m in self.mems]
                l_t = self._alloc(ety, count, cur, perm_list(A.PRIVATE, esz * count),
                                  ORIGIN_DECL, force_temp=True)
                l_e = self._alloc(ety, count, cur, perm_list(A.PRIVATE, esz * count),
                                  ORIGIN_DECL, force_temp=True)
                temps[x] = ("array", l_t, l_e)
                self.touch(loc, l_t, l_e)
                for i in range(count):
                    self.touch(Location(data, i), Location(l_t.block, i),
                               Location(l_e.block, i))
            elif isinstance(ty, A.Ptr):
                pv = self._ptr_read(loc.block, ty.label)
                payloads = [encode_ptr(PointerData(pv.locs, pv.tags_pp[p], pv.indirection))
                            for p in range(self.q)]
                l_t = self._alloc(ty, pv.alpha, payloads,
                                  perm_list_ptr(A.PRIVATE, pv.alpha), ORIGIN_DECL,
                                  force_temp=True)
                l_e = self._alloc(ty, pv.alpha, payloads,
                                  perm_list_ptr(A.PRIVATE, pv.alpha), ORIGIN_DECL,
                                  force_temp=True)
                temps[x] = ("ptr", l_t, l_e)
                self.touch(loc, l_t, l_e)
            else:
                raise UnsupportedConstruct(f"tracking {ty}")
        return temps

    def _copy_block(self, src: int, dst: int):
        for m in self.mems:
            sb, db = m.block(src), m.block(dst)
            db.data = bytearray(sb.data)
            db.count = sb.count
            db.perms = list(sb.perms)

    def _restore_variables(self, x_mod, temps):
        for x in x_mod:
            kind, l_t, l_e = temps[x]
            loc, ty = self.env.lookup(x)
            src = loc.block if kind != "array" else self._array_parts(x)[1]
            self._copy_block(src, l_t.block)   # then-result into the then temp
            self._copy_block(l_e.block, src)   # original restored from the else temp
            self.touch(loc, l_t, l_e)

    def _resolve_variables(self, x_mod, temps, cond_v):
        for x in x_mod:
            kind, l_t, l_e = temps[x]
            loc, ty = self.env.lookup(x)
            if kind == "scalar":
                then_v = self._read_scalar(Location(l_t.block, 0), ty)
                else_v = self._read_scalar(loc, ty)
                out = self.proto.resolve(cond_v.shares, then_v.shares, else_v.shares)
                for p, m in enumerate(self.mems):
                    m.update_val(loc, encode_val(ty, out[p], self.sizes))
                self.touch(loc, l_t)
            elif kind == "array":
                _, data, ety, count = self._array_parts(x)
                thens, elses = [], []
                for i in range(count):
                    thens.append(tuple(decode_arr(ety, i, bytes(m.block(l_t.block).data),
                                                  self.sizes) for m in self.mems))
                    elses.append(tuple(decode_arr(ety, i, bytes(m.block(data).data),
                                                  self.sizes) for m in self.mems))
                outs = self.proto.resolve_many(cond_v.shares, thens, elses)
                for i in range(count):
                    for p, m in enumerate(self.mems):
                        m.update_arr(data, i, encode_val(ety, outs[i][p], self.sizes))
                self.touch(loc, l_t)
                for i in range(count):
                    self.touch(Location(data, i))
            else:
                then_p = self._ptr_read(l_t.block, ty.label)
                else_p = self._ptr_read(loc.block, ty.label)
                merged = self._resolve_ptr(cond_v.shares, then_p, else_p)
                self._ptr_write(loc.block, merged, ty.label)
                self.touch(loc, l_t)

    def _resolve_ptr(self, cond, then_p: PtrVal, else_p: PtrVal, count=True) -> PtrVal:
        if then_p.indirection != else_p.indirection:
            raise ShapeMismatch("pointer indirection mismatch in resolution")
        if count:
            self.proto.counts["resolve"] += 1
        locs = list(then_p.locs)
        for loc in else_p.locs:
            if loc not in locs:
                locs.append(loc)
        zero = self.proto.const_share(0)
        tags_pp = [[] for _ in range(self.q)]
        for loc in locs:
            t_then = (tuple(then_p.tags_pp[p][then_p.locs.index(loc)] for p in range(self.q))
                      if loc in then_p.locs else zero)
            t_else = (tuple(else_p.tags_pp[p][else_p.locs.index(loc)] for p in range(self.q))
                      if loc in else_p.locs else zero)
            merged = self.proto._mux(cond, t_then, t_else)
            for p in range(self.q):
                tags_pp[p].append(merged[p])
        return PtrVal(tuple(locs), tuple(tuple(t) for t in tags_pp),
                      then_p.indirection, A.PRIVATE)

    def private_if_else_location_tracking(self, s, cond_v, x_mod):
        res_loc = self._alloc_res(cond_v)
        self.touch(res_loc)
        self.acc += 1
        self.delta.append({})
        self._schemes.append("location")
        try:
            self._dyn_initialize(x_mod)
            self._eval_branch(s.then)
            self._dyn_restore()
            self._eval_branch(s.els)
            self._dyn_resolve(cond_v)
        finally:
            self._schemes.pop()
            self.delta.pop()
            self.acc -= 1
        self.code("iepd")

    def _dyn_initialize(self, x_mod):
        level = self.delta[-1]
        for x in x_mod:
            loc, ty = self.env.lookup(x)
            if A.label_of_type(ty) != A.PRIVATE:
                raise ObliviousFault(f"public {x} modified inside a private-conditioned branch")
            if isinstance(ty, A.Base):
                self._delta_seed(level, loc, ty)
            elif isinstance(ty, A.ArrPtr):
                _, data, ety, count = self._array_parts(x)
                esz = self.sizes.size_of(ety)
                for i in range(count):
                    self._delta_seed(level, Location(data, i * esz), ety)
            elif isinstance(ty, A.Ptr):
                pv = self._ptr_read(loc.block, ty.label)
                level[(loc.block, loc.offset)] = DeltaEntry(orig=pv, ty=ty, kind="ptr")
                self.touch(loc)
            else:
                raise UnsupportedConstruct(f"tracking {ty}")

    def _delta_seed(self, level, loc: Location, ty: A.Base):
        loc = self._landing(loc)
        key = (loc.block, loc.offset)
        if key in level:
            return
        n = self.sizes.size_of(ty)
        cur = [bytes(m.read_raw(loc, n)[0]) for m in self.mems]
        level[key] = DeltaEntry(orig=cur, ty=ty, kind="bytes")
        self.touch(loc)

    def _landing(self, target: Location) -> Location:
        """Normalize a flat address to the block/offset where its first byte lands."""
        spans = self.mems[0]._walk(target, 1)
        return Location(spans[0][0], spans[0][1])

    def _dynamic_update(self, target: Location, ty):
        """Track a dereference / public-index array write the first time it hits.

        The location enters every active location-tracking level it is not in
        yet: an effect produced inside a nested branch must also be resolvable
        by the enclosing branches (with tag 0, so a location first touched in
        an else arm resolves against its original value).
        """
        if not self.delta or self._schemes[-1] != "location":
            # reachable only through a callee smuggling dereference writes
            # past the branch scan; untrackable under the active scheme
            raise RuntimeFault("location write outside a location-tracked branch")
        if not isinstance(ty, A.Ptr):
            target = self._landing(target)
        key = (target.block, target.offset)
        inserted = False
        for level, scheme in zip(self.delta, self._schemes):
            if scheme != "location" or key in level:
                continue
            if isinstance(ty, A.Ptr):
                level[key] = DeltaEntry(orig=self._ptr_read(target.block, ty.label),
                                        ty=ty, kind="ptr")
            else:
                n = self.sizes.size_of(ty)
                cur = [bytes(m.read_raw(target, n)[0]) for m in self.mems]
                level[key] = DeltaEntry(orig=cur, ty=ty, kind="bytes")
            inserted = True
        if inserted:
            self.touch(target)

    def _dyn_restore(self):
        level = self.delta[-1]
        for (blk, off), entry in level.items():
            loc = Location(blk, off)
            if entry.kind == "ptr":
                entry.then = self._ptr_read(blk, entry.ty.label)
                self._ptr_write(blk, entry.orig, entry.ty.label)
            else:
                n = self.sizes.size_of(entry.ty)
                entry.then = [bytes(m.read_raw(loc, n)[0]) for m in self.mems]
                for p, m in enumerate(self.mems):
                    m.write_raw(loc, entry.orig[p])
            entry.tag = 1
            self.touch(loc)

    def _dyn_resolve(self, cond_v):
        level = self.delta[-1]
        for (blk, off), entry in level.items():
            loc = Location(blk, off)
            then_side = entry.then if entry.tag == 1 else entry.orig
            if entry.kind == "ptr":
                else_side = self._ptr_read(blk, entry.ty.label)
                merged = self._resolve_ptr(cond_v.shares, then_side, else_side)
                self._ptr_write(blk, merged, entry.ty.label)
            else:
                n = self.sizes.size_of(entry.ty)
                else_bytes = [bytes(m.read_raw(loc, n)[0]) for m in self.mems]
                t = tuple(decode_val(entry.ty, then_side[p], self.sizes)
                          for p in range(self.q))
                e = tuple(decode_val(entry.ty, else_bytes[p], self.sizes)
                          for p in range(self.q))
                out = self.proto.resolve(cond_v.shares, t, e)
                for p, m in enumerate(self.mems):
                    m.write_raw(loc, encode_val(entry.ty, out[p], self.sizes))
            self.touch(loc)

    def _private_if_legacy(self, s, cond_v, x_mod):
        res_loc = self._alloc_res(cond_v)
        self.touch(res_loc)
        parent = (self._legacy_frames[-1][0] if self._legacy_frames
                  else self.proto.const_share(1))
        self.acc += 1
        self.delta.append({})
        self._schemes.append("legacy")
        try:
            eff_then = self.proto.mult(parent, cond_v.shares)
            self._legacy_frames.append((eff_then, set(x_mod)))
            self._eval_branch(s.then)
            self._legacy_frames.pop()
            one = self.proto.const_share(1)
            eff_else = self.proto.mult(parent, self.proto.sub(one, cond_v.shares))
            self._legacy_frames.append((eff_else, set(x_mod)))
            self._eval_branch(s.els)
            self._legacy_frames.pop()
        finally:
            self._schemes.pop()
            self.delta.pop()
            self.acc -= 1
        self.code("iep")
        return SKIP

    # ---------------------------------------------------------------- extract

    def dyn_extract(self, s1, s2, env=None):
        """Modified non-locals across both branches, plus the location-tracking flag."""
        local = set()
        x_mod: List[str] = []
        state = {"j": 0}

        def add(name):
            if name not in local and name not in x_mod:
                x_mod.append(name)

        def scan_expr(e):
            if isinstance(e, A.PreInc):
                add(e.name)
            elif isinstance(e, A.BinOp):
                scan_expr(e.left)
                scan_expr(e.right)
            elif isinstance(e, A.ArrRead):
                scan_expr(e.index)
            elif isinstance(e, (A.Cast, A.Declassify)):
                scan_expr(e.expr)
            elif isinstance(e, A.Call):
                for a in e.args:
                    scan_expr(a)
            elif isinstance(e, (A.Malloc,)):
                scan_expr(e.size)
            elif isinstance(e, (A.PMalloc,)):
                scan_expr(e.count)

        def scan_stmt(st):
            if isinstance(st, A.Seq):
                scan_stmt(st.first)
                scan_stmt(st.second)
            elif isinstance(st, A.Block):
                scan_stmt(st.body)
            elif isinstance(st, (A.Decl, A.ArrDecl)):
                local.add(st.name)
                if isinstance(st, A.ArrDecl):
                    scan_expr(st.size)
            elif isinstance(st, A.Assign):
                add(st.name)
                scan_expr(st.expr)
            elif isinstance(st, A.ArrWrite):
                if self._label_safe(st.index) == A.PRIVATE:
                    add(st.name)
                else:
                    state["j"] = 1
                scan_expr(st.index)
                scan_expr(st.expr)
            elif isinstance(st, A.DerefWrite):
                state["j"] = 1
                scan_expr(st.expr)
            elif isinstance(st, A.If):
                scan_expr(st.cond)
                scan_stmt(st.then)
                scan_stmt(st.els)
            elif isinstance(st, A.While):
                scan_expr(st.cond)
                scan_stmt(st.body)
            elif isinstance(st, A.ExprStmt):
                scan_expr(st.expr)
            # Free/PFree/Smc* fault at acc>0; function defs not scanned

        scan_stmt(s1)
        scan_stmt(s2)
        return x_mod, state["j"]

    def _label_safe(self, e):
        try:
            return self._label(e)
        except Exception:
            return A.PUBLIC

    # ------------------------------------------------------------- allocation

    def _malloc(self, e, pos):
        self._require_public_ctx("malloc")
        n_v = self.eval_expr(e)
        if isinstance(n_v, PrivVal):
            raise LabelViolation("malloc size must be public")
        n = int(n_v.value)
        if n < 0:
            raise RuntimeFault(f"malloc({n})")
        loc = self._alloc(VOID_STAR, n, [b"\x00" * n] * self.q,
                          perm_list(A.PUBLIC, n), ORIGIN_HEAP)
        self.touch(loc)
        self.code("mal")
        return loc

    def _pmalloc(self, e, ty, pos):
        self._require_public_ctx("pmalloc")
        if A.label_of_type(ty) != A.PRIVATE:
            raise LabelViolation("pmalloc allocates private data")
        n_v = self.eval_expr(e)
        if isinstance(n_v, PrivVal):
            raise LabelViolation("pmalloc count must be public")
        n = int(n_v.value)
        if n <= 0:
            raise RuntimeFault(f"pmalloc({n})")
        elem = ty if isinstance(ty, A.Base) else self._element_ty(ty)
        nbytes = n * self.sizes.size_of(elem)
        loc = self._alloc(VOID_STAR, nbytes, [b"\x00" * nbytes] * self.q,
                          perm_list(A.PRIVATE, nbytes), ORIGIN_HEAP, alloc_ty=elem)
        self.touch(loc)
        self.code("malp")
        return loc

    def _free(self, s: A.Free):
        self._require_public_ctx("free")
        loc, ty = self.env.lookup(s.name)
        if not isinstance(ty, A.Ptr):
            raise LabelViolation(f"free({s.name}): not a pointer")
        if ty.label == A.PRIVATE:
            raise RuntimeFault(f"free({s.name}): private pointers use pfree")
        pv = self._ptr_read(loc.block, ty.label)
        target = pv.locs[0]
        if not self.mems[0].check_freeable([target]):
            blk = self.mems[0].blocks.get(target.block)
            if blk is not None and blk.freed:
                for m in self.mems:
                    m.free_block(target.block)  # raises DoubleFree
            raise NotFreeable(f"free({s.name}) at {target}")
        for m in self.mems:
            m.free_block(target.block)
        self.touch(loc, target)
        self.code("fre")
        return SKIP

    def _pfree(self, s: A.PFree):
        self._require_public_ctx("pfree")
        loc, ty = self.env.lookup(s.name)
        if not isinstance(ty, A.Ptr) or ty.label != A.PRIVATE:
            raise LabelViolation(f"pfree({s.name}): not a private pointer")
        pv = self._ptr_read(loc.block, ty.label)
        if pv.alpha == 1:
            target = pv.locs[0]
            if not self.mems[0].check_freeable([target]):
                blk = self.mems[0].blocks.get(target.block)
                if blk is not None and blk.freed:
                    for m in self.mems:
                        m.free_block(target.block)
                raise NotFreeable(f"pfree({s.name}) at {target}")
            for m in self.mems:
                m.free_block(target.block)
            self.touch(loc, target)
            self.code("pfre")
            return SKIP
        return self._multiparty_pfree(s.name, loc, ty, pv)

    def _multiparty_pfree(self, name, loc, ty, pv: PtrVal):
        if pv.indirection > 1:
            raise UnsupportedConstruct("oblivious free of pointer-to-pointer data")
        if not self.mems[0].check_freeable(pv.locs):
            raise NotFreeable(f"pfree({name}): all candidate locations must be heap blocks")
        blocks = [self.mems[0].block(l.block) for l in pv.locs]
        elem = blocks[0].alloc_ty or A.Base(A.PRIVATE, ty.bty)
        esz = self.sizes.size_of(elem)
        counts = {len(b.data) // esz for b in blocks}
        if len(counts) != 1:
            raise NotFreeable("pfree candidates differ in size")
        nelem = counts.pop()
        # gather per-slot element shares: contents[m][e] = share tuple
        contents = []
        for l in pv.locs:
            slot = []
            for e in range(nelem):
                slot.append(tuple(decode_arr(elem, e, bytes(m.block(l.block).data),
                                             self.sizes) for m in self.mems))
            contents.append(slot)
        tags = [tuple(pv.tags_pp[p][m] for p in range(self.q)) for m in range(pv.alpha)]
        new_contents, new_tags = self.proto.free_swap(contents, tags)
        # UpdateBytesFree: write swapped contents, then free the first location
        for m_i, l in enumerate(pv.locs):
            for e in range(nelem):
                enc = [encode_val(elem, new_contents[m_i][e][p], self.sizes)
                       for p in range(self.q)]
                for p, mem in enumerate(self.mems):
                    mem.update_arr(l.block, e, enc[p])
        for mem in self.mems:
            mem.free_block(pv.locs[0].block)
        survivors = pv.locs[1:]
        new_tags_pp = tuple(tuple(new_tags[m][p] for m in range(len(survivors)))
                            for p in range(self.q))
        # god's-eye psi entry: (freed location, true location)
        true_idx = next(m for m in range(pv.alpha)
                        if self.proto.reconstruct(tags[m]) == 1)
        self.psi.append((pv.locs[0].block, pv.locs[true_idx].block))
        # x's pointer shrinks to the survivors
        self._ptr_write(loc.block, PtrVal(survivors, new_tags_pp, pv.indirection,
                                          A.PRIVATE), A.PRIVATE)
        self._update_pointer_locations(loc.block, pv.locs[0], survivors, new_tags_pp)
        self.touch(loc, *pv.locs)
        self.code("mpfre")
        return SKIP

    def _update_pointer_locations(self, own_block, freed: Location, survivors,
                                  new_tags_pp):
        """Every other pointer listing the freed block inherits the survivor list."""
        for lid in list(self.mems[0].blocks):
            blk = self.mems[0].blocks[lid]
            if lid == own_block or not isinstance(blk.ty, A.Ptr):
                continue
            try:
                pv = self._ptr_read(lid, blk.ty.label)
            except Exception:
                continue
            if not any(l.block == freed.block for l in pv.locs):
                continue
            locs = []
            tags_pp = [[] for _ in range(self.q)]

            def add_loc(l, tag_shares):
                if l in locs:
                    k = locs.index(l)
                    for p in range(self.q):
                        tags_pp[p][k] = (tags_pp[p][k] + tag_shares[p]) % self.params.p
                else:
                    locs.append(l)
                    for p in range(self.q):
                        tags_pp[p].append(tag_shares[p])

            for m, l in enumerate(pv.locs):
                old_tag = tuple(pv.tags_pp[p][m] for p in range(self.q))
                if l.block != freed.block:
                    add_loc(l, old_tag)
                    continue
                for k, sv in enumerate(survivors):
                    sv_tag = tuple(new_tags_pp[p][k] for p in range(self.q))
                    moved = self.proto.mult(old_tag, sv_tag)
                    add_loc(Location(sv.block, l.offset), moved)
            self._ptr_write(lid, PtrVal(tuple(locs),
                                        tuple(tuple(t) for t in tags_pp),
                                        pv.indirection, blk.ty.label), blk.ty.label)

    # -------------------------------------------------------------------- I/O

    def _party_index(self, e) -> int:
        v = self.eval_expr(e)
        if isinstance(v, PrivVal):
            raise LabelViolation("party index must be public")
        k = int(v.value)
        if not 1 <= k <= self.q:
            raise IndexOutOfParties(f"party {k} of {self.q}")
        return k

    def _input_value(self, k, name):
        try:
            return self.inputs[k][name]
        except KeyError:
            raise MissingInput(f"party {k} has no input {name!r}") from None

    def _smcinput(self, s: A.SmcInput):
        self._require_public_ctx("smcinput")
        k = self._party_index(s.party)
        loc, ty = self.env.lookup(s.name)
        if s.elem is not None:
            iv = self.eval_expr(s.elem)
            if isinstance(iv, PrivVal):
                raise LabelViolation("I/O element index must be public")
            i = int(iv.value)
            handle, data, ety, count = self._array_parts(s.name)
            if not 0 <= i < count:
                raise RuntimeFault(f"smcinput({s.name}[{i}]): out of bounds")
            val = self._input_value(k, s.name)
            if isinstance(val, (list, tuple)):
                raise MissingInput(f"party {k}: {s.name} is a scalar record")
            if ety.label == A.PRIVATE:
                self.proto.rounds += 1
                self.proto.counts["input"] += 1
                x = float_to_pattern(val) if ety.bty == A.FLOAT else int(val)
                shares = self.proto.share(x)
                for p, m in enumerate(self.mems):
                    m.update_arr(data, i, encode_val(ety, shares[p], self.sizes))
                self.touch(handle, Location(data, i))
                self.code("wa2")
                self.code("inp2")
            else:
                enc = encode_val(ety, val, self.sizes)
                for m in self.mems:
                    m.update_arr(data, i, enc)
                self.touch(handle, Location(data, i))
                self.code("wa")
                self.code("inp")
            return SKIP
        if isinstance(ty, A.ArrPtr):
            if s.length is None:
                raise MissingInput(f"smcinput({s.name}): arrays need a length")
            nv = self.eval_expr(s.length)
            if isinstance(nv, PrivVal):
                raise LabelViolation("input length must be public")
            n = int(nv.value)
            vals = self._input_value(k, s.name)
            if not isinstance(vals, (list, tuple)) or len(vals) < n:
                raise MissingInput(f"party {k}: {s.name} needs {n} values")
            _, data, ety, count = self._array_parts(s.name)
            if n > count:
                raise RuntimeFault(f"smcinput({s.name}): {n} > declared {count}")
            if ety.label == A.PRIVATE:
                self.proto.rounds += 1
                self.proto.counts["input"] += 1
                for i in range(n):
                    x = (float_to_pattern(vals[i]) if ety.bty == A.FLOAT
                         else int(vals[i]))
                    shares = self.proto.share(x)
                    for p, m in enumerate(self.mems):
                        m.update_arr(data, i, encode_val(ety, shares[p], self.sizes))
            else:
                for i in range(n):
                    enc = encode_val(ety, vals[i], self.sizes)
                    for m in self.mems:
                        m.update_arr(data, i, enc)
            self.touch(loc, *[Location(data, i) for i in range(n)])
            self.code("inp3" if ety.label == A.PRIVATE else "inp1")
            return SKIP
        if not isinstance(ty, A.Base):
            raise LabelViolation(f"smcinput({s.name}): unsupported target type")
        val = self._input_value(k, s.name)
        if isinstance(val, (list, tuple)):
            raise MissingInput(f"party {k}: {s.name} is a scalar input")
        if ty.label == A.PRIVATE:
            self.proto.rounds += 1
            self.proto.counts["input"] += 1
            x = float_to_pattern(val) if ty.bty == A.FLOAT else int(val)
            shares = self.proto.share(x)
            for p, m in enumerate(self.mems):
                m.update_val(loc, encode_val(ty, shares[p], self.sizes))
            self.touch(loc)
            self.code("w1")
            self.code("inp2")
        else:
            payloads = self._scalar_payloads(ty, PubVal(val))
            for p, m in enumerate(self.mems):
                m.update_val(loc, payloads[p])
            self.touch(loc)
            self.code("w")
            self.code("inp")
        return SKIP

    def _open_scalar(self, shares, ty: A.Base):
        if ty.bty == A.FLOAT:
            return pattern_to_float(self.proto.reconstruct(shares))
        return to_signed(self.proto.reconstruct(shares), self.params.p)

    def _smcoutput(self, s: A.SmcOutput):
        self._require_public_ctx("smcoutput")
        k = self._party_index(s.party)
        loc, ty = self.env.lookup(s.name)
        if s.elem is not None:
            iv = self.eval_expr(s.elem)
            if isinstance(iv, PrivVal):
                raise LabelViolation("I/O element index must be public")
            i = int(iv.value)
            handle, data, ety, count = self._array_parts(s.name)
            if not 0 <= i < count:
                raise RuntimeFault(f"smcoutput({s.name}[{i}]): out of bounds")
            shares_or_v = tuple(decode_arr(ety, i, bytes(m.block(data).data),
                                           self.sizes) for m in self.mems)
            if ety.label == A.PRIVATE:
                self.proto.rounds += 1
                self.proto.counts["output"] += 1
                v = self._open_scalar(shares_or_v, ety)
                self.outputs[k - 1].append((f"{s.name}[{i}]", v))
                self.touch(handle, Location(data, i))
                self.code("out2")
            else:
                self.outputs[k - 1].append((f"{s.name}[{i}]", shares_or_v[0]))
                self.touch(handle, Location(data, i))
                self.code("out")
            return SKIP
        if isinstance(ty, A.ArrPtr):
            _, data, ety, count = self._array_parts(s.name)
            n = count
            if s.length is not None:
                nv = self.eval_expr(s.length)
                n = int(nv.value)
                if n > count:
                    raise RuntimeFault(f"smcoutput({s.name}): {n} > declared {count}")
            vals = []
            if ety.label == A.PRIVATE:
                self.proto.rounds += 1
                self.proto.counts["output"] += 1
                for i in range(n):
                    shares = tuple(decode_arr(ety, i, bytes(m.block(data).data),
                                              self.sizes) for m in self.mems)
                    vals.append(self._open_scalar(shares, ety))
            else:
                for i in range(n):
                    vals.append(decode_arr(ety, i, bytes(self.mems[0].block(data).data),
                                           self.sizes))
            self.outputs[k - 1].append((s.name, vals))
            self.touch(loc, *[Location(data, i) for i in range(n)])
            self.code("out3" if ety.label == A.PRIVATE else "out1")
            return SKIP
        if not isinstance(ty, A.Base):
            raise LabelViolation(f"smcoutput({s.name}): unsupported type")
        v = self._read_scalar(loc, ty)
        if isinstance(v, PrivVal):
            self.proto.rounds += 1
            self.proto.counts["output"] += 1
            self.outputs[k - 1].append((s.name, self._open_scalar(v.shares, ty)))
            self.code("out2")
        else:
            self.outputs[k - 1].append((s.name, v.value))
            self.code("out")
        self.touch(loc)
        return SKIP

    # -------------------------------------------------------------- functions

    def _fun_def(self, s: A.FunDef):
        fun_ty = A.FunTy(tuple(p.ty for p in s.params), s.ret)
        flag_env = analysis.TypeEnv()
        for frame in self.env.frames:
            for nm, (_, t) in frame.items():
                flag_env.bind(nm, t)
        for p in s.params:
            flag_env.bind(p.name, p.ty)
        flag_env._fun_flags = dict(self.fun_flags)
        flag = analysis.has_public_side_effects(s.body, flag_env)
        payload = encode_fun(flag, _pretty_fun(s))
        loc = self._alloc(fun_ty, 1, [payload] * self.q,
                          perm_list(A.PUBLIC, len(payload)), ORIGIN_DECL)
        self.env.bind(s.name, loc, fun_ty)
        self.funs[loc.block] = FunInfo(s.ret, s.params, s.body, flag)
        self.fun_flags[s.name] = flag
        self.touch(loc)
        self.code("fd")
        return SKIP

    def _call(self, e: A.Call):
        loc, ty = self.env.lookup(e.name)
        if not isinstance(ty, A.FunTy):
            raise LabelViolation(f"{e.name} is not a function")
        info = self.funs.get(loc.block)
        if info is None:
            raise RuntimeFault(f"call of undefined function {e.name}")
        if self.acc > 0 and info.flag:
            raise ObliviousFault(
                f"call of {e.name} (public side effects) inside a private branch")
        if len(e.args) != len(info.params):
            raise RuntimeFault(f"{e.name}: {len(e.args)} args, {len(info.params)} params")
        args = [self.eval_expr(a) for a in e.args]
        saved = self.env.enter_function()
        try:
            for prm, av in zip(info.params, args):
                self._bind_param(prm, av)
            ret = self.eval_stmt(info.body)
        finally:
            self.env.leave_function(saved)
        self.code("fc1" if self.acc > 0 else "fc")
        return ret

    def _bind_param(self, prm: A.Param, value):
        self.eval_stmt(A.Decl(prm.ty, prm.name))
        # direct store, bypassing assignment codes (parameter passing is part of fc)
        loc, ty = self.env.lookup(prm.name)
        self._hide_codes += 1
        try:
            if isinstance(ty, A.Base):
                payloads = self._scalar_payloads(ty, value)
                for p, m in enumerate(self.mems):
                    m.update_val(loc, payloads[p])
            elif isinstance(ty, A.Ptr):
                self._ptr_write(loc.block, self._as_ptrval(value, ty), ty.label)
            else:
                raise UnsupportedConstruct(f"parameter type {ty}")
        finally:
            self._hide_codes -= 1

    # ------------------------------------------------------------ expressions

    def eval_expr(self, e):
        if isinstance(e, A.Num):
            return PubVal(e.value)
        if isinstance(e, A.NullLit):
            return L_DEFAULT
        if isinstance(e, A.Var):
            return self._read_var(e)
        if isinstance(e, A.ArrRead):
            return self._arr_read(e)
        if isinstance(e, A.BinOp):
            return self._binop(e)
        if isinstance(e, A.AddrOf):
            loc, ty = self.env.lookup(e.name)
            return loc
        if isinstance(e, A.Deref):
            return self._deref_read(e)
        if isinstance(e, A.PreInc):
            return self._pre_inc(e)
        if isinstance(e, A.Call):
            return self._call(e)
        if isinstance(e, A.Cast):
            return self._cast(e)
        if isinstance(e, A.SizeOf):
            self.code("ty")
            return PubVal(self.sizes.size_of(e.ty))
        if isinstance(e, A.Malloc):
            return self._malloc(e.size, e.pos)
        if isinstance(e, A.PMalloc):
            return self._pmalloc(e.count, e.ty, e.pos)
        if isinstance(e, A.Declassify):
            if not self.enable_declassify:
                raise RuntimeFault("declassify is a test-only operation")
            v = self.eval_expr(e.expr)
            if isinstance(v, PrivVal):
                return PubVal(self._open_scalar(v.shares, A.Base(A.PRIVATE, v.bty)))
            return v
        raise TypeError(f"not an expression: {e!r}")

    def _read_var(self, e: A.Var):
        loc, ty = self.env.lookup(e.name)
        if isinstance(ty, A.Base):
            v = self._read_scalar(loc, ty)
            self.touch(loc)
            self.code("r1" if ty.label == A.PRIVATE else "r")
            return v
        if isinstance(ty, A.Ptr):
            pv = self._ptr_read(loc.block, ty.label)
            self.touch(loc)
            self.code("rp1" if ty.label == A.PRIVATE else "rp")
            return pv
        if isinstance(ty, A.ArrPtr):
            raise UnsupportedConstruct(f"bare array {e.name} used as a value")
        raise LabelViolation(f"cannot read {ty}")

    def _arr_read(self, e: A.ArrRead):
        idx_label = self._label(e.index)
        idx_v = self.eval_expr(e.index)
        handle, data, ety, count = self._array_parts(e.name)
        esz = self.sizes.size_of(ety)
        if idx_label == A.PRIVATE or isinstance(idx_v, PrivVal):
            idx = self._priv_val(idx_v).shares
            elems = []
            for m in range(count):
                if ety.label == A.PRIVATE:
                    elems.append(tuple(decode_arr(ety, m, bytes(mem.block(data).data),
                                                  self.sizes) for mem in self.mems))
                else:
                    v = decode_arr(ety, m, bytes(self.mems[0].block(data).data), self.sizes)
                    elems.append(self.proto.const_share(
                        float_to_pattern(v) if ety.bty == A.FLOAT else v))
            out = self.proto.array_read(idx, elems)
            self.touch(handle, *[Location(data, m) for m in range(count)])
            self.code("mpra")
            return PrivVal(out, ety.bty)
        i = int(idx_v.value)
        if 0 <= i < count:
            v = self._read_scalar(Location(data, i * esz), ety)
            self.touch(handle, Location(data, i))
            self.code("ra1" if ety.label == A.PRIVATE else "ra")
            return v
        # overshoot: raw byte read at the flat address, decoded as the element type
        start = Location(data, i * esz)
        v = self._read_offset_value(start, ety, e.pos)
        self.touch(handle, start)
        self.code("rao1" if ety.label == A.PRIVATE else "rao")
        return v

    def _binop(self, e: A.BinOp):
        lv = self.eval_expr(e.left)
        rv = self.eval_expr(e.right)
        cmp_op = e.op in ("==", "!=", "<")
        if isinstance(lv, PrivVal) or isinstance(rv, PrivVal):
            bty = (lv.bty if isinstance(lv, PrivVal) else
                   rv.bty if isinstance(rv, PrivVal) else A.INT)
            if bty == A.FLOAT or (isinstance(lv, PubVal) and isinstance(lv.value, float)) \
                    or (isinstance(rv, PubVal) and isinstance(rv.value, float)):
                return self._binop_private_float(e.op, lv, rv, cmp_op)
            a = self._as_shares(lv, A.INT)
            b = self._as_shares(rv, A.INT)
            if cmp_op:
                out = self.proto.cmp(e.op, a, b)
                self.code("mpcmp")
            else:
                out = self.proto.binop(_mpc_op(e.op), a, b)
                self.code("mpb")
            return PrivVal(out, A.INT)
        x, y = lv.value, rv.value
        if cmp_op:
            r = {"==": x == y, "!=": x != y, "<": x < y}[e.op]
            self.code({"==": "eqt" if r else "eqf",
                       "!=": "net" if r else "nef",
                       "<": "ltt" if r else "ltf"}[e.op])
            return PubVal(int(r))
        if e.op == "/":
            if isinstance(x, int) and isinstance(y, int):
                r = c_div(x, y)
            else:
                if y == 0:
                    raise DivisionByZero("float division by zero")
                r = x / y
            self.code("bd")
            return PubVal(r)
        r = {"+": x + y, "-": x - y, "*": x * y}[e.op]
        self.code({"+": "bp", "-": "bs", "*": "bm"}[e.op])
        return PubVal(r)

    def _binop_private_float(self, op, lv, rv, cmp_op):
        def as_float(v):
            if isinstance(v, PrivVal):
                return pattern_to_float(self.proto.reconstruct(v.shares))
            return float(v.value)

        x, y = as_float(lv), as_float(rv)
        self.proto.rounds += 1
        if cmp_op:
            bit = {"<": x < y, "==": x == y, "!=": x != y}[op]
            self.proto.counts["cmp"] += 1
            self.code("mpcmp")
            return PrivVal(self.proto.share(int(bit)), A.INT)
        if op == "/" and y == 0:
            raise DivisionByZero("float division by zero")
        r = {"+": x + y, "-": x - y, "*": x * y, "/": (x / y if y else 0.0)}[op]
        self.proto.counts["binop"] += 1
        self.code("mpb")
        return PrivVal(self.proto.share(float_to_pattern(r)), A.FLOAT)

    def _deref_read(self, e: A.Deref):
        loc, ty = self.env.lookup(e.name)
        if not isinstance(ty, A.Ptr):
            raise LabelViolation(f"*{e.name}: not a pointer")
        pv = self._ptr_read(loc.block, ty.label)
        elem = self._element_ty(ty)
        if pv.alpha == 1:
            target = pv.locs[0]
            if isinstance(elem, A.Base):
                v = self._read_offset_value(target, elem, e.pos)
                self.touch(loc, target)
                self.code("rdp")
                return v
            inner = self._load_ptr_at(target, elem)
            self.touch(loc, target)
            self.code("rdp1")
            return inner
        if isinstance(elem, A.Base):
            values = [tuple(self._read_offset_shares(t, elem)) for t in pv.locs]
            tags = [tuple(pv.tags_pp[p][m] for p in range(self.q))
                    for m in range(pv.alpha)]
            out = self.proto.deref_read(values, tags)
            self.touch(loc, *pv.locs)
            self.code("mprdp")
            return PrivVal(out, elem.bty)
        # multi-location pointer-to-pointer read: oblivious merge of the candidates
        merged = None
        for m, t in enumerate(pv.locs):
            cand = self._load_ptr_at(t, elem)
            if merged is None:
                merged = cand
                continue
            sel = tuple(pv.tags_pp[p][m] for p in range(self.q))
            merged = self._resolve_ptr(sel, cand, merged, count=False)
        self.touch(loc, *pv.locs)
        self.code("mprdp1")
        return merged

    def _pre_inc(self, e: A.PreInc):
        loc, ty = self.env.lookup(e.name)
        if isinstance(ty, A.Base):
            if ty.label != A.PRIVATE:
                self._require_public_ctx(f"++{e.name} on a public variable")
                v = self._read_scalar(loc, ty)
                nv = PubVal(v.value + 1)
                for p, m in enumerate(self.mems):
                    m.update_val(loc, self._scalar_payloads(ty, nv)[p])
                self.touch(loc)
                self.code("pin")
                return nv
            cur = self._read_scalar(loc, ty)
            out = self.proto.add_const(cur.shares, 1)
            if self.legacy and self._legacy_frames and self._legacy_tracked(e.name):
                eff = self._legacy_frames[-1][0]
                out = self.proto.resolve(eff, out, cur.shares)
            for p, m in enumerate(self.mems):
                m.update_val(loc, encode_val(ty, out[p], self.sizes))
            self.touch(loc)
            self.code("pin3")
            return PrivVal(out, ty.bty)
        if isinstance(ty, A.Ptr):
            if ty.label != A.PRIVATE:
                self._require_public_ctx(f"++{e.name} on a public pointer")
            pv = self._ptr_read(loc.block, ty.label)
            stride = self._stride(self._element_ty(ty))
            new_locs = tuple(self.mems[0].get_location(l, stride) for l in pv.locs)
            out = PtrVal(new_locs, pv.tags_pp, pv.indirection, ty.label)
            self._ptr_write(loc.block, out, ty.label)
            self.touch(loc)
            if ty.label == A.PRIVATE:
                if pv.alpha > 1:
                    self.code("pin6" if ty.indirection == 1 else "pin7")
                else:
                    self.code("pin4" if ty.indirection == 1 else "pin5")
            else:
                self.code("pin1" if ty.indirection == 1 else "pin2")
            return out
        raise LabelViolation(f"++{e.name}: unsupported type {ty}")

    def _cast(self, e: A.Cast):
        v = self.eval_expr(e.expr)
        ty = e.ty
        if isinstance(ty, A.Base):
            if isinstance(v, PubVal):
                if ty.label == A.PRIVATE:
                    raise LabelViolation("label-changing cast")
                self.code("cv")
                return self._coerce_pub(v, ty)
            if isinstance(v, PrivVal):
                if ty.label != A.PRIVATE:
                    raise LabelViolation("label-changing cast")
                if ty.bty != v.bty:
                    raise UnsupportedConstruct("private int/float conversion")
                self.code("cv1")
                return v
            raise LabelViolation(f"cast of {v!r} to {ty}")
        if isinstance(ty, A.Ptr):
            if isinstance(v, Location):
                self.code("cl")
                return v
            if isinstance(v, PtrVal):
                if (ty.label == A.PRIVATE) != (v.label == A.PRIVATE):
                    raise LabelViolation("label-changing pointer cast")
                self.code("cl1" if ty.label == A.PRIVATE else "cl")
                return v
        raise LabelViolation(f"cast to {ty}")


def _mpc_op(op: str) -> str:
    return {"+": "+", "-": "-", "*": "*", "/": "/"}[op]


def _parse_labeled(source: str):
    from .lang.parser import parse as _p
    return _p(source, vanilla=False)


def _pretty_fun(s: A.FunDef) -> str:
    from .lang.pretty import pretty as _pp
    return _pp(A.Program(s))


def smc2_eval(program, inputs=None, seed: int = 0, params: FieldParams = FieldParams(),
              **kw) -> Simulator:
    """Run a labeled program; returns the finished simulator (configs, traces, psi)."""
    sim = Simulator(program, params=params, seed=seed, inputs=inputs, **kw)
    return sim.run()
