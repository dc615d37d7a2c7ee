"""Per-party byte-level memory: blocks with per-byte (privacy, permission) metadata.

Blocks live in two id spaces: user blocks (ids 0, 1, 2, ... in allocation order,
never recycled) and temporary blocks (negative ids) used for branch-resolution
scratch state. Flat address order for out-of-bounds walks is ascending user id,
each block contiguous; temporaries are never reachable by overshooting.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import (AddressBeyondMemory, DoubleFree, MalformedPointer,
                     SizeMismatch, UseAfterFree)
from .lang import ast as A

FREEABLE = "Freeable"
NONE = "None"

# block origins; only heap blocks may be freed
ORIGIN_DEFAULT = "default"
ORIGIN_DECL = "decl"
ORIGIN_HEAP = "heap"


@dataclass(frozen=True)
class Location:
    block: int
    offset: int

    def __repr__(self):
        return f"({self.block},{self.offset})"


@dataclass(frozen=True)
class PointerData:
    """Decoded pointer payload: candidate locations, one-hot tags, indirection.

    Tags are plaintext 0/1 for public pointers and per-party field shares for
    private ones; exactly one logical tag is 1.
    """

    locs: Tuple[Location, ...]
    tags: Tuple[int, ...]
    indirection: int

    @property
    def alpha(self) -> int:
        return len(self.locs)


class SizeModel:
    """Byte sizes per type; private scalars are wider than public ones."""

    PUBLIC_SCALAR = 4
    FIELD_BYTES = 8

    def __init__(self, private_scalar_bytes: int = 16):
        if private_scalar_bytes < self.FIELD_BYTES:
            raise ValueError("private scalar must hold at least one field element")
        self.private_scalar_bytes = private_scalar_bytes

    def size_of(self, ty) -> int:
        if isinstance(ty, A.Base):
            if ty.bty == A.VOID:
                raise SizeMismatch("void has no size")
            return self.private_scalar_bytes if ty.label == A.PRIVATE else self.PUBLIC_SCALAR
        if isinstance(ty, (A.Ptr, A.ArrPtr)):
            return self.ptr_size(1)
        raise SizeMismatch(f"no size for {ty!r}")

    @staticmethod
    def ptr_size(alpha: int) -> int:
        # u32 alpha, u32 indirection, alpha * (i32 block, u32 offset), alpha * u64 tag
        return 8 + 16 * alpha


# ---------------------------------------------------------------- encode / decode

def encode_val(ty: A.Base, v, sizes: SizeModel) -> bytes:
    n = sizes.size_of(ty)
    if ty.label == A.PRIVATE:
        return int(v).to_bytes(SizeModel.FIELD_BYTES, "little") + b"\x00" * (n - SizeModel.FIELD_BYTES)
    if ty.bty == A.INT:
        return struct.pack("<i", _wrap32(int(v)))
    return struct.pack("<f", float(v))


def decode_val(ty: A.Base, omega: bytes, sizes: SizeModel):
    if len(omega) != sizes.size_of(ty):
        raise SizeMismatch(f"{len(omega)} bytes for {ty}")
    if ty.label == A.PRIVATE:
        return int.from_bytes(omega[:SizeModel.FIELD_BYTES], "little")
    if ty.bty == A.INT:
        return struct.unpack("<i", omega)[0]
    return struct.unpack("<f", omega)[0]


def _wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v >= (1 << 31) else v


def encode_arr(ty: A.Base, values, sizes: SizeModel) -> bytes:
    return b"".join(encode_val(ty, v, sizes) for v in values)


def decode_arr(ty: A.Base, i: int, omega: bytes, sizes: SizeModel):
    n = sizes.size_of(ty)
    if (i + 1) * n > len(omega):
        raise SizeMismatch(f"array holds {len(omega) // n} elements, index {i}")
    return decode_val(ty, omega[i * n:(i + 1) * n], sizes)


def encode_ptr(pd: PointerData) -> bytes:
    out = struct.pack("<II", pd.alpha, pd.indirection)
    for loc in pd.locs:
        out += struct.pack("<iI", loc.block, loc.offset)
    for tag in pd.tags:
        out += struct.pack("<Q", int(tag))
    return out


def decode_ptr(alpha: int, omega: bytes) -> PointerData:
    if len(omega) != SizeModel.ptr_size(alpha):
        raise MalformedPointer(f"{len(omega)} bytes for alpha={alpha}")
    got_alpha, ind = struct.unpack_from("<II", omega, 0)
    if got_alpha != alpha:
        raise MalformedPointer(f"encoded alpha {got_alpha}, expected {alpha}")
    locs, tags = [], []
    off = 8
    for _ in range(alpha):
        b, mu = struct.unpack_from("<iI", omega, off)
        locs.append(Location(b, mu))
        off += 8
    for _ in range(alpha):
        tags.append(struct.unpack_from("<Q", omega, off)[0])
        off += 8
    return PointerData(tuple(locs), tuple(tags), ind)


def encode_fun(flag: bool, source: str) -> bytes:
    return (f"{int(flag)}|" + source).encode()


def decode_fun(omega: bytes) -> Tuple[bool, str]:
    text = omega.decode()
    flag, src = text.split("|", 1)
    return bool(int(flag)), src


# ---------------------------------------------------------------- blocks

def perm_list(label: str, nbytes: int, perm: str = FREEABLE) -> List[Tuple[str, str]]:
    return [(label, perm)] * nbytes


def perm_list_ptr(label: str, alpha: int, perm: str = FREEABLE) -> List[Tuple[str, str]]:
    """Pointer blocks: header and locations public; tags carry the pointer label."""
    header = [(A.PUBLIC, perm)] * (8 + 8 * alpha)
    tags = [(label, perm)] * (8 * alpha)
    return header + tags


@dataclass
class MemoryBlock:
    data: bytearray
    ty: object
    count: int
    perms: List[Tuple[str, str]]
    origin: str = ORIGIN_DECL
    alloc_ty: Optional[object] = None  # element type of heap blocks, for erasure

    def __post_init__(self):
        if len(self.perms) != len(self.data):
            raise SizeMismatch("perms length != byte length")

    @property
    def freed(self) -> bool:
        return bool(self.perms) and all(p == NONE for _, p in self.perms)

    def writable(self, start: int, n: int) -> bool:
        return all(p != NONE for _, p in self.perms[start:start + n])


class Memory:
    """One party's memory; the simulator owns q of these and mutates in lockstep."""

    def __init__(self):
        self.blocks: Dict[int, MemoryBlock] = {}
        self._next_user = 0
        self._next_temp = -1

    # -- allocation

    def fresh(self, temp: bool = False) -> Location:
        if temp:
            lid = self._next_temp
            self._next_temp -= 1
        else:
            lid = self._next_user
            self._next_user += 1
        return Location(lid, 0)

    def install(self, lid: int, block: MemoryBlock):
        self.blocks[lid] = block

    def block(self, lid: int) -> MemoryBlock:
        try:
            return self.blocks[lid]
        except KeyError:
            raise AddressBeyondMemory(f"block {lid}") from None

    def user_ids(self) -> List[int]:
        return sorted(l for l in self.blocks if l >= 0)

    # -- legal-path updates (permission checked)

    def update_val(self, loc: Location, payload: bytes, ty=None):
        blk = self.block(loc.block)
        n = len(payload)
        if not blk.writable(loc.offset, n):
            raise UseAfterFree(f"write to freed bytes at {loc}")
        if loc.offset + n > len(blk.data):
            raise AddressBeyondMemory(f"{loc} + {n} bytes")
        blk.data[loc.offset:loc.offset + n] = payload

    def update_arr(self, loc_block: int, index: int, payload: bytes):
        self.update_val(Location(loc_block, index * len(payload)), payload)

    def update_ptr(self, lid: int, pd: PointerData, label: str):
        blk = self.block(lid)
        if blk.freed:
            raise UseAfterFree(f"pointer write to freed block {lid}")
        blk.data = bytearray(encode_ptr(pd))
        blk.count = pd.alpha
        blk.perms = perm_list_ptr(label, pd.alpha)

    def read_val(self, loc: Location, ty: A.Base, sizes: SizeModel):
        blk = self.block(loc.block)
        n = sizes.size_of(ty)
        if not blk.writable(loc.offset, n):
            raise UseAfterFree(f"read of freed bytes at {loc}")
        return decode_val(ty, bytes(blk.data[loc.offset:loc.offset + n]), sizes)

    # -- out-of-bounds machinery (raw, permission-blind, metadata untouched)

    def _walk(self, start: Location, nbytes: int):
        """Yield (block id, offset, length) spans covering nbytes from start."""
        ids = self.user_ids()
        if start.block < 0:
            raise AddressBeyondMemory("overshoot from a temporary block")
        try:
            pos = ids.index(start.block)
        except ValueError:
            raise AddressBeyondMemory(f"block {start.block}") from None
        spans = []
        off = start.offset
        need = nbytes
        while need > 0:
            if pos >= len(ids):
                raise AddressBeyondMemory(f"{nbytes} bytes from {start}")
            blk = self.blocks[ids[pos]]
            avail = len(blk.data) - off
            if avail <= 0:
                pos += 1
                off = 0
                continue
            take = min(avail, need)
            spans.append((ids[pos], off, take))
            need -= take
            off += take
            if need > 0:
                pos += 1
                off = 0
        return spans

    def read_raw(self, start: Location, nbytes: int):
        spans = self._walk(start, nbytes)
        data = b"".join(bytes(self.blocks[l].data[o:o + n]) for l, o, n in spans)
        return data, spans

    def write_raw(self, start: Location, payload: bytes):
        spans = self._walk(start, len(payload))
        i = 0
        for l, o, n in spans:
            self.blocks[l].data[o:o + n] = payload[i:i + n]
            i += n
        return spans

    def spans_well_aligned(self, spans, ty: A.Base, sizes: SizeModel) -> bool:
        """Aligned spill: every touched block holds elements of exactly this type
        and every span begins and ends on an element boundary."""
        width = sizes.size_of(ty)
        for l, o, n in spans:
            blk = self.blocks[l]
            if not isinstance(blk.ty, A.Base) or blk.ty != ty:
                return False
            if o % width or n % width:
                return False
        return True

    # -- free

    def free_block(self, lid: int):
        blk = self.block(lid)
        if blk.freed:
            raise DoubleFree(f"block {lid}")
        blk.perms = [(lbl, NONE) for lbl, _ in blk.perms]

    def check_freeable(self, locs) -> bool:
        for loc in locs:
            blk = self.blocks.get(loc.block)
            if blk is None or blk.origin != ORIGIN_HEAP or blk.freed:
                return False
        return True

    # -- pointer arithmetic

    def get_location(self, loc: Location, stride: int) -> Location:
        mu = loc.offset + stride
        lid = loc.block
        if lid < 0:
            raise AddressBeyondMemory("pointer arithmetic on a temporary block")
        ids = self.user_ids()
        pos = ids.index(lid) if lid in self.blocks else None
        if pos is None:
            raise AddressBeyondMemory(f"block {lid}")
        while mu >= len(self.blocks[ids[pos]].data):
            mu -= len(self.blocks[ids[pos]].data)
            pos += 1
            if pos >= len(ids):
                raise AddressBeyondMemory(f"{loc} + {stride}")
        return Location(ids[pos], mu)

    # -- debugging / golden tests

    def dump(self) -> str:
        lines = []
        for lid in sorted(self.blocks):
            blk = self.blocks[lid]
            kinds = {p for _, p in blk.perms}
            labels = {a for a, _ in blk.perms}
            perm = ("none" if kinds == {NONE} else
                    "freeable" if kinds == {FREEABLE} else "mixed")
            lab = "/".join(sorted(labels)) or "-"
            lines.append(f"#{lid} {blk.ty} {blk.count} [{lab}:{perm}] {bytes(blk.data).hex()}")
        return "\n".join(lines)


def phi_pair(mem: Memory) -> Location:
    """Spec-named allocator front: fresh user location (BlockId, 0)."""
    return mem.fresh(temp=False)
