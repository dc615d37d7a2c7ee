"""Shared runtime pieces for both evaluators: values, scoped environment, traces."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import UnboundVariable
from .lang import ast as A
from .memory import Location

SKIP = object()  # statement-completed marker value


@dataclass(frozen=True)
class PubVal:
    value: object  # int or float


@dataclass(frozen=True)
class PrivVal:
    shares: Tuple[int, ...]  # one field element per party
    bty: str = A.INT


@dataclass(frozen=True)
class PtrVal:
    """Pointer value: public candidate locations, per-party one-hot tag shares."""

    locs: Tuple[Location, ...]
    tags_pp: Tuple[Tuple[int, ...], ...]  # tags_pp[party][candidate]
    indirection: int
    label: Optional[str]

    @property
    def alpha(self):
        return len(self.locs)


def float_to_pattern(x: float) -> int:
    return struct.unpack("<I", struct.pack("<f", float(x)))[0]


def pattern_to_float(u: int) -> float:
    return struct.unpack("<f", struct.pack("<I", u & 0xFFFFFFFF))[0]


class Env:
    """Block-structured variable environment: name -> (Location, type).

    Function calls see the global frame plus their own frames only.
    """

    def __init__(self):
        self.frames: List[dict] = [{}]

    def push(self):
        self.frames.append({})

    def pop(self):
        self.frames.pop()

    def bind(self, name: str, loc: Location, ty):
        self.frames[-1][name] = (loc, ty)

    def lookup(self, name: str):
        for frame in reversed(self.frames):
            if name in frame:
                return frame[name]
        raise UnboundVariable(name)

    def enter_function(self):
        saved = self.frames
        self.frames = [self.frames[0], {}]
        return saved

    def leave_function(self, saved):
        self.frames = saved

    def snapshot_bindings(self):
        """Flat name -> (loc, ty) view, innermost binding wins."""
        out = {}
        for frame in self.frames:
            out.update(frame)
        return out


class TypeView:
    """Adapter exposing the runtime environment to the static label analysis."""

    def __init__(self, env: Env):
        self._env = env

    def lookup(self, name):
        return self._env.lookup(name)[1]
