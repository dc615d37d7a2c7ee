"""Shipped corpus: the worked examples, the pay-gap program, and probe programs.

Each entry names its `.sc` source, the input files it needs, private-input
variant pairs for the noninterference harness, and whether the correctness
checker is expected to SKIP it (overshoots that are not well-aligned).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import MissingInput

def corpus_dir() -> Path:
    return Path(resources.files("privc")) / "corpus"


def read_program(name: str) -> str:
    return (corpus_dir() / f"{name}.sc").read_text()


_NUM = re.compile(r"-?\d+(\.\d+)?")


def parse_input_text(text: str) -> Dict[str, object]:
    """One party's records: `var = value` or `var = [v1, v2, ...]` per line."""
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MissingInput(f"line {lineno}: expected `var = value`")
        name, rhs = (part.strip() for part in line.split("=", 1))
        if rhs.startswith("["):
            if not rhs.endswith("]"):
                raise MissingInput(f"line {lineno}: unterminated list")
            items = [t.strip() for t in rhs[1:-1].split(",") if t.strip()]
            out[name] = [_num(t, lineno) for t in items]
        else:
            out[name] = _num(rhs, lineno)
    return out


def _num(tok: str, lineno: int):
    if not _NUM.fullmatch(tok):
        raise MissingInput(f"line {lineno}: bad number {tok!r}")
    return float(tok) if "." in tok else int(tok)


def load_inputs(prefix, q: int) -> Dict[int, dict]:
    """Read `<prefix>.party<k>.txt` for k in 1..q; missing files mean no records."""
    inputs: Dict[int, dict] = {}
    for k in range(1, q + 1):
        path = Path(f"{prefix}.party{k}.txt")
        if path.exists():
            inputs[k] = parse_input_text(path.read_text())
    return inputs


def write_outputs(outputs, out_dir) -> List[Path]:
    """One `out.party<k>.txt` per party, lines `var = value` in program order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, records in enumerate(outputs, 1):
        path = out_dir / f"out.party{k}.txt"
        lines = []
        for name, value in records:
            if isinstance(value, list):
                lines.append(f"{name} = [{', '.join(str(v) for v in value)}]")
            else:
                lines.append(f"{name} = {value}")
        path.write_text("\n".join(lines) + ("\n" if lines else ""))
        paths.append(path)
    return paths


@dataclass
class CorpusEntry:
    name: str
    inputs: Optional[str] = None  # input file prefix inside the corpus dir
    ni_pairs: List[Tuple[Dict[int, dict], Dict[int, dict]]] = field(default_factory=list)
    expect_skip: bool = False

    def source(self) -> str:
        return read_program(self.name)

    def input_records(self, q: int = 3) -> Dict[int, dict]:
        if self.inputs is None:
            return {}
        inputs = {}
        for k in range(1, q + 1):
            path = corpus_dir() / f"{self.inputs}.party{k}.txt"
            if path.exists():
                inputs[k] = parse_input_text(path.read_text())
        return inputs


def _pairs(*pairs):
    return [({int(k): dict(v) for k, v in a.items()},
             {int(k): dict(v) for k, v in b.items()}) for a, b in pairs]


_PAYGAP_NI = _pairs(
    ({1: {"gender1": [0, 1], "salary1": [50, 66]}, 2: {"gender2": [0, 1], "salary2": [58, 70]}},
     {1: {"gender1": [0, 1], "salary1": [46, 80]}, 2: {"gender2": [1, 0], "salary2": [64, 52]}}),
    ({1: {"gender1": [0, 0], "salary1": [40, 44]}, 2: {"gender2": [1, 1], "salary2": [90, 70]}},
     {1: {"gender1": [0, 1], "salary1": [41, 95]}, 2: {"gender2": [0, 1], "salary2": [43, 85]}}),
    ({1: {"gender1": [1, 0], "salary1": [77, 33]}, 2: {"gender2": [0, 1], "salary2": [31, 79]}},
     {1: {"gender1": [1, 1], "salary1": [60, 62]}, 2: {"gender2": [0, 0], "salary2": [30, 34]}}),
)

# programs whose private data is literal get degenerate pairs: the harness
# still exercises 3 seeds and the trivial privA == privB equality
_EMPTY3 = _pairs(({}, {}), ({}, {}), ({}, {}))

CORPUS: List[CorpusEntry] = [
    CorpusEntry("branch_scalar", ni_pairs=_EMPTY3),
    CorpusEntry("branch_pointer", ni_pairs=_EMPTY3),
    CorpusEntry("pointer_challenge", ni_pairs=_EMPTY3),
    CorpusEntry("array_challenge", ni_pairs=_EMPTY3),
    CorpusEntry("resolution_cost", ni_pairs=_EMPTY3),
    CorpusEntry("paygap", inputs="paygap", ni_pairs=_PAYGAP_NI),
    CorpusEntry("pb_loop", ni_pairs=_EMPTY3),
    CorpusEntry("pfree_noop", ni_pairs=_EMPTY3),
    CorpusEntry("pfree_swap", ni_pairs=_EMPTY3),
    CorpusEntry("oob_read", ni_pairs=_EMPTY3),
    CorpusEntry("oob_write", ni_pairs=_EMPTY3),
    CorpusEntry("oob_misaligned", ni_pairs=_EMPTY3, expect_skip=True),
    CorpusEntry("arr_private_idx", ni_pairs=_EMPTY3),
    CorpusEntry("funcall", ni_pairs=_EMPTY3),
    CorpusEntry("nested_if", ni_pairs=_EMPTY3),
    CorpusEntry("mixed_ops", inputs="mixed_ops", ni_pairs=_EMPTY3),
]


def by_name(name: str) -> CorpusEntry:
    for entry in CORPUS:
        if entry.name == name:
            return entry
    raise KeyError(name)
