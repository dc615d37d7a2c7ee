"""Differential fuzzing: random programs vs their erasure (fixed seeds)."""

import random

from privc.erasure import erase_program
from privc.lang import parse
from privc.verify import PASS, check_correctness

NAMES_PRIV = ["pa", "pb", "pc", "pd"]
NAMES_PUB = ["ua", "ub"]
ARRS = ["arr"]


def gen_expr(rng, depth, allow_priv=True):
    pool = NAMES_PUB + (NAMES_PRIV if allow_priv else [])
    if depth <= 0 or rng.random() < 0.35:
        choice = rng.random()
        if choice < 0.45:
            return str(rng.randint(0, 9))
        if choice < 0.9:
            return rng.choice(pool)
        return f"{rng.choice(ARRS)}[{rng.randint(0, 2)}]" if allow_priv \
            else str(rng.randint(0, 9))
    op = rng.choice(["+", "-", "*", "+", "-"])
    return (f"({gen_expr(rng, depth - 1, allow_priv)} {op} "
            f"{gen_expr(rng, depth - 1, allow_priv)})")


def gen_branch_body(rng, n, depth=1):
    stmts = []
    for _ in range(n):
        kind = rng.random()
        if kind < 0.45:
            target = rng.choice(NAMES_PRIV)
            stmts.append(f"{target} = {gen_expr(rng, 2)};")
        elif kind < 0.6:
            stmts.append(f"arr[{rng.randint(0, 2)}] = {gen_expr(rng, 1)};")
        elif kind < 0.7:
            stmts.append(f"++{rng.choice(NAMES_PRIV)};")
        elif kind < 0.8:
            stmts.append(f"*pt = {gen_expr(rng, 1)};")
        elif kind < 0.9:
            stmts.append(f"pt = &{rng.choice(NAMES_PRIV)};")
        elif depth > 0:
            guard = f"{rng.choice(NAMES_PRIV)} < {gen_expr(rng, 1)}"
            stmts.append(f"if ({guard}) "
                         f"{{ {gen_branch_body(rng, 1, depth - 1)} }} "
                         f"else {{ {gen_branch_body(rng, 1, depth - 1)} }}")
        else:
            stmts.append(f"{rng.choice(NAMES_PRIV)} = arr[pidx];")
    return " ".join(stmts)


def gen_program(seed):
    rng = random.Random(seed)
    lines = [
        f"private int pa={rng.randint(0, 9)}, pb={rng.randint(0, 9)}, "
        f"pc={rng.randint(0, 9)}, pd={rng.randint(0, 9)};",
        f"public int ua={rng.randint(0, 9)}, ub={rng.randint(1, 9)};",
        "private int arr[3]={1,2,3};",
        f"private int pidx={rng.randint(0, 4)};",  # sometimes out of range
        f"private int *pt=&{rng.choice(NAMES_PRIV)};",
    ]
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.5:
            guard = (f"{rng.choice(NAMES_PRIV)} < "
                     f"{gen_expr(rng, 1)}")
            lines.append(f"if ({guard}) {{ {gen_branch_body(rng, rng.randint(1, 4))} }}"
                         f" else {{ {gen_branch_body(rng, rng.randint(1, 4))} }}")
        elif kind < 0.65:
            lines.append(f"while (ua < {rng.randint(1, 4)}) "
                         f"{{ ua = ua + 1; {gen_branch_body(rng, 1)} }}")
        elif kind < 0.8:
            lines.append(f"arr[pidx] = {gen_expr(rng, 1)};")
            lines.append(f"{rng.choice(NAMES_PRIV)} = arr[pidx];")
        else:
            lines.append(gen_branch_body(rng, 2))
    lines.append(f"{rng.choice(NAMES_PRIV)} = *pt;")
    for name in NAMES_PRIV:
        lines.append(f"smcoutput({name}, 1);")
    lines.append("smcoutput(arr, 2);")
    return "\n".join(lines)


def test_differential_fuzz_corpus():
    failures = []
    for seed in range(60):
        src = gen_program(seed)
        try:
            report = check_correctness(parse(src), seed=seed)
        except Exception as exc:  # noqa: BLE001 - report the offending program
            failures.append(f"seed {seed}: raised {exc}\n{src}")
            continue
        if report.verdict != PASS:
            failures.append(f"seed {seed}: {report.detail}\n{src}")
    assert not failures, failures[0]


def test_fuzz_generator_is_deterministic():
    assert gen_program(7) == gen_program(7)


def test_noninterference_fuzz():
    from privc.verify import check_noninterference
    failures = []
    for seed in range(12):
        src = gen_program(seed)
        src = src.replace(
            src.splitlines()[0],
            "private int pa=0, pb=0, pc=0, pd=0;\n"
            "smcinput(pa, 1); smcinput(pb, 1); smcinput(pc, 2); smcinput(pd, 2);")
        rng = random.Random(seed + 1000)

        def draw():
            return {1: {"pa": rng.randint(0, 9), "pb": rng.randint(0, 9)},
                    2: {"pc": rng.randint(0, 9), "pd": rng.randint(0, 9)}}

        rep = check_noninterference(parse(src), {}, draw(), draw(), seed=seed)
        if rep.verdict != PASS:
            failures.append(f"seed {seed}: {rep.divergence}")
    assert not failures, failures[0]
