"""Erasure of programs and state; psi and code congruence."""

from privc.erasure import (code_congruent, erase_program, erase_state,
                           erase_stmt, erase_type, psi_congruent)
from privc.interp import smc2_eval
from privc.lang import ast as A, parse, pretty
from privc.memory import Location, decode_ptr, decode_val, SizeModel
from privc.vanilla import van_eval


def test_erase_type_strips_labels():
    assert erase_type(A.Base(A.PRIVATE, A.INT)) == A.Base(None, A.INT)
    assert erase_type(A.Ptr(A.PRIVATE, A.FLOAT, 2)) == A.Ptr(None, A.FLOAT, 2)
    fn = A.FunTy((A.Base(A.PRIVATE, A.INT),), A.Base(A.PUBLIC, A.INT))
    assert erase_type(fn) == A.FunTy((A.Base(None, A.INT),), A.Base(None, A.INT))


def test_erase_pmalloc_rewrite():
    prog = parse("private int *p; p = pmalloc(3, private int);")
    text = pretty(erase_program(prog))
    assert "malloc(3 * sizeof(int))" in text
    assert "pmalloc" not in text


def test_erase_label_strip_and_io_renames():
    prog = parse("private int x=1; smcoutput(x, 1); smcinput(x, 2); pfree(x);")
    text = pretty(erase_program(prog))
    assert "private" not in text
    assert "mcoutput(x, 1);" in text
    assert "mcinput(x, 2);" in text
    assert "free(x);" in text and "pfree" not in text


def test_erase_idempotent():
    prog = parse("""
    private int a=3,b=7,c=0,*p=&a;
    if (a<b) { *p = c; } else { p = &b; }
    smcoutput(c, 1);
    """)
    once = erase_program(prog)
    assert erase_program(once) == once


def test_erase_stmt_idempotent():
    s = parse("private int x=0; x = x + 1;").body
    assert erase_stmt(erase_stmt(s)) == erase_stmt(s)


def test_no_temporaries_survive_erasure():
    sim = smc2_eval(parse("private int a=1,b=2,c=0; if (a<b){c=a;} else {c=b;}"),
                    seed=1)
    erased = erase_state(sim)
    assert not any(n.startswith(("res_", "res")) and n not in ("res",)
                   for n in erased.gamma)
    # temporary blocks live in the negative id space, outside the erased view
    assert all(lid >= 0 for lid in erased.sigma)
    assert any(lid < 0 for lid in sim.mems[0].blocks)


def test_erase_memory_reconstructs_private_scalar():
    sim = smc2_eval(parse("private int c=0; c = 3;"), seed=1)
    erased = erase_state(sim)
    loc, ty = erased.gamma["c"]
    assert ty == A.Base(None, A.INT)
    blk = erased.sigma[loc.block]
    assert decode_val(A.Base(None, A.INT), blk.data, SizeModel()) == 3
    assert blk.data == bytes([3, 0, 0, 0])


def test_erase_memory_collapses_multi_location_pointer():
    sim = smc2_eval(parse(
        "private int a=3,b=7,*p; if (a<b) { p=&a; } else { p=&b; }"), seed=1)
    erased = erase_state(sim)
    loc, _ = erased.gamma["p"]
    pd = decode_ptr(1, erased.sigma[loc.block].data)
    assert pd.locs[0] == Location(sim.env.lookup("a")[0].block, 0)


def test_erase_offset_rescale():
    # private stride 16 -> public stride 4: offset 32 becomes 8
    sim = smc2_eval(parse("""
    private int *p;
    p = pmalloc(3, private int);
    ++p; ++p;
    """), seed=1)
    erased = erase_state(sim)
    loc, _ = erased.gamma["p"]
    pd = decode_ptr(1, erased.sigma[loc.block].data)
    assert pd.locs[0].offset == 8
    raw = sim._ptr_read(sim.env.lookup("p")[0].block, A.PRIVATE)
    assert raw.locs[0].offset == 32


def test_erased_function_block_matches_reference():
    src = "private int dbl(private int v) { v + v; } private int r=0; r = dbl(2);"
    sim = smc2_eval(parse(src), seed=1)
    van = van_eval(erase_program(parse(src)))
    ok, div = psi_congruent(sim, van)
    assert ok, div


# -------------------------------------------------------------- psi congruence

def test_psi_congruent_without_pfree_is_plain_equality():
    src = "private int a=3,b=7,c=0; if (a<b){c=a;} else {c=b;} smcoutput(c,1);"
    sim = smc2_eval(parse(src), seed=2)
    van = van_eval(erase_program(parse(src)))
    assert sim.psi == []
    ok, div = psi_congruent(sim, van)
    assert ok, div


def test_psi_congruent_after_swap():
    src = """
    private int a=3, b=7, *p, *q;
    p = pmalloc(1, private int);
    q = pmalloc(1, private int);
    *p = 11;
    *q = 22;
    if (b < a) { q = p; } else { q = q; }
    pfree(q);
    """
    sim = smc2_eval(parse(src), seed=2)
    van = van_eval(erase_program(parse(src)))
    assert len(sim.psi) == 1 and sim.psi[0][0] != sim.psi[0][1]
    ok, div = psi_congruent(sim, van)
    assert ok, div


def test_psi_congruent_detects_perturbation():
    src = "public int x=5; private int y=6;"
    sim = smc2_eval(parse(src), seed=2)
    van = van_eval(erase_program(parse(src)))
    blk = van.mem.block(van.env.lookup("x")[0].block)
    blk.data[0] ^= 0xFF
    ok, div = psi_congruent(sim, van)
    assert not ok
    assert "block" in str(div) and "offset 0" in str(div)


# -------------------------------------------------------------- code congruence

def test_code_congruence_pairs():
    assert code_congruent([], [])[0]
    assert code_congruent(["malp"], ["ty", "bm", "mal"])[0]
    assert not code_congruent(["malp"], ["bm", "ty", "mal"])[0]
    assert code_congruent(["iep"], ["mpief"])[0]
    assert code_congruent(["iep"], ["mpiet"])[0]
    assert not code_congruent(["iep"], ["iet"])[0]
    assert code_congruent(["mpcmp"], ["mpcmpt"])[0]
    assert code_congruent(["mpcmp"], ["mpcmpf"])[0]
    assert code_congruent(["r1", "w2"], ["r", "w"])[0]
    assert code_congruent([("r1", 0)], ["r"])[0]  # acc annotations stripped
    assert not code_congruent(["w"], [])[0]
    assert not code_congruent([], ["w"])[0]


def test_code_congruence_runtime_alpha_aliases():
    assert code_congruent(["mprdp"], ["rdp"])[0]
    assert code_congruent(["mpwdp"], ["wdp"])[0]
    assert code_congruent(["mpfre"], ["fre"])[0]
    assert code_congruent(["pfre"], ["fre"])[0]


def test_pmalloc_expansion_in_context():
    src = "private int *p; p = pmalloc(2, private int);"
    sim = smc2_eval(parse(src), seed=1)
    van = van_eval(erase_program(parse(src)))
    assert "malp" in [c for c, _ in sim.D[0]]
    i = van.D.index("ty")
    assert van.D[i:i + 3] == ["ty", "bm", "mal"]
    ok, div = code_congruent(sim.D[0], van.D)
    assert ok, div
