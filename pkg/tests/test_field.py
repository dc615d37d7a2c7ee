"""Protocol suite: sharing, reconstruction, the multiparty operations, rounds."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from privc.errors import DivisionByZero, NotEnoughShares
from privc.field import DEFAULT_PRIME, FieldParams, Protocols, c_div, to_signed

P101 = FieldParams(p=101, q=3, t=1)
P11 = FieldParams(p=11, q=3, t=1)


class FixedRng:
    def __init__(self, value):
        self.value = value

    def randrange(self, _p):
        return self.value


def test_share_worked_example():
    pr = Protocols(P101, seed=0)
    assert pr.share(5, rng=FixedRng(7)) == (12, 19, 26)
    assert pr.reconstruct((12, 19, 26)) == 5


def test_reconstruct_from_threshold_subset():
    pr = Protocols(P101, seed=0)
    sh = pr.share(5, rng=FixedRng(7))
    assert pr.reconstruct(sh[:2], parties=(1, 2)) == 5
    assert pr.reconstruct(sh[1:], parties=(2, 3)) == 5
    with pytest.raises(NotEnoughShares):
        pr.reconstruct(sh[:1], parties=(1,))


def test_zero_with_zero_coefficient():
    pr = Protocols(P101, seed=0)
    assert pr.share(0, rng=FixedRng(0)) == (0, 0, 0)


def test_share_privacy_margin():
    # any single share of x is uniform over the coefficient draw
    pr = Protocols(P11, seed=0)
    seen = {pr.share(5, rng=FixedRng(c))[0] for c in range(11)}
    assert seen == set(range(11))


def test_mult_examples():
    pr = Protocols(P101, seed=1)
    assert pr.reconstruct(pr.mult(pr.share(3), pr.share(4))) == 12
    assert pr.reconstruct(pr.mult(pr.share(9), pr.share(0))) == 0
    assert pr.reconstruct(pr.mult(pr.share(9), pr.share(1))) == 9


def test_mult_output_is_fresh_degree_t():
    pr = Protocols(P101, seed=1)
    out = pr.mult(pr.share(3), pr.share(4))
    # degree-t consistency: every 2-subset interpolates to the same secret
    vals = {pr.reconstruct([out[i], out[j]], parties=(i + 1, j + 1))
            for i, j in itertools.combinations(range(3), 2)}
    assert vals == {12}


def test_binop_examples():
    pr = Protocols(P101, seed=1)
    before = pr.rounds
    assert pr.reconstruct(pr.binop("+", pr.share(3), pr.share(4))) == 7
    assert pr.rounds == before  # addition is local
    x = pr.share(9)
    assert pr.reconstruct(pr.binop("-", x, x)) == 0
    assert pr.reconstruct(pr.binop("/", pr.share(7), pr.share(2))) == 3


def test_division_matches_c_semantics():
    pr = Protocols(P101, seed=1)
    for a, b in [(7, 2), (-7, 2), (7, -2), (-7, -2), (6, 3), (1, 5)]:
        got = to_signed(pr.reconstruct(pr.binop("/", pr.share(a), pr.share(b))),
                        101)
        assert got == c_div(a, b), (a, b)
    with pytest.raises(DivisionByZero):
        pr.binop("/", pr.share(1), pr.share(0))


def test_cmp_examples():
    pr = Protocols(P101, seed=1)
    assert pr.reconstruct(pr.cmp("<", pr.share(3), pr.share(7))) == 1
    assert pr.reconstruct(pr.cmp("<", pr.share(7), pr.share(3))) == 0
    x = pr.share(42)
    assert pr.reconstruct(pr.cmp("==", x, x)) == 1
    assert pr.reconstruct(pr.cmp("<", pr.share(-4), pr.share(1))) == 1


@pytest.mark.parametrize("backend", ["shamir", "dealer"])
def test_exhaustive_small_field_binops(backend):
    pr = Protocols(P11, seed=2, backend=backend)
    for a, b in itertools.product(range(11), repeat=2):
        for op, want in (("+", (a + b) % 11), ("-", (a - b) % 11),
                         ("*", (a * b) % 11)):
            assert pr.reconstruct(pr.binop(op, pr.share(a), pr.share(b))) == want


def test_array_read_mux_oracle():
    pr = Protocols(P101, seed=3)
    elems = [pr.share(v) for v in (10, 20, 30)]
    assert pr.reconstruct(pr.array_read(pr.share(1), elems)) == 20
    assert pr.reconstruct(pr.array_read(pr.share(0), [pr.share(9)])) == 9
    assert pr.reconstruct(pr.array_read(pr.share(5), elems)) == 0  # out of range


def test_array_write_mux_oracle():
    pr = Protocols(P101, seed=3)
    out = pr.array_write(pr.share(1), [pr.share(v) for v in (1, 2, 3)], pr.share(9))
    assert [pr.reconstruct(s) for s in out] == [1, 9, 3]
    out = pr.array_write(pr.share(7), [pr.share(v) for v in (1, 2, 3)], pr.share(9))
    assert [pr.reconstruct(s) for s in out] == [1, 2, 3]  # out of range: no-op
    out = pr.array_write(pr.share(0), [pr.share(5)], pr.share(8))
    assert [pr.reconstruct(s) for s in out] == [8]


def test_deref_read_one_hot():
    pr = Protocols(P101, seed=4)
    vals = [pr.share(5), pr.share(7)]
    assert pr.reconstruct(pr.deref_read(vals, [pr.share(1), pr.share(0)])) == 5
    assert pr.reconstruct(pr.deref_read(vals, [pr.share(0), pr.share(1)])) == 7
    assert pr.reconstruct(pr.deref_read([pr.share(3)], [pr.share(1)])) == 3


def _swap_oracle(contents, true_idx):
    """Plaintext simulation of the oblivious free: swap slot 0 and the true slot."""
    out = [list(c) for c in contents]
    out[0], out[true_idx] = out[true_idx], out[0]
    return out


@pytest.mark.parametrize("alpha,true_idx", [(2, 0), (2, 1), (3, 0), (3, 1), (3, 2)])
def test_free_swap_oracle(alpha, true_idx):
    pr = Protocols(P101, seed=5)
    plain = [[10 * m + e for e in range(2)] for m in range(alpha)]
    contents = [[pr.share(v) for v in slot] for slot in plain]
    tags = [pr.share(int(m == true_idx)) for m in range(alpha)]
    new, new_tags = pr.free_swap(contents, tags)
    got = [[pr.reconstruct(s) for s in slot] for slot in new]
    assert got == _swap_oracle(plain, true_idx)
    # tags: one-hot over survivors, pointing at slot 1 when slot 0 was true
    rec = [pr.reconstruct(t) for t in new_tags]
    assert sum(rec) == 1
    expect_idx = 0 if true_idx <= 1 else true_idx - 1
    assert rec.index(1) == expect_idx


def test_free_swap_identical_contents_noop():
    pr = Protocols(P101, seed=5)
    for true_idx in (0, 1):
        contents = [[pr.share(6)], [pr.share(6)]]
        tags = [pr.share(int(m == true_idx)) for m in range(2)]
        new, _ = pr.free_swap(contents, tags)
        assert [pr.reconstruct(s[0]) for s in new] == [6, 6]


def test_resolve_examples():
    pr = Protocols(P101, seed=6)
    assert pr.reconstruct(pr.resolve(pr.share(1), pr.share(3), pr.share(7))) == 3
    assert pr.reconstruct(pr.resolve(pr.share(0), pr.share(3), pr.share(7))) == 7
    same = pr.resolve(pr.share(0), pr.share(4), pr.share(4))
    assert pr.reconstruct(same) == 4  # then == else: any condition


def test_rounds_data_independent():
    def trace(x, y, i):
        pr = Protocols(P101, seed=7)
        pr.binop("*", pr.share(x), pr.share(y))
        pr.cmp("<", pr.share(x), pr.share(y))
        pr.array_read(pr.share(i), [pr.share(v) for v in (x, y, 9)])
        return pr.rounds, dict(pr.counts)

    assert trace(3, 4, 0) == trace(88, 17, 2) == trace(0, 0, 7)


def test_seeded_replay_equality():
    a = Protocols(P101, seed=9)
    b = Protocols(P101, seed=9)
    assert a.share(5) == b.share(5)
    assert a.mult(a.share(2), a.share(3)) == b.mult(b.share(2), b.share(3))


def test_equal_inputs_equal_outputs():
    # the noninterference form of the protocol axioms
    pr1 = Protocols(P101, seed=11)
    pr2 = Protocols(P101, seed=11)
    out1 = pr1.array_read(pr1.share(1), [pr1.share(v) for v in (4, 5, 6)])
    out2 = pr2.array_read(pr2.share(1), [pr2.share(v) for v in (4, 5, 6)])
    assert out1 == out2


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=DEFAULT_PRIME - 1))
def test_default_field_roundtrip(x):
    pr = Protocols(FieldParams(), seed=1)
    assert pr.reconstruct(pr.share(x)) == x


def test_threshold_validation():
    with pytest.raises(ValueError):
        FieldParams(p=101, q=3, t=2)
