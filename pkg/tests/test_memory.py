"""Byte-level memory: encodings, permissions, overshooting, pointer arithmetic."""

import pytest
from hypothesis import given, strategies as st

from privc.errors import (AddressBeyondMemory, DoubleFree, SizeMismatch,
                          UseAfterFree)
from privc.lang import ast as A
from privc.memory import (NONE, ORIGIN_DECL, ORIGIN_HEAP, Location,
                          Memory, MemoryBlock, PointerData, SizeModel,
                          decode_arr, decode_ptr, decode_val, encode_arr,
                          encode_ptr, encode_val, perm_list)

SIZES = SizeModel()
PUB_INT = A.Base(A.PUBLIC, A.INT)
PRIV_INT = A.Base(A.PRIVATE, A.INT)


def make_block(data, ty=PUB_INT, count=1, origin=ORIGIN_DECL, label=A.PUBLIC):
    return MemoryBlock(bytearray(data), ty, count, perm_list(label, len(data)),
                       origin=origin)


def test_public_int_encoding():
    assert encode_val(PUB_INT, 7, SIZES) == bytes([7, 0, 0, 0])
    assert decode_val(PUB_INT, bytes([7, 0, 0, 0]), SIZES) == 7


def test_private_share_encoding():
    enc = encode_val(PRIV_INT, 12, SIZES)
    assert len(enc) == 16 and enc[:2] == bytes([12, 0])
    assert decode_val(PRIV_INT, enc, SIZES) == 12


def test_size_mismatch():
    with pytest.raises(SizeMismatch):
        decode_val(PUB_INT, b"\x00" * 3, SIZES)


def test_private_bytes_reinterpreted_as_public():
    # raw reinterpretation of a share prefix, no reconstruction
    enc = encode_val(PRIV_INT, (1 << 35) + 9, SIZES)
    assert decode_val(PUB_INT, enc[:4], SIZES) == 9


@given(st.integers(min_value=-(2 ** 31), max_value=2 ** 31 - 1))
def test_public_int_roundtrip(v):
    assert decode_val(PUB_INT, encode_val(PUB_INT, v, SIZES), SIZES) == v


@given(st.integers(min_value=0, max_value=2 ** 61 - 2))
def test_field_element_roundtrip(v):
    assert decode_val(PRIV_INT, encode_val(PRIV_INT, v, SIZES), SIZES) == v


def test_float_roundtrip():
    f = A.Base(A.PUBLIC, A.FLOAT)
    assert decode_val(f, encode_val(f, 1.5, SIZES), SIZES) == 1.5


def test_decode_arr_example():
    omega = encode_arr(PRIV_INT, [0, 3], SIZES)
    assert decode_arr(PRIV_INT, 1, omega, SIZES) == 3
    with pytest.raises(SizeMismatch):
        decode_arr(PRIV_INT, 2, omega, SIZES)


def test_pointer_roundtrip():
    pd = PointerData((Location(5, 0),), (1,), 1)
    assert decode_ptr(1, encode_ptr(pd)) == pd


def test_two_location_pointer():
    pd = PointerData((Location(1, 0), Location(2, 0)), (1, 0), 1)
    out = decode_ptr(2, encode_ptr(pd))
    assert out.alpha == 2
    assert out.locs == (Location(1, 0), Location(2, 0))
    assert out.tags == (1, 0)


def test_fresh_ids_monotone():
    mem = Memory()
    assert mem.fresh() == Location(0, 0)
    mem.install(0, make_block(b"\x00" * 4))
    for k in range(1, 4):
        assert mem.fresh() == Location(k, 0)
    assert mem.fresh(temp=True) == Location(-1, 0)
    assert mem.fresh(temp=True) == Location(-2, 0)


def test_lockstep_allocation_is_deterministic():
    def run():
        mem = Memory()
        return [mem.fresh() for _ in range(5)]
    assert run() == run()


def test_update_val_after_free():
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(b"\x00" * 4, origin=ORIGIN_HEAP))
    mem.free_block(0)
    with pytest.raises(UseAfterFree):
        mem.update_val(Location(0, 0), b"\x01\x00\x00\x00")
    with pytest.raises(DoubleFree):
        mem.free_block(0)


def test_check_freeable_only_heap():
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(b"\x00" * 4, origin=ORIGIN_DECL))
    mem.fresh()
    mem.install(1, make_block(b"\x00" * 4, origin=ORIGIN_HEAP))
    assert not mem.check_freeable([Location(0, 0)])
    assert mem.check_freeable([Location(1, 0)])


def test_freed_data_intact_and_oob_readable():
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(bytes([9, 0, 0, 0]), origin=ORIGIN_HEAP))
    mem.free_block(0)
    blk = mem.block(0)
    assert blk.data == bytearray([9, 0, 0, 0])
    assert all(p == NONE for _, p in blk.perms)
    raw, spans = mem.read_raw(Location(0, 0), 4)
    assert raw == bytes([9, 0, 0, 0])


def _layout_two_blocks():
    """a: public int[2] at block 0, b: public int = 7 at block 1."""
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(encode_arr(PUB_INT, [1, 2], SIZES), PUB_INT, 2))
    mem.fresh()
    mem.install(1, make_block(encode_val(PUB_INT, 7, SIZES)))
    return mem


def test_read_oob_well_aligned_spill():
    mem = _layout_two_blocks()
    raw, spans = mem.read_raw(Location(0, 8), 4)
    assert decode_val(PUB_INT, raw, SIZES) == 7
    assert spans == [(1, 0, 4)]
    assert mem.spans_well_aligned(spans, PUB_INT, SIZES)


def test_write_oob_spill_updates_next_block():
    mem = _layout_two_blocks()
    mem.write_raw(Location(0, 8), encode_val(PUB_INT, 4, SIZES))
    assert decode_val(PUB_INT, bytes(mem.block(1).data), SIZES) == 4
    # metadata untouched
    assert mem.block(1).ty == PUB_INT and mem.block(1).count == 1


def test_oob_roundtrip():
    mem = _layout_two_blocks()
    mem.write_raw(Location(0, 6), bytes([1, 2, 3, 4]))
    raw, _ = mem.read_raw(Location(0, 6), 4)
    assert raw == bytes([1, 2, 3, 4])


def test_read_oob_private_as_public_is_raw():
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(encode_val(PUB_INT, 1, SIZES), PUB_INT, 1))
    mem.fresh()
    mem.install(1, make_block(encode_val(PRIV_INT, 77, SIZES), PRIV_INT, 1,
                              label=A.PRIVATE))
    raw, spans = mem.read_raw(Location(0, 4), 4)
    assert decode_val(PUB_INT, raw, SIZES) == 77  # raw prefix, no reconstruction
    assert not mem.spans_well_aligned(spans, PUB_INT, SIZES)


def test_address_beyond_memory():
    mem = _layout_two_blocks()
    with pytest.raises(AddressBeyondMemory):
        mem.read_raw(Location(0, 8), 8)


def test_get_location_rolls_between_blocks():
    mem = Memory()
    mem.fresh()
    mem.install(0, make_block(b"\x00" * 8, PUB_INT, 2))
    mem.fresh()
    mem.install(1, make_block(b"\x00" * 4))
    assert mem.get_location(Location(0, 0), 4) == Location(0, 4)
    assert mem.get_location(Location(0, 4), 4) == Location(1, 0)
    with pytest.raises(AddressBeyondMemory):
        mem.get_location(Location(1, 0), 4)


def test_perms_length_invariant():
    with pytest.raises(SizeMismatch):
        MemoryBlock(bytearray(4), PUB_INT, 1, perm_list(A.PUBLIC, 3))


def test_dump_format():
    mem = _layout_two_blocks()
    lines = mem.dump().splitlines()
    assert lines[0].startswith("#0 public int 2 [public:freeable] ")
    assert lines[1].endswith(encode_val(PUB_INT, 7, SIZES).hex())


def test_small_int_encoding_exhaustive():
    for v in range(-300, 300):
        assert decode_val(PUB_INT, encode_val(PUB_INT, v, SIZES), SIZES) == v
    for v in range(0, 300):
        assert decode_val(PRIV_INT, encode_val(PRIV_INT, v, SIZES), SIZES) == v
