"""Fixed-length chunk packing."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitgrid.packing import PackedDataset, pack, read_packed, write_packed
from unitgrid.units import UnitSequence


def _corpus(token_counts, vocab=10):
    seqs = []
    value = 0
    for i, count in enumerate(token_counts):
        units = tuple((value + j) % vocab for j in range(count))
        value += count
        seqs.append(UnitSequence(f"utt{i}", units))
    return seqs


class TestPack:
    def test_floor_and_tail_arithmetic(self):
        # 5000 tokens without separators: floor(5000/2048)=2 chunks, tail 904
        packed = pack(_corpus([5000]), chunk_len=2048, use_separator=False, vocab_size=10)
        assert len(packed.chunks) == 2
        assert packed.dropped_tail == 904
        assert packed.vocab_size == 10
        assert packed.separator_id is None

    def test_exact_fit(self):
        packed = pack(_corpus([2048]), chunk_len=2048, use_separator=False, vocab_size=10)
        assert len(packed.chunks) == 1
        assert packed.dropped_tail == 0

    def test_default_chunk_len_is_2048(self):
        packed = pack(_corpus([4096]), use_separator=False, vocab_size=10)
        assert packed.chunk_len == 2048

    def test_separator_appends_k_and_grows_vocab(self):
        packed = pack(_corpus([3, 4]), chunk_len=3, use_separator=True, vocab_size=10)
        # stream: 3 units, sep(10), 4 units, sep(10) -> 9 tokens, 3 chunks
        assert packed.separator_id == 10
        assert packed.vocab_size == 11
        stream = packed.token_stream()
        assert stream[3] == 10
        assert len(packed.chunks) == 3 and packed.dropped_tail == 0

    def test_order_preservation_and_conservation(self):
        seqs = _corpus([7, 5, 9], vocab=6)
        packed = pack(seqs, chunk_len=4, use_separator=True, vocab_size=6)
        expect = []
        for seq in seqs:
            expect.extend(seq.units)
            expect.append(6)
        n = len(packed.chunks) * packed.chunk_len
        assert packed.token_stream() == expect[:n]
        assert n + packed.dropped_tail == len(expect)

    @settings(max_examples=60, deadline=None)
    @given(
        counts=st.lists(st.integers(0, 30), min_size=1, max_size=8),
        chunk_len=st.integers(1, 40),
        sep=st.booleans(),
    )
    def test_conservation_property(self, counts, chunk_len, sep):
        seqs = _corpus(counts, vocab=5)
        packed = pack(seqs, chunk_len=chunk_len, use_separator=sep, vocab_size=5)
        total = sum(counts) + (len(counts) if sep else 0)
        assert len(packed.chunks) * chunk_len + packed.dropped_tail == total
        assert packed.dropped_tail < chunk_len
        for chunk in packed.chunks:
            assert len(chunk) == chunk_len
            assert all(0 <= u < packed.vocab_size for u in chunk)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            pack([], chunk_len=4, vocab_size=4)

    def test_bad_chunk_len_rejected(self):
        with pytest.raises(ValueError, match="chunk_len"):
            pack(_corpus([4]), chunk_len=0, vocab_size=10)

    def test_out_of_vocab_unit_rejected(self):
        seqs = [UnitSequence("u", (0, 11))]
        with pytest.raises(ValueError, match="vocab"):
            pack(seqs, chunk_len=2, use_separator=False, vocab_size=10)


class TestPackedFile:
    def test_round_trip(self, tmp_path):
        packed = pack(_corpus([10, 12]), chunk_len=5, use_separator=True, vocab_size=10)
        path = tmp_path / "packed.txt"
        write_packed(packed, path)
        header = path.read_text().splitlines()[0]
        assert header == "#chunk_len=5;vocab=11;sep=10"
        back = read_packed(path)
        assert back.chunks == packed.chunks
        assert back.vocab_size == packed.vocab_size
        assert back.separator_id == packed.separator_id

    def test_no_separator_header(self, tmp_path):
        packed = pack(_corpus([6]), chunk_len=3, use_separator=False, vocab_size=10)
        write_packed(packed, tmp_path / "p.txt")
        back = read_packed(tmp_path / "p.txt")
        assert back.separator_id is None

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 3\n")
        with pytest.raises(ValueError, match="header"):
            read_packed(path)

    def test_invariants_on_construction(self):
        with pytest.raises(ValueError, match="chunk_len"):
            PackedDataset(3, ((1, 2),), vocab_size=5, separator_id=None, dropped_tail=0)
        with pytest.raises(ValueError, match="vocab"):
            PackedDataset(2, ((1, 9),), vocab_size=5, separator_id=None, dropped_tail=0)
