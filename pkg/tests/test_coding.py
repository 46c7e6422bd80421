import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakchaos import coding
from weakchaos.errors import DomainError, MalformedStreamError
from weakchaos.symbolic import SymbolString

from conftest import REFERENCE_DIGITS


def bits_text(arr):
    return "".join(str(int(b)) for b in arr)


class TestNatCode:
    # the fixed codeword table; 8 and 9 pin the payload bit order (MSB first)
    TABLE = {0: "0", 1: "100", 2: "101", 3: "11000", 6: "11011",
             8: "1110001", 9: "1110010"}

    @pytest.mark.parametrize("value,expected", sorted(TABLE.items()))
    def test_codeword_table(self, value, expected):
        assert bits_text(coding.prefix_encode_nat(value)) == expected

    def test_round_trip_exhaustive_small(self):
        for v in range(4096):
            bits = coding.prefix_encode_nat(v)
            back, pos = coding.prefix_decode_nat(bits)
            assert back == v and pos == bits.shape[0]

    def test_round_trip_sampled_to_1e6(self):
        rng = np.random.default_rng(0)
        values = np.concatenate([
            rng.integers(0, 10**6 + 1, 2000),
            [2**k + d for k in range(1, 20) for d in (-2, -1, 0, 1)],
            [10**6],
        ])
        for v in values:
            v = int(v)
            bits = coding.prefix_encode_nat(v)
            assert coding.prefix_decode_nat(bits)[0] == v

    def test_length_law(self):
        # oracle: integer bit_length, independent of the frexp-based helper
        rng = np.random.default_rng(1)
        for v in map(int, rng.integers(0, 10**6 + 1, 20000)):
            expected = 2 * ((v + 1).bit_length() - 1) + 1
            assert coding.prefix_encode_nat(v).shape[0] == expected
            assert coding.nat_code_length(v) == expected

    def test_prefix_free_sampled(self):
        words = sorted(bits_text(coding.prefix_encode_nat(v))
                       for v in range(2048))
        for a, b in zip(words, words[1:]):
            assert not b.startswith(a)

    def test_decode_truncated(self):
        bits = coding.prefix_encode_nat(9)[:-2]
        with pytest.raises(MalformedStreamError):
            coding.prefix_decode_nat(bits)


class TestRunLength:
    def test_reference_digits(self, reference_string):
        rs = coding.run_length(reference_string)
        assert rs.digits() == REFERENCE_DIGITS
        assert np.all(rs.symbols == 1)
        assert rs.trailing_zeros == 0
        assert rs.n == 30

    def test_multi_symbol(self):
        # 00ABB000A over {0, A, B} with A=1, B=2 -> (2,A)(0,B)(0,B)(3,A)
        omega = SymbolString(np.array([0, 0, 1, 2, 2, 0, 0, 0, 1],
                                      dtype=np.int16), 3)
        rs = coding.run_length(omega)
        assert rs.digits() == (2, 0, 0, 3)
        assert tuple(rs.symbols) == (1, 2, 2, 1)
        assert rs.trailing_zeros == 0

    def test_all_zero(self):
        rs = coding.run_length(SymbolString(np.zeros(4, np.int16), 2))
        assert rs.digits() == () and rs.trailing_zeros == 4

    def test_reconstructed_length(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(0, 200))
            omega = SymbolString(rng.integers(0, 3, n).astype(np.int16), 3)
            assert coding.run_length(omega).n == n


class TestEncodeDecode:
    def test_reference_body(self, reference_string):
        stream = coding.encode(reference_string)
        body = bits_text(stream.bits[stream.header_bits:])
        assert body == "11000" "1110001" "0" "101" "1110010" "0" "100"
        assert stream.body_bits == 27
        assert coding.decode(stream) == reference_string

    def test_multi_symbol_body(self):
        # digits (2,A)(0,B)(0,B)(3,A) with 1-bit symbols: A->0, B->1
        omega = SymbolString(np.array([0, 0, 1, 2, 2, 0, 0, 0, 1],
                                      dtype=np.int16), 3)
        stream = coding.encode(omega)
        body = bits_text(stream.bits[stream.header_bits:])
        assert body == "101" "0" "0" "1" "0" "1" "11000" "0"
        assert coding.decode(stream) == omega

    def test_all_zero_string(self):
        omega = SymbolString(np.zeros(4, np.int16), 2)
        stream = coding.encode(omega)
        assert stream.body_bits == 0
        assert coding.decode(stream) == omega

    def test_empty_string(self):
        omega = SymbolString(np.zeros(0, np.int16), 2)
        assert coding.decode(coding.encode(omega)) == omega

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_round_trip_property(self, data):
        alphabet = data.draw(st.integers(2, 8))
        symbols = data.draw(st.lists(st.integers(0, alphabet - 1),
                                     max_size=300))
        omega = SymbolString(np.asarray(symbols, dtype=np.int16), alphabet)
        assert coding.decode(coding.encode(omega)) == omega

    def test_decode_header_mismatch(self, reference_string):
        stream = coding.encode(reference_string)
        stream.n = 29
        with pytest.raises(MalformedStreamError):
            coding.decode(stream)

    def test_decode_overflowing_symbols(self):
        # run of 30 zeros coded for n=10 must overflow the header
        omega = SymbolString(np.array([0] * 8 + [1, 1], np.int16), 2)
        stream = coding.encode(omega)
        stream.bits = np.concatenate([
            stream.bits, coding.prefix_encode_nat(3)])
        with pytest.raises(MalformedStreamError):
            coding.decode(stream)

    def test_decode_bad_symbol_index(self):
        omega = SymbolString(np.array([0, 2, 0], np.int16), 3)
        stream = coding.encode(omega)
        # symbol field is 1 bit wide; flip it to 1 -> symbol 2 (valid),
        # then widen the alphabet mismatch by declaring a 4-letter alphabet
        # with 2-bit symbols: the stream no longer parses consistently
        stream.alphabet_size = 5
        with pytest.raises(MalformedStreamError):
            coding.decode(stream)


class TestInformation:
    def test_reference_value(self, reference_string):
        assert coding.information_length(reference_string) == 27

    def test_all_zero(self):
        assert coding.information_length(
            SymbolString(np.zeros(100, np.int16), 2)) == 0

    def test_all_ones(self):
        omega = SymbolString(np.ones(37, np.int16), 2)
        assert coding.information_length(omega) == 37

    def test_matches_encode(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(0, 400))
            alphabet = int(rng.integers(2, 9))
            omega = SymbolString(rng.integers(0, alphabet, n).astype(np.int16),
                                 alphabet)
            stream = coding.encode(omega)
            assert coding.information_length(omega) == stream.body_bits


class TestBounds:
    def test_reference(self, reference_string):
        check = coding.verify_bounds(reference_string)
        assert check.information == 27
        assert check.lower == pytest.approx(16.1699, abs=1e-3)
        assert check.upper == pytest.approx(36.3935, abs=1e-3)
        assert check.ok

    def test_all_ones(self):
        check = coding.verify_bounds(SymbolString(np.ones(64, np.int16), 2))
        assert check.information == 64 and check.ok

    def test_binary_only(self):
        with pytest.raises(DomainError):
            coding.verify_bounds(SymbolString(np.zeros(3, np.int16), 3))

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 1), max_size=600))
    def test_sandwich_property(self, bits):
        omega = SymbolString(np.asarray(bits, dtype=np.int16), 2)
        assert coding.verify_bounds(omega).ok

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_multi_alphabet_upper_bound(self, data):
        # every orbit obeys I <= N + 2N log2(n/N) + N ceil(log2(#A - 1))
        # up to the additive slack, and I >= N (one bit per passage)
        alphabet = data.draw(st.integers(2, 8))
        symbols = data.draw(st.lists(st.integers(0, alphabet - 1),
                                     min_size=1, max_size=400))
        omega = SymbolString(np.asarray(symbols, dtype=np.int16), alphabet)
        n = len(omega)
        passages = int(np.count_nonzero(omega.symbols))
        info = coding.information_length(omega)
        if passages == 0:
            assert info == 0
            return
        assert info >= passages
        width = coding.symbol_bit_width(alphabet)
        slack = 2 * math.floor(math.log2(n + 1)) + 3
        upper = (passages + 2 * passages * math.log2(n / passages)
                 + passages * width + slack)
        assert info <= upper


class TestTruncation:
    def test_reference(self, reference_string):
        rs = coding.run_length(reference_string)
        assert coding.trunc_k(rs, 4).digits() == (3, 4, 0, 2, 4, 0, 1)

    def test_identity_when_k_large(self, reference_string):
        rs = coding.run_length(reference_string)
        assert coding.trunc_k(rs, 9).digits() == REFERENCE_DIGITS

    def test_k_one(self, reference_string):
        rs = coding.trunc_k(coding.run_length(reference_string), 1)
        assert set(rs.digits()) <= {0, 1}

    def test_k_validation(self, reference_string):
        with pytest.raises(DomainError):
            coding.trunc_k(coding.run_length(reference_string), 0)


class TestStreamFiles:
    def test_round_trip(self, tmp_path, reference_string):
        stream = coding.encode(reference_string)
        path = tmp_path / "ref.wcc"
        coding.write_stream(stream, path)
        back = coding.read_stream(path)
        assert np.array_equal(back.bits, stream.bits)
        assert (back.n, back.alphabet_size, back.runs) == (30, 2, 7)
        assert coding.decode(back) == reference_string

    def test_trailing_zero_disambiguation(self, tmp_path):
        # '10' (one run, one trailing zero) and '11' (two runs) must produce
        # different files even after zero padding to the byte boundary
        a = SymbolString(np.array([1, 0], np.int16), 2)
        b = SymbolString(np.array([1, 1], np.int16), 2)
        pa, pb = tmp_path / "a.wcc", tmp_path / "b.wcc"
        coding.write_stream(coding.encode(a), pa)
        coding.write_stream(coding.encode(b), pb)
        assert pa.read_bytes() != pb.read_bytes()
        assert coding.decode(coding.read_stream(pa)) == a
        assert coding.decode(coding.read_stream(pb)) == b

    def test_file_round_trip_random(self, tmp_path):
        rng = np.random.default_rng(4)
        for i in range(25):
            n = int(rng.integers(0, 300))
            alphabet = int(rng.integers(2, 9))
            omega = SymbolString(rng.integers(0, alphabet, n).astype(np.int16),
                                 alphabet)
            path = tmp_path / f"s{i}.wcc"
            coding.write_stream(coding.encode(omega), path)
            assert coding.decode(coding.read_stream(path)) == omega

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wcc"
        path.write_bytes(b"NOPE" + bytes(10))
        with pytest.raises(MalformedStreamError):
            coding.read_stream(path)


class TestBatch:
    def test_matches_scalar(self, kernels, monkeypatch):
        import weakchaos._kernels as K

        monkeypatch.setattr(K, "active", kernels)
        rng = np.random.default_rng(5)
        from conftest import random_symbol_strings

        strings = random_symbol_strings(rng, 120, max_len=400)
        streams = coding.encode_many(strings)
        for s, stream in zip(strings, streams):
            ref = coding.encode(s)
            assert np.array_equal(stream.bits, ref.bits)
            assert stream.runs == ref.runs
        back = coding.decode_many(streams)
        assert all(a == b for a, b in zip(back, strings))

    def test_batch_malformed(self, kernels):
        bits = np.array([1, 1, 1], dtype=np.uint8)  # unary runs off the end
        offs = np.array([0, 3], dtype=np.int64)
        with pytest.raises(MalformedStreamError):
            kernels.decode_batch(bits, offs, np.array([5], np.int64),
                                 np.array([2], np.int16))

    def test_batch_empty(self):
        assert coding.encode_many([]) == []
        assert coding.decode_many([]) == []
