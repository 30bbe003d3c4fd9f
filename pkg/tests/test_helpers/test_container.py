import struct
import unittest

import numpy as np

from helpers.container import (MAGIC, pack_records, pack_tensors, read_tensors, tensor_digest, unpack,
                               unpack_records)
from helpers.errors import FormatError


class TestContainer(unittest.TestCase):

    def test_tensor_round_trip(self):
        tensors = {'a': np.arange(6, dtype=np.float32).reshape(2, 3), 'b': np.array([1.5], dtype=np.float32)}
        header, payload = unpack(pack_tensors('checkpoint', {'note': 1}, tensors), 'checkpoint')
        self.assertEqual(header['note'], 1)
        out = read_tensors(header, payload)
        for name, value in tensors.items():
            np.testing.assert_array_equal(out[name], value)

    def test_preamble_layout(self):
        blob = pack_tensors('checkpoint', {}, {})
        magic, version, header_len = struct.unpack_from('<4sII', blob)
        self.assertEqual((magic, version), (MAGIC, 1))
        self.assertEqual(len(blob), 12 + header_len)

    def test_wrong_kind(self):
        with self.assertRaises(FormatError):
            unpack(pack_tensors('predictor', {}, {}), 'checkpoint')

    def test_bad_version(self):
        blob = bytearray(pack_tensors('checkpoint', {}, {}))
        blob[4:8] = struct.pack('<I', 9)
        with self.assertRaises(FormatError):
            unpack(bytes(blob))

    def test_truncated_tensor(self):
        header, payload = unpack(pack_tensors('checkpoint', {}, {'w': np.ones(4, dtype=np.float32)}))
        with self.assertRaises(FormatError):
            read_tensors(header, payload[:-1])

    def test_digest_depends_on_bytes(self):
        a = np.zeros(3, dtype=np.float32)
        self.assertEqual(tensor_digest(a), tensor_digest(a.copy()))
        self.assertNotEqual(tensor_digest(a), tensor_digest(a + 1))


class TestRecords(unittest.TestCase):

    def test_layout(self):
        seq = np.arange(6, dtype=np.float32).reshape(3, 2)
        payload = pack_records([(seq, 1)], tailored_size=2)
        self.assertEqual(len(payload), 2 + 6 * 4 + 1)
        self.assertEqual(struct.unpack_from('<H', payload)[0], 3)
        self.assertEqual(payload[-1], 1)

    def test_round_trip(self):
        records = [(np.full((k, 4), k, dtype=np.float32), k % 2) for k in range(1, 5)]
        out = unpack_records(pack_records(records, 4), 4, 4)
        for (seq, label), (seq2, label2) in zip(records, out):
            np.testing.assert_array_equal(seq, seq2)
            self.assertEqual(label, label2)

    def test_truncated_and_trailing(self):
        payload = pack_records([(np.ones((2, 3), dtype=np.float32), 0)], 3)
        with self.assertRaises(FormatError):
            unpack_records(payload[:-2], 1, 3)
        with self.assertRaises(FormatError):
            unpack_records(payload + b'\x00', 1, 3)

    def test_wrong_width(self):
        with self.assertRaises(FormatError):
            pack_records([(np.ones((2, 3), dtype=np.float32), 0)], 4)


if __name__ == '__main__':
    unittest.main()
