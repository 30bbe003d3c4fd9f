import struct
import tempfile
import unittest
from pathlib import Path

import numpy as np

from helpers.errors import FormatError
from task_providers.idx import load_idx, read_idx, write_idx
from task_providers.idx.idx_provider import IMAGES_MAGIC, LABELS_MAGIC


class TestIdx(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_four_images(self):
        images = np.zeros((4, 8, 8), dtype=np.uint8)
        images[0, 0, 0] = 255
        images[3, 7, 7] = 51
        path = write_idx(self.dir / 'img.idx3-ubyte', images)
        (magic,) = struct.unpack_from('>I', path.read_bytes())
        self.assertEqual(magic, IMAGES_MAGIC)
        x = load_idx(path)
        self.assertEqual(x.shape, (4, 1, 8, 8))
        self.assertEqual(x.dtype, np.float32)
        self.assertEqual(x[0, 0, 0, 0], 1.0)
        self.assertAlmostEqual(float(x[3, 0, 7, 7]), 0.2)

    def test_labels(self):
        path = write_idx(self.dir / 'lbl.idx1-ubyte', np.array([3, 1, 4, 1]))
        y = load_idx(path)
        np.testing.assert_array_equal(y, [3, 1, 4, 1])
        self.assertEqual(y.dtype, np.int64)
        self.assertEqual(read_idx(path, LABELS_MAGIC).dtype, np.uint8)

    def test_truncated_payload(self):
        path = write_idx(self.dir / 'img.idx3-ubyte', np.zeros((4, 8, 8), dtype=np.uint8))
        path.write_bytes(path.read_bytes()[:-1])
        with self.assertRaises(FormatError):
            load_idx(path)

    def test_wrong_magic(self):
        path = self.dir / 'bad'
        path.write_bytes(struct.pack('>I', 0x00000D03) + struct.pack('>3I', 1, 1, 1) + b'\x00' * 4)
        with self.assertRaises(FormatError):
            load_idx(path)
        labels = write_idx(self.dir / 'lbl', np.array([1]))
        with self.assertRaises(FormatError):
            read_idx(labels, IMAGES_MAGIC)


if __name__ == '__main__':
    unittest.main()
