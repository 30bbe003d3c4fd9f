import unittest

import numpy as np

from engine.network import build_network
from helpers.errors import ContractError
from py_models.freeze_mask import FreezeMask
from tailoring.plan import make_plan, snapshot
from tests.fixtures import mlp_spec, small_mlp


class TestTailorPlan(unittest.TestCase):

    def test_large_tensor_indices_are_distinct_and_sorted(self):
        state = build_network(mlp_spec([16, 32, 3]))
        plan = make_plan(state, tailored_size=64, seed=5)
        idx = plan.indices[0]
        self.assertEqual(len(idx), 64)
        self.assertEqual(len(set(idx.tolist())), 64)
        self.assertTrue(np.all(np.diff(idx) > 0))
        self.assertLess(idx.max(), 16 * 32)

    def test_small_tensor_cycles(self):
        state = small_mlp()  # last unit weight is 8 x 3
        plan = make_plan(state, tailored_size=50)
        np.testing.assert_array_equal(plan.indices[2], np.resize(np.arange(24), 50))

    def test_plan_is_seeded(self):
        state = build_network(mlp_spec([16, 32, 3]))
        a, b, c = make_plan(state, 64, 1), make_plan(state, 64, 1), make_plan(state, 64, 2)
        np.testing.assert_array_equal(a.indices[0], b.indices[0])
        self.assertFalse(np.array_equal(a.indices[0], c.indices[0]))

    def test_snapshot_reads_current_weights(self):
        state = small_mlp()
        plan = make_plan(state, tailored_size=8)
        snaps = snapshot(state, plan, 3, FreezeMask(frozen={1: 0}, total_units=3))
        self.assertEqual([s.unit_id for s in snaps], [0, 2])
        self.assertTrue(all(s.timestamp == 3 for s in snaps))
        np.testing.assert_array_equal(snaps[0].values, state.params[0]['0.weight'].reshape(-1)[plan.indices[0]])
        self.assertEqual(snaps[0].values.dtype, np.float32)

    def test_invalid_size(self):
        with self.assertRaises(ContractError):
            make_plan(small_mlp(), tailored_size=0)


if __name__ == '__main__':
    unittest.main()
