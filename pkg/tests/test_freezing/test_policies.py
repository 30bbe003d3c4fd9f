import unittest

import numpy as np

from freezing.base.policy_base import RunContext, apply_mask
from freezing.implementations.gradnorm.policy import GradNormPolicy, change_rate, gradnorm_decide
from freezing.implementations.linear.models import LinearFreezeConfig
from freezing.implementations.linear.policy import LinearFreezingPolicy, linear_decide, linear_lr, zero_times
from freezing.implementations.smart.policy import SmartFreezingPolicy, smart_decide
from freezing.schedules import cosine_lr, global_lr
from helpers.errors import ConfigError, ContractError, DimensionMismatchError
from predictor.model import AttentionPredictor, PredictorDims, init_params
from py_models.configs import GradNormPolicyConfig, LinearPolicyConfig, SmartPolicyConfig, TrainingConfig
from py_models.freeze_mask import FreezeMask
from tailoring.history import HistoryBuffer
from tailoring.plan import WeightSnapshot
from tests.fixtures import random_batch, small_mlp
from train_helper import TrainHelper

DIMS = PredictorDims(encoder=[6, 5, 4], head=[4, 3, 2])


def fixed_predictor(freeze: bool, window: int = 30) -> AttentionPredictor:
    """A zero predictor ties and keeps training; a positive freeze bias makes it always freeze"""
    params = init_params(DIMS, zero=True)
    if freeze:
        params.tensors['z.1.bias'][:] = [0.0, 1.0]
    return AttentionPredictor(params=params, window=window)


def context(total=12, ipe=4, units=3, lr=0.1) -> RunContext:
    return RunContext(num_units=units, iterations_per_epoch=ipe, total_iterations=total, base_lr=lr)


def train(policy, epochs=3, n=64, batch_size=16, seed=0):
    state = small_mlp(seed)
    x, y = random_batch(state, n=n, seed=seed)
    fit = TrainHelper(state).fit(x, y, TrainingConfig(epochs=epochs, batch_size=batch_size, lr=0.1), policy)
    return state, fit


class TestSchedules(unittest.TestCase):

    def test_cosine(self):
        self.assertEqual(cosine_lr(1.0, 0, 10), 1.0)
        self.assertAlmostEqual(cosine_lr(1.0, 5, 10), 0.5)
        self.assertEqual(cosine_lr(1.0, 10, 10), 0.0)
        self.assertEqual(cosine_lr(1.0, 3, 0), 0.0)
        self.assertEqual(global_lr('constant', 0.3, 99, 10), 0.3)
        with self.assertRaises(ValueError):
            global_lr('step', 0.3, 1, 10)


class TestApplyMask(unittest.TestCase):

    def test_union_stamped_with_iteration(self):
        old = FreezeMask(frozen={0: 3}, total_units=4)
        new = apply_mask(old, {0, 2}, 7)
        self.assertEqual(new.frozen, {0: 3, 2: 7})
        self.assertEqual(old.frozen, {0: 3})

    def test_dropping_a_unit_is_rejected(self):
        old = FreezeMask(frozen={0: 3, 1: 3}, total_units=4)
        with self.assertRaises(ContractError):
            apply_mask(old, FreezeMask(frozen={1: 3}, total_units=4), 5)

    def test_releases_history_of_new_units(self):
        buffers = HistoryBuffer(window=3, tailored_size=2)
        buffers.push([WeightSnapshot(unit_id=u, timestamp=0, values=np.zeros(2)) for u in range(3)])
        apply_mask(FreezeMask(total_units=3), {1}, 4, buffers)
        self.assertEqual(buffers.units, [0, 2])


class TestLinearFreezing(unittest.TestCase):

    def test_zero_times_and_rates(self):
        cfg = LinearFreezeConfig(t0=0.5, total_iterations=100, base_lr=1.0, num_units=3)
        self.assertEqual(zero_times(cfg), [50.0, 75.0, 100.0])
        self.assertEqual(linear_lr(cfg, 0, 0), 1.0)
        self.assertAlmostEqual(linear_lr(cfg, 0, 25), 0.5)
        self.assertEqual(linear_lr(cfg, 0, 50), 0.0)
        self.assertAlmostEqual(linear_lr(cfg, 2, 50), 0.5)

    def test_decide_stamps_ceiling(self):
        cfg = LinearFreezeConfig(t0=0.3, total_iterations=10, base_lr=1.0, num_units=3)
        self.assertEqual(linear_decide(cfg, 6).frozen, {0: 3})
        self.assertEqual(linear_decide(cfg, 10).frozen, {0: 3, 1: 7, 2: 10})

    def test_units_freeze_in_order_at_their_zero_points(self):
        # 4 iterations per epoch, 12 in total, t_i = 4.8, 8.4, 12
        policy = LinearFreezingPolicy(LinearPolicyConfig(t0=0.4), context())
        _, fit = train(policy)
        self.assertEqual([(e.unit_id, e.iteration_frozen) for e in fit.events], [(0, 5), (1, 9)])
        self.assertEqual([r.frozen_units for r in fit.ledger.rows], [0] * 5 + [1] * 4 + [2] * 3)

    def test_frozen_units_stop_changing(self):
        policy = LinearFreezingPolicy(LinearPolicyConfig(t0=0.4), context())
        state, fit = train(policy)
        from train_helper import unit_digest
        for event in fit.events:
            self.assertEqual(unit_digest(state, event.unit_id), event.param_digest)


class TestGradNormFreezing(unittest.TestCase):

    def test_change_rate(self):
        self.assertAlmostEqual(change_rate(2.0, 3.0), 0.5)
        self.assertEqual(change_rate(0.0, 1.0), 1e12)

    def test_only_a_frozen_prefix_grows(self):
        norms = {0: [1.0, 1.01], 1: [1.0, 2.0], 2: [1.0, 1.001]}
        mask = FreezeMask(total_units=3)
        self.assertEqual(gradnorm_decide(norms, mask, 0.67), {0})
        self.assertEqual(gradnorm_decide(norms, mask, 0.5), set())
        self.assertEqual(gradnorm_decide({0: [1.0]}, mask, 0.9), set())

    def test_eval_interval(self):
        self.assertEqual(GradNormPolicy(GradNormPolicyConfig(), context(ipe=10)).eval_interval, 2)
        self.assertEqual(GradNormPolicy(GradNormPolicyConfig(intervals_per_epoch=8), context(ipe=4)).eval_interval, 1)

    def test_run_freezes_front_first(self):
        policy = GradNormPolicy(GradNormPolicyConfig(percentile=0.9), context())
        _, fit = train(policy)
        frozen = [e.unit_id for e in fit.events]
        self.assertEqual(frozen, list(range(len(frozen))))
        self.assertEqual(fit.ledger.predictor_flops, 0)


class TestSmartFreezing(unittest.TestCase):

    def params(self, **kwargs):
        data = {'tailored_size': 6, 'window': 4, 'min_history': 2}
        data.update(kwargs)
        return SmartPolicyConfig(**data)

    def test_needs_predictor(self):
        with self.assertRaises(ConfigError):
            SmartFreezingPolicy(self.params(), context())
        with self.assertRaises(ConfigError):
            smart_decide(None, HistoryBuffer(2, 6), FreezeMask(total_units=1))

    def test_tailored_size_must_match(self):
        with self.assertRaises(DimensionMismatchError):
            SmartFreezingPolicy(self.params(tailored_size=8), context(), predictor=fixed_predictor(True))

    def test_default_intervals(self):
        policy = SmartFreezingPolicy(self.params(), context(ipe=20), predictor=fixed_predictor(False))
        self.assertEqual((policy.freeze_interval, policy.snapshot_interval), (5, 5))

    def test_waits_for_min_history(self):
        buffers = HistoryBuffer(window=4, tailored_size=6)
        buffers.push([WeightSnapshot(unit_id=0, timestamp=0, values=np.ones(6))])
        decision = smart_decide(fixed_predictor(True), buffers, FreezeMask(total_units=2), min_history=2)
        self.assertEqual(decision.units, set())
        self.assertEqual(decision.predictor_flops, 0)

    def test_any_unit_may_freeze(self):
        buffers = HistoryBuffer(window=4, tailored_size=6)
        for t in range(2):
            buffers.push([WeightSnapshot(unit_id=2, timestamp=t, values=np.ones(6))])
        predictor = fixed_predictor(True)
        decision = smart_decide(predictor, buffers, FreezeMask(total_units=3), min_history=2)
        self.assertEqual(decision.units, {2})
        self.assertGreater(decision.confidences[2], 0.5)
        self.assertEqual(decision.predictor_flops, predictor.inference_flops(2))

    def test_run_with_freezing_predictor(self):
        policy = SmartFreezingPolicy(self.params(freeze_interval=1), context(), predictor=fixed_predictor(True))
        _, fit = train(policy)
        self.assertEqual([(e.unit_id, e.iteration_frozen) for e in fit.events], [(0, 1), (1, 1), (2, 1)])
        self.assertTrue(all(e.policy == 'smart' and e.confidence > 0.5 for e in fit.events))
        self.assertGreater(fit.ledger.rows[1].predictor_flops, 0)
        self.assertTrue(all(r.bwd_flops == 0 for r in fit.ledger.rows[1:]))
        self.assertEqual(len(policy.buffers), 0)

    def test_run_with_cautious_predictor(self):
        policy = SmartFreezingPolicy(self.params(), context(), predictor=fixed_predictor(False))
        _, fit = train(policy)
        self.assertEqual(fit.events, [])
        self.assertGreater(fit.ledger.predictor_flops, 0)
        self.assertEqual(policy.buffers.count(0), 4)


if __name__ == '__main__':
    unittest.main()
