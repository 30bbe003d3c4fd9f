import itertools
import tempfile
import unittest
from pathlib import Path

import numpy as np

from engine.layers import NetworkSpec
from engine.network import default_units
from helpers.cost_ledger import (CostLedger, accumulate, format_ledger_summary, iteration_cost, layer_costs,
                                 ledger_totals_from_trace, read_trace_csv, write_trace_csv)
from helpers.errors import ContractError
from tests.fixtures import mlp_spec


def random_spec(rng: np.random.Generator) -> NetworkSpec:
    """A sequential net of 1..6 units, conv blocks first then dense blocks"""
    n_units = int(rng.integers(1, 7))
    n_conv = int(rng.integers(0, n_units))
    channels, size = int(rng.integers(1, 4)), int(rng.integers(5, 9))
    layers = []
    for _ in range(n_conv):
        out = int(rng.integers(1, 5))
        layers.append({'kind': 'conv2d', 'in_channels': channels, 'out_channels': out, 'kernel': 3, 'padding': 1})
        if rng.random() < 0.5:
            layers.append({'kind': 'norm', 'channels': out})
        if rng.random() < 0.7:
            layers.append({'kind': 'relu'})
        channels = out
    features = channels * size * size if n_conv else int(rng.integers(2, 9))
    if n_conv:
        layers.append({'kind': 'flatten'})
    for i in range(n_units - n_conv):
        out = int(rng.integers(2, 9))
        layers.append({'kind': 'dense', 'in_features': features, 'out_features': out})
        if i < n_units - n_conv - 1:
            if rng.random() < 0.5:
                layers.append({'kind': 'norm', 'channels': out})
            if rng.random() < 0.7:
                layers.append({'kind': 'relu'})
        features = out
    input_shape = [int(layers[0]['in_channels']), size, size] if n_conv else [int(layers[0]['in_features'])]
    return NetworkSpec.model_validate({'input_shape': input_shape, 'layers': layers})


def shapes_of(spec):
    shape = tuple(spec.input_shape)
    shapes = []
    for layer in spec.layers:
        out = layer.output_shape(shape)
        shapes.append((shape, out))
        shape = out
    return shapes


def oracle_cost(spec, batch, frozen):
    """
    Walk the ops of one iteration by hand: forward through every layer,
    backward from the loss down to the earliest trainable layer.
    """
    units = default_units(spec)
    owner = {i: u.unit_id for u in units for i in u.layer_indices}
    shapes = shapes_of(spec)
    trainable = [i for i in owner if owner[i] not in frozen]
    first = min(trainable) if trainable else None
    fwd = bwd = act = grad = 0
    for i, layer in enumerate(spec.layers):
        (in_shape, out_shape) = shapes[i]
        n_in = batch * int(np.prod(in_shape))
        if layer.kind == 'dense':
            macs = batch * layer.in_features * layer.out_features
            params = layer.in_features * layer.out_features + layer.out_features
        elif layer.kind == 'conv2d':
            macs = batch * out_shape[1] * out_shape[2] * layer.in_channels * 9 * layer.out_channels
            params = layer.out_channels * layer.in_channels * 9 + layer.out_channels
        else:
            macs, params = 0, 2 * layer.channels if layer.kind == 'norm' else 0
        if layer.kind in ('dense', 'conv2d'):
            fwd += 2 * macs
        elif layer.kind == 'norm':
            fwd += 2 * n_in
        is_trainable = i in owner and owner[i] not in frozen
        flows_down = first is not None and i > first
        if is_trainable:
            bwd += 2 * macs if layer.kind in ('dense', 'conv2d') else 2 * n_in
            grad += 4 * params
            act += 4 * n_in
        if flows_down:
            if layer.kind in ('dense', 'conv2d'):
                bwd += 2 * macs
            elif layer.kind == 'norm':
                bwd += n_in
            elif layer.kind == 'relu':
                act += 4 * n_in
    return fwd, bwd, act, grad


class TestCostModel(unittest.TestCase):

    def test_matches_op_walking_oracle_on_every_mask(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            spec = random_spec(rng)
            n_units = len(default_units(spec))
            costs = layer_costs(spec, 4)
            for bits in itertools.product((0, 1), repeat=n_units):
                frozen = {u for u, b in enumerate(bits) if b}
                cost = iteration_cost(costs, frozen)
                self.assertEqual((cost.fwd, cost.bwd, cost.act_bytes, cost.grad_bytes),
                                 oracle_cost(spec, 4, frozen), f"{spec} frozen={frozen}")

    def test_savings_are_monotone(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            spec = random_spec(rng)
            n_units = len(default_units(spec))
            costs = layer_costs(spec, 2)
            masks = [frozenset(u for u, b in enumerate(bits) if b)
                     for bits in itertools.product((0, 1), repeat=n_units)]
            totals = {m: iteration_cost(costs, m) for m in masks}
            for small, large in itertools.product(masks, masks):
                if small <= large:
                    self.assertGreaterEqual(totals[small].bwd, totals[large].bwd)
                    self.assertGreaterEqual(totals[small].act_bytes, totals[large].act_bytes)
                    self.assertEqual(totals[small].fwd, totals[large].fwd)

    def test_all_frozen_has_no_backward(self):
        spec = mlp_spec([4, 8, 3])
        cost = iteration_cost(layer_costs(spec, 8), {0, 1})
        self.assertEqual(cost.bwd, 0)
        self.assertEqual(cost.act_bytes, 0)

    def test_full_dense_closed_form(self):
        spec = mlp_spec([4, 8, 3], norm=False)
        cost = iteration_cost(layer_costs(spec, 10), set())
        self.assertEqual(cost.fwd, 2 * 10 * (4 * 8 + 8 * 3))
        # first layer computes no input gradient
        self.assertEqual(cost.bwd, 2 * 10 * (4 * 8 + 8 * 3) + 2 * 10 * 8 * 3)

    def test_unknown_unit(self):
        with self.assertRaises(ContractError):
            iteration_cost(layer_costs(mlp_spec([4, 3]), 1), {5})


class TestLedger(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_trace_closure(self):
        costs = layer_costs(mlp_spec([4, 8, 3]), 16)
        ledger = CostLedger()
        for t, frozen in enumerate([set(), set(), {0}, {0}, {0, 1}]):
            accumulate(ledger, iteration_cost(costs, frozen), predictor_cost=t * 10, iteration=t,
                       frozen_units=len(frozen), train_loss=1.0 / (t + 1))
        path = write_trace_csv(ledger, Path(self.tmp.name) / 'trace.csv')
        totals = ledger_totals_from_trace(read_trace_csv(path))
        self.assertEqual(totals, {'fwd_flops': ledger.fwd_flops, 'bwd_flops': ledger.bwd_flops,
                                  'predictor_flops': ledger.predictor_flops})
        self.assertEqual(ledger.predictor_flops, 100)
        self.assertEqual(ledger.total_flops, ledger.fwd_flops + ledger.bwd_flops + 100)
        self.assertEqual(list(read_trace_csv(path).columns),
                         ['iteration', 'epoch', 'fwd_flops', 'bwd_flops', 'predictor_flops', 'act_bytes',
                          'frozen_units', 'train_loss'])

    def test_peaks(self):
        costs = layer_costs(mlp_spec([4, 8, 3]), 16)
        ledger = CostLedger()
        full, frozen = iteration_cost(costs, set()), iteration_cost(costs, {0})
        accumulate(ledger, frozen)
        accumulate(ledger, full)
        self.assertEqual(ledger.peak_act_bytes, full.act_bytes)
        self.assertEqual(ledger.peak_memory_bytes, full.act_bytes + full.grad_bytes)

    def test_summary_table(self):
        ledger = CostLedger()
        accumulate(ledger, iteration_cost(layer_costs(mlp_spec([4, 3]), 2), set()))
        text = format_ledger_summary(ledger)
        self.assertIn('Backward FLOPs', text)
        self.assertIn('Total TFLOPs', text)


if __name__ == '__main__':
    unittest.main()
