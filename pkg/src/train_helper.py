import logging
import math
from typing import Dict, Iterator, List, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from engine.network import Batch, Gradients, NetworkState, backward, forward, sgd_step, softmax_cross_entropy
from freezing.base.policy_base import PolicyBase, apply_mask
from helpers.container import tensor_digest
from helpers.cost_ledger import CostLedger, IterationCost, LayerCost, accumulate, iteration_cost, layer_costs
from helpers.errors import ContractError, DivergenceError
from py_models.configs import TrainingConfig
from py_models.freeze_mask import FreezeMask
from py_models.run_summary import FreezeEvent

logger = logging.getLogger('forensics')


class StepResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    loss: float
    grads: Gradients
    cost: IterationCost


class FitResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mask: FreezeMask
    ledger: CostLedger
    events: List[FreezeEvent] = Field(default_factory=list)
    epoch_losses: List[float] = Field(default_factory=list)

    @property
    def final_train_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else float('nan')


def unit_digest(state: NetworkState, unit_id: int) -> str:
    """sha256 over the unit's tensors in name order"""
    tensors = state.params[unit_id]
    return tensor_digest(np.concatenate([tensors[name].reshape(-1) for name in sorted(tensors)]))


def iterations_per_epoch(n_samples: int, batch_size: int) -> int:
    return max(1, math.ceil(n_samples / batch_size))


def iterate_batches(inputs: np.ndarray, labels: np.ndarray, batch_size: int, seed: int, epoch: int) -> Iterator[Batch]:
    """One epoch in a seeded order; the last batch may be short"""
    order = np.random.default_rng([seed, epoch]).permutation(len(inputs))
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        yield Batch(inputs=inputs[idx], labels=labels[idx])


class TrainHelper:
    """Runs masked training iterations on one network and keeps its cost ledger"""

    def __init__(self, state: NetworkState, ledger: Optional[CostLedger] = None):
        self.state = state
        self.ledger = ledger or CostLedger()
        self._costs: Dict[int, List[LayerCost]] = {}

    def costs_for(self, batch_size: int) -> List[LayerCost]:
        if batch_size not in self._costs:
            self._costs[batch_size] = layer_costs(self.state.spec, batch_size, self.state.units)
        return self._costs[batch_size]

    def train_step(self, batch: Batch, mask: FreezeMask, lr: Union[float, Mapping[int, float]], momentum: float,
                   iteration: int = 0, epoch: int = 0, predictor_flops: int = 0) -> StepResult:
        cache, logits = forward(self.state, batch, mask)
        loss, dlogits = softmax_cross_entropy(logits, batch.labels)
        if not np.isfinite(loss):
            raise DivergenceError(iteration, loss)
        grads = backward(self.state, cache, dlogits, mask)
        sgd_step(self.state, grads, lr, momentum, mask)

        cost = iteration_cost(self.costs_for(len(batch)), mask)
        if grads.flops != cost.bwd:
            raise ContractError(f"backward executed {grads.flops} FLOPs, the cost model charges {cost.bwd}")
        accumulate(self.ledger, cost, predictor_flops, iteration=iteration, epoch=epoch,
                   frozen_units=len(mask), train_loss=loss)
        return StepResult(loss=loss, grads=grads, cost=cost)

    def fit(self, x_train: np.ndarray, y_train: np.ndarray, training: TrainingConfig, policy: PolicyBase,
            data_seed: int = 0, mask: Optional[FreezeMask] = None) -> FitResult:
        """
        The training loop. Per iteration t: freezing stage (if due), learning
        rates, one step, then the policy observes the updated network.
        """
        mask = mask or FreezeMask(total_units=self.state.num_units)
        ipe = iterations_per_epoch(len(x_train), training.batch_size)
        result = FitResult(mask=mask, ledger=self.ledger)
        policy.start(self.state, mask)

        t = 0
        for epoch in range(training.epochs):
            losses = []
            for batch in iterate_batches(x_train, y_train, training.batch_size, data_seed, epoch):
                predictor_flops = 0
                if policy.is_stage(t):
                    decision = policy.decide(t, mask)
                    predictor_flops = decision.predictor_flops
                    new_mask = apply_mask(mask, decision.units, t, policy.buffers)
                    for unit_id in sorted(set(new_mask.frozen) - set(mask.frozen)):
                        result.events.append(FreezeEvent(
                            unit_id=unit_id, iteration_frozen=t, policy=policy.kind,
                            confidence=decision.confidences.get(unit_id),
                            param_digest=unit_digest(self.state, unit_id)))
                        logger.info(f"Froze unit {unit_id} at iteration {t} (epoch {epoch}, policy {policy.kind})")
                    mask = new_mask

                lrs = policy.learning_rates(t, mask)
                step = self.train_step(batch, mask, lrs, training.momentum, iteration=t, epoch=epoch,
                                       predictor_flops=predictor_flops)
                losses.append(step.loss)
                t += 1
                policy.observe(t, self.state, step.grads, mask)

            result.epoch_losses.append(float(np.mean(losses)))
            logger.debug(f"Epoch {epoch + 1}/{training.epochs}: loss={result.epoch_losses[-1]:.5f}, "
                         f"frozen={sorted(mask.frozen)}")
            if t != (epoch + 1) * ipe:
                raise ContractError(f"epoch {epoch} ran {t - epoch * ipe} iterations, expected {ipe}")

        result.mask = mask
        return result
