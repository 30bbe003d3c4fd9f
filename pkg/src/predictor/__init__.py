"""Attention-based freeze predictor: model, offline training, storage"""
from .model import (AttentionPredictor, DecisionTrace, PredictorDims, PredictorParams, attend, decide, encode,
                    inference_flops, init_params, predictor_grad)
from .training import PredictorTrainConfig, train_predictor
from .storage import load_predictor, save_predictor

__all__ = [
    'AttentionPredictor', 'DecisionTrace', 'PredictorDims', 'PredictorParams',
    'attend', 'decide', 'encode', 'inference_flops', 'init_params', 'predictor_grad',
    'PredictorTrainConfig', 'train_predictor',
    'load_predictor', 'save_predictor',
]
