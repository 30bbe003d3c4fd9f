"""Network engine: layer specs, sequential network, checkpoints"""
