import math


def cosine_lr(base_lr: float, t: float, horizon: float) -> float:
    """0.5 * base * (1 + cos(pi * t / horizon)), reaching 0 at t >= horizon"""
    if horizon <= 0 or t >= horizon:
        return 0.0
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * t / horizon))


def global_lr(schedule: str, base_lr: float, t: int, total_iterations: int) -> float:
    if schedule == 'constant':
        return base_lr
    if schedule == 'cosine':
        return cosine_lr(base_lr, t, total_iterations)
    raise ValueError(f"unknown learning-rate schedule {schedule!r}")
