from .models import LinearFreezeConfig
from .policy import LinearFreezingPolicy, linear_decide, linear_lr, zero_times

__all__ = ['LinearFreezeConfig', 'LinearFreezingPolicy', 'linear_decide', 'linear_lr', 'zero_times']
