from .policy import GradNormPolicy, change_rate, gradnorm_decide

__all__ = ['GradNormPolicy', 'change_rate', 'gradnorm_decide']
