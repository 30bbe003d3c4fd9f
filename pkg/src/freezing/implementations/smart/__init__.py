from .policy import SmartFreezingPolicy, smart_decide

__all__ = ['SmartFreezingPolicy', 'smart_decide']
