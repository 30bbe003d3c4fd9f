from .policy import FullTrainingPolicy

__all__ = ['FullTrainingPolicy']
