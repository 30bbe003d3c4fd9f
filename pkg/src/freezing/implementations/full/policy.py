from freezing.base.policy_base import PolicyBase, RunContext
from py_models.configs import FullPolicyConfig


class FullTrainingPolicy(PolicyBase):
    """Never freezes; every unit follows the global schedule"""

    def __init__(self, params: FullPolicyConfig, run: RunContext, **kwargs):
        super().__init__('full', params, run, **kwargs)
