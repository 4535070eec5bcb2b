from stillpos.treasury.sweep import (
    CashOutPolicy,
    SweepInput,
    SweepPlan,
    build_sweep,
    cashout_due,
    sign_sweep,
    spendable_inputs,
)

__all__ = [
    "CashOutPolicy",
    "SweepInput",
    "SweepPlan",
    "cashout_due",
    "build_sweep",
    "sign_sweep",
    "spendable_inputs",
]
