from __future__ import annotations


def lr_schedule(epoch: int, lr0: float = 1e-4, halve_after: int = 300, period: int = 100) -> float:
    """Constant ``lr0`` up to ``halve_after``; the first halving applies at
    ``halve_after + 1`` and every ``period`` epochs after that."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if epoch <= halve_after:
        return lr0
    return lr0 * 0.5 ** ((epoch - halve_after - 1) // period + 1)
