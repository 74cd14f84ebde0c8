"""Pass/fail records shared by the checks and the sweep drivers."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass
class CheckReport:
    """One identity check: ``passed`` is exactly ``residual <= tolerance``."""

    name: str
    residual: float
    tolerance: float
    context: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.residual < 0 or math.isnan(self.residual):
            raise ValueError("residual must be a nonnegative number")
        self.passed = self.residual <= self.tolerance

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: residual={self.residual:.3e} tol={self.tolerance:.1e}"
