"""Plan dihedral specs for target speed functions and check the approximation."""

import json
import math
from dataclasses import asdict, dataclass, field

from gwlab import planner as P


@dataclass
class PlannerConfig:
    targets: list = field(default_factory=lambda: ["x**0.6", "x**0.65", "x**0.7"])
    m0: float = 2.0
    grid_points: int = 10_000


def run(cfg: PlannerConfig) -> dict:
    grid = P.log_grid(1.0, P.X_MAX, cfg.grid_points)
    out = {}
    for expr in cfg.targets:
        f = P.TargetFunction.expr(expr)
        plan = P.plan("speed", f)
        out[expr] = {"theta": plan["theta"], "exponent": plan["exponent"],
                     "k": plan["spec"]["k"], "l": plan["spec"]["l"], "flags": plan["flags"]}
    # the raw approximation guarantee for the power functions themselves
    for a in (0.6, 0.7):
        f = P.TargetFunction(fn=lambda x, a=a: x**a, name=f"x^{a}")
        q = P.approximate(f, cfg.m0)
        out[f"approx x^{a}"] = {"max_ratio": P.max_grid_ratio(q, f, grid), "bound": cfg.m0,
                                "segments": len(q.ks)}
    f = P.TargetFunction(fn=lambda x: math.sqrt(x) * math.log1p(x), name="sqrt(x)log(1+x)")
    q = P.approximate(f, cfg.m0, check=False)
    out["approx sqrt(x)log(1+x)"] = {"max_ratio": P.max_grid_ratio(q, f, grid), "bound": cfg.m0}
    return out


if __name__ == "__main__":
    cfg = PlannerConfig()
    print(json.dumps({"config": asdict(cfg), "results": run(cfg)}, indent=2, default=str))
