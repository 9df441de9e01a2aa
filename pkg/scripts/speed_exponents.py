"""Fit speed exponents of the switch-walk-switch walk on a few families."""

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from gwlab import diagprod as D
from gwlab.walks import sim


@dataclass
class SpeedConfig:
    log2_n: tuple = (10, 18)
    samples: int = 100
    seed: int = 1
    families: list = field(default_factory=lambda: ["lamplighter", "dihedral-theta1",
                                                    "dihedral-theta-half"])


def family(name):
    if name == "lamplighter":
        return D.DiagGroupSpec([0], ["Z2xZ2"])
    ks = [0] + [4**s for s in range(1, 10)]
    if name == "dihedral-theta1":
        return D.DiagGroupSpec.dihedral(ks, [2] + [4**s for s in range(1, 10)])
    if name == "dihedral-theta-half":
        return D.DiagGroupSpec.dihedral(ks, [2] + [2**s for s in range(1, 10)])
    raise ValueError(name)


def run(cfg: SpeedConfig) -> dict:
    ns = [2**j for j in range(cfg.log2_n[0], cfg.log2_n[1] + 1)]
    out = {}
    for name in cfg.families:
        tab = sim.speed_experiment(family(name), ns, cfg.samples, cfg.seed)
        lo, hi = tab.column("lower"), tab.column("upper")
        out[name] = {"lower": sim.fit_exponent(ns, lo)["slope"],
                     "upper": sim.fit_exponent(ns, hi)["slope"],
                     "mid": sim.fit_exponent(ns, np.sqrt(lo * hi))["slope"]}
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=SpeedConfig.samples)
    ap.add_argument("--seed", type=int, default=SpeedConfig.seed)
    a = ap.parse_args()
    cfg = SpeedConfig(samples=a.samples, seed=a.seed)
    print(json.dumps({"config": asdict(cfg), "exponents": run(cfg)}, indent=2))
