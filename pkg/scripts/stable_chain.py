"""Displacement constant of the Cauchy-kernel lamplighter chain across segment sizes."""

import json
from dataclasses import asdict, dataclass

from gwlab.walks import stable


@dataclass
class StableConfig:
    m_list: tuple = (64, 256, 1024)
    samples: int = 200
    seeds: tuple = (1, 2, 3, 4, 5)


def run(cfg: StableConfig) -> dict:
    out = {}
    for seed in cfg.seeds:
        rep = stable.stable_speed_check(list(cfg.m_list), cfg.samples, seed)
        out[seed] = {"c": [r["c"] for r in rep["rows"]], "spread": rep["c_spread"]}
    return out


if __name__ == "__main__":
    cfg = StableConfig()
    print(json.dumps({"config": asdict(cfg), "results": run(cfg)}, indent=2))
