"""Compression diagnostics on the theta = 1/2 dihedral family."""

import json
from fractions import Fraction
from dataclasses import asdict, dataclass

from gwlab import compression as C
from gwlab import diagprod as D


@dataclass
class ProbeConfig:
    factors: int = 9
    samples: int = 20
    seed: int = 0
    check_cases: int = 2000


def run(cfg: ProbeConfig) -> dict:
    spec = D.DiagGroupSpec.dihedral([0] + [4**s for s in range(1, cfg.factors + 1)],
                                    [2] + [2**s for s in range(1, cfg.factors + 1)])
    probe = C.compression_probe(spec, samples=cfg.samples, seed=cfg.seed)
    small = D.DiagGroupSpec.dihedral([0, 4, 16, 64], [2, 2, 4, 8])
    aligned = C.increment_lower_check(small, pairs=cfg.check_cases, seed=cfg.seed)
    literal = C.increment_lower_check(small, pairs=cfg.check_cases, seed=cfg.seed, aligned=False)
    return {"exponent": probe["exponent"], "theory": str(C.alpha_dihedral(2, Fraction(1, 2))),
            "rows": probe["rows"],
            "increment_violations": {"aligned": aligned["violations"],
                                     "unaligned": literal["violations"],
                                     "cases": aligned["cases"]}}


if __name__ == "__main__":
    cfg = ProbeConfig()
    print(json.dumps({"config": asdict(cfg), "results": run(cfg)}, indent=2))
