"""Command-line front end: gwlab <command> [<sub>] [options].

Every command reads its parameters from flags and, optionally, a JSON config
(--config) whose keys are the flag names with underscores. Flags win over the
config. Results go to stdout or, with --out, are written atomically to a file
as CSV (header row first) or JSON. Errors are reported as one JSON object on
stderr with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import compression as C
from . import diagprod as D
from . import metric as M
from . import planner as P
from . import profiles as PR
from .errors import GwlabError, InvalidInput, InvalidParameter
from .walks import excursions as X
from .walks import sim, stable

# CSV column sets, pinned by golden tests; bump the version on any change
SCHEMAS = {
    "speed": ("speed/1", ["n", "samples", "lower", "upper", "mid", "lower_se", "upper_se"]),
    "entropy": ("entropy/1", ["n", "samples", "value", "se", "base_entropy", "value_over_sqrt_n"]),
    "traverse": ("traverse/1", ["n", "C", "c"]),
    "stable": ("stable/1", ["m", "t", "mean", "c_m"]),
    "joint": ("joint/1", ["n", "lower", "upper", "entropy"]),
    "lambda": ("lambda/1", ["logv", "upper", "piece", "lower"]),
    "psi": ("psi/1", ["r", "S", "rayleigh", "tau", "switch", "r2_quotient"]),
    "wsolve": ("wsolve/1", ["n", "w"]),
    "return-oracle": ("return/1", ["n", "prob", "prob_float"]),
    "folner": ("folner/1", ["r", "size", "boundary", "ratio", "count_formula"]),
    "probe": ("probe/1", ["n", "embed_lower", "length_upper"]),
    "check": ("check/1", ["check", "cases", "violations", "worst", "ok"]),
    "predict": ("predict/1", ["quantity", "value"]),
    "ball": ("ball/1", ["d", "count", "bounds_ok"]),
    "return": ("return/1", ["n", "prob", "prob_float"]),
}

STOCHASTIC = {("simulate", s) for s in ("speed", "entropy", "traverse", "stable", "joint")} \
    | {("compress", "probe"), ("compress", "check")}


class ValidationError(GwlabError):
    """Bad configuration."""


# formatting

def fmt(v):
    """Scalar to its canonical text: 12 significant digits, p/q for rationals."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(fmt(x) for x in v)
    return str(v)


def jsonable(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return fmt(v) if not math.isfinite(v) else float(format(v, ".12g"))
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [jsonable(x) for x in v]
    return v


def render(result: dict, fmt_: str) -> str:
    if fmt_ == "json":
        return json.dumps(jsonable(result), indent=1) + "\n"
    cols = SCHEMAS[result["table"]][1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in result["rows"]:
        w.writerow([fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".gwlab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# configuration

@dataclass
class ExperimentConfig:
    command: str
    sub: str | None = None
    spec: object = None
    n: list = field(default_factory=list)
    samples: int | None = None
    seed: int | None = None
    threads: int | None = None
    out: str | None = None
    format: str | None = None
    params: dict = field(default_factory=dict)

    def validate(self):
        if (self.command, self.sub) in STOCHASTIC and self.seed is None:
            raise ValidationError("a seed is required for stochastic commands")
        if self.samples is not None and self.samples < 1:
            raise ValidationError("samples must be positive")
        if self.n is not None and len(self.n) > 1 and any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ValidationError("the n grid must be strictly increasing")
        if self.format not in (None, "csv", "json"):
            raise ValidationError(f"unknown format {self.format}")

    def output_format(self) -> str:
        if self.format:
            return self.format
        if self.out and self.out.endswith(".json"):
            return "json"
        return "csv"


def load_spec(obj) -> D.DiagGroupSpec:
    """A spec from a dict, a JSON string or a file path; a plan file's "spec" entry is used."""
    if obj is None:
        raise ValidationError("missing --spec")
    if isinstance(obj, str):
        text = obj
        if not obj.lstrip().startswith("{"):
            if not os.path.exists(obj):
                raise ValidationError(f"spec file {obj} not found")
            with open(obj) as fh:
                text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"spec is not valid JSON: {e}") from None
    if isinstance(obj, dict) and "spec" in obj and "k" not in obj:
        obj = obj["spec"]
    if not isinstance(obj, dict) or "k" not in obj:
        raise ValidationError("spec needs a 'k' list")
    if obj.get("family") not in (None, "dihedral"):
        raise ValidationError(f"spec family {obj['family']!r} cannot be simulated")
    for k in obj["k"]:
        if not (k == "inf" or (isinstance(k, int) and not isinstance(k, bool))):
            raise ValidationError("k_s must be integers or \"inf\"")
    try:
        return D.DiagGroupSpec.from_json(obj)
    except InvalidParameter as e:
        raise ValidationError(f"spec does not validate: {e}") from None


def _num_list(values, kind=int):
    if values is None:
        return None
    out = []
    for v in values:
        for tok in str(v).split(","):
            tok = tok.strip()
            if tok:
                out.append(kind(float(tok)) if kind is int else kind(tok))
    return out


def _rational(text):
    text = str(text)
    if text in ("inf", "infinity"):
        return math.inf
    return Fraction(text)


def _admissible(text):
    if text in ("integers", "even", "pow2"):
        return P.AdmissibleSet(text)
    return P.AdmissibleSet("explicit", sorted(float(x) for x in str(text).split(",")))


def parse_word(spec: D.DiagGroupSpec, text: str) -> list:
    """Tokens t, T (tau inverse), a<i>, b<j>, separated by commas or spaces."""
    word = []
    for tok in text.replace(",", " ").split():
        if tok == "t":
            word.append((D.TAU, 1))
        elif tok == "T":
            word.append((D.TAU, -1))
        elif tok[0] in "ab" and tok[1:].isdigit():
            i = int(tok[1:])
            size = spec.size_A if tok[0] == "a" else spec.size_B
            if i >= size:
                raise ValidationError(f"letter {tok} out of range")
            word.append((D.ALPHA if tok[0] == "a" else D.BETA, i))
        else:
            raise ValidationError(f"bad word token {tok!r}")
    return word


# commands

def _fit(xs, ys):
    f = sim.fit_exponent(xs, ys)
    return {k: f[k] for k in ("slope", "lo", "hi")}


def cmd_validate(cfg):
    spec = load_spec(cfg.spec)
    info = {"ok": True, "n_factors": spec.n_factors, "k": list(spec.ks),
            "size_A": spec.size_A, "size_B": spec.size_B}
    if spec.dihedral_ls is not None:
        info["l"] = list(spec.dihedral_ls)
    else:
        info["orders"] = [spec.group(s).order for s in range(spec.n_factors)]
    return info


def cmd_simulate(cfg):
    p, sub = cfg.params, cfg.sub
    samples = cfg.samples or 100
    if sub == "traverse":
        rep = X.traverse_moment_checks(p.get("k") or [1, 2, 4], p.get("x") or [0, 1, 2],
                                       cfg.n, samples, cfg.seed)
        return {"table": "traverse", "rows": rep["rows"], "C_spread": rep["C_spread"],
                "stable": rep["stable"]}
    if sub == "stable":
        w = tuple(p.get("w") or (1.0, 1.0))
        rep = stable.stable_speed_check(p.get("m") or [64, 256, 1024], samples, cfg.seed, w)
        rows = [{"m": r["m"], "t": t, "mean": v, "c_m": r["c"]}
                for r in rep["rows"] for t, v in zip(r["t"], r["mean"])]
        return {"table": "stable", "rows": rows, "c_spread": rep["c_spread"],
                "stable": rep["stable"]}
    spec = load_spec(cfg.spec)
    if not cfg.n:
        raise ValidationError("empty n grid")
    if sub == "speed":
        tab = sim.speed_experiment(spec, cfg.n, samples, cfg.seed, cfg.threads)
        rows = [dict(r, mid=math.sqrt(r["lower"] * r["upper"])) for r in tab.rows]
        out = {"table": "speed", "rows": rows}
        if len(rows) >= 2 and all(r["lower"] > 0 for r in rows):
            out["fit"] = {c: _fit(tab.column("n"), tab.column(c)) for c in ("lower", "upper", "mid")}
        return out
    if sub == "entropy":
        rows = []
        for n in cfg.n:
            r = sim.entropy_lower_estimate(spec, n, samples, cfg.seed, cfg.threads)
            rows.append(dict(r, samples=samples, value_over_sqrt_n=r["value"] / math.sqrt(n)))
        return {"table": "entropy", "rows": rows}
    if sub == "joint":
        spec_b = load_spec(p["spec_b"]) if p.get("spec_b") else None
        rep = sim.joint_speed_entropy(spec, spec_b, cfg.n, samples, cfg.seed,
                                      entropy=not p.get("no_entropy"))
        return {"table": "joint", "rows": rep["rows"]}
    raise ValidationError(f"unknown simulate target {sub}")


def cmd_profile(cfg):
    p, sub = cfg.params, cfg.sub
    if sub == "wsolve":
        if not p.get("fn"):
            raise ValidationError("wsolve needs --fn")
        f = P.TargetFunction.expr(p["fn"])
        ns = p.get("nf") or []
        if not ns:
            raise ValidationError("empty n grid")
        return {"table": "wsolve", "rows": [{"n": n, "w": PR.w_solver(f, n)} for n in ns]}
    spec = load_spec(cfg.spec)
    if sub == "lambda":
        pp = PR.ProfileParams(spec.ks, tuple(spec.log_order(s) for s in range(spec.n_factors)),
                              spec.size_A, spec.size_B)
        q = float(p.get("p") or 2.0)
        grid = p.get("logv") or list(np.geomspace(1.0, 1e4, 25))
        up, piece = PR.lambda_upper_curve(pp, q, grid)
        lo = PR.lambda_lower_predictor(pp, q, float(p.get("delta") or 1.0), grid)
        rows = [{"logv": float(g), "upper": a, "piece": int(b), "lower": c}
                for g, a, b, c in zip(grid, up, piece, lo)]
        return {"table": "lambda", "rows": rows}
    if sub == "psi":
        rows = []
        for r in p.get("r") or [8, 16, 32]:
            res = PR.psi_dihedral_rayleigh(spec, r, exact=bool(p.get("exact")))
            rows.append({k: res[k] for k in ("r", "S", "rayleigh", "tau", "switch", "r2_quotient")})
        return {"table": "psi", "rows": rows}
    if sub == "return-oracle":
        probs = PR.exact_return_prob(spec, int(p.get("n_max") or 3))
        return {"table": "return-oracle",
                "rows": [{"n": i, "prob": v, "prob_float": float(v)} for i, v in enumerate(probs)]}
    if sub == "folner":
        rows = [PR.folner_set(spec, r) for r in p.get("r") or [1, 2]]
        return {"table": "folner", "rows": rows}
    raise ValidationError(f"unknown profile target {sub}")


def cmd_plan(cfg):
    p = cfg.params
    if not p.get("fn"):
        raise ValidationError("plan needs --fn")
    kw = {}
    for key in ("K", "L"):
        if p.get(key):
            kw[key] = _admissible(p[key])
    res = P.plan(p.get("target") or "speed", P.TargetFunction.expr(p["fn"]),
                 m0=float(p.get("m0") or 3.0), C1=float(p.get("C1") or 2.0),
                 p=float(p.get("p") or 2.0), x_max=float(p["x_max"]) if p.get("x_max") else None,
                 family=p.get("family") or "dihedral", **kw)
    if cfg.seed is not None and "recipe" in res:
        res["recipe"]["seed"] = cfg.seed
    return res


def cmd_compress(cfg):
    p, sub = cfg.params, cfg.sub
    q = float(p.get("q") or 2.0)
    aligned = not p.get("literal")
    if sub == "predict":
        theta = _rational(p.get("theta") or "1")
        pp = _rational(p.get("p") or "2")
        fam = p.get("family") or "dihedral"
        tab = C.figure_table(fam, theta, pp)
        rows = [{"quantity": k, "value": v} for k, v in tab.items()]
        if p.get("alpha_h") is not None:
            rows.append({"quantity": "alpha_wreath",
                         "value": C.alpha_wreath(pp, _rational(p["alpha_h"]))})
        return {"table": "predict", "rows": rows}
    spec = load_spec(cfg.spec)
    if spec.dihedral_ls is None:
        raise ValidationError("compression commands need a dihedral spec")
    gamma = C.GammaSpec(float(p.get("gamma_eps") or 0.5))
    if sub == "probe":
        ns = cfg.n or [2**10, 2**12, 2**14]
        rep = C.compression_probe(spec, gamma, q, ns, cfg.samples or 20, cfg.seed, aligned)
        return {"table": "probe", "rows": rep["rows"], "exponent": rep["exponent"],
                "fit": {k: rep["fit"][k] for k in ("slope", "lo", "hi")}, "aligned": aligned}
    if sub == "check":
        lip = C.lipschitz_check(spec, gamma, q, cfg.samples or 1000, cfg.seed, aligned=aligned)
        inc = C.increment_lower_check(spec, q, int(p.get("pairs") or cfg.samples or 1000),
                                      cfg.seed, aligned=aligned)
        rows = [{"check": "lipschitz", "cases": lip["cases"],
                 "violations": sum(lip["violations"].values()),
                 "worst": lip["worst"]["total"], "ok": lip["ok"]},
                {"check": "increment", "cases": inc["cases"], "violations": inc["violations"],
                 "worst": inc["min_margin"], "ok": inc["ok"]}]
        return {"table": "check", "rows": rows, "lipschitz": lip, "increment": inc}
    raise ValidationError(f"unknown compress target {sub}")


def cmd_oracle(cfg):
    p, sub = cfg.params, cfg.sub
    spec = load_spec(cfg.spec)
    if sub == "length":
        if (p.get("word") is None) == (p.get("element") is None):
            raise ValidationError("length needs exactly one of --word, --element")
        if p.get("word") is not None:
            word = parse_word(spec, p["word"])
            g = D.word_to_element(spec, word)
            radius = int(p.get("radius") or len(word))
        else:
            text = p["element"]
            if os.path.exists(text):
                with open(text) as fh:
                    text = fh.read()
            try:
                g = D.element_from_json(spec, text)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(f"bad element: {exc}") from exc
            if not D.check_consistency(spec, g):
                raise ValidationError("element is not in the diagonal product")
            word = None
            radius = int(p.get("radius") or 8)
        ball = M.exact_length_bfs(spec, radius)
        b = M.delta_length_bounds(spec, g)
        return {"word_length": None if word is None else len(word), "radius": radius,
                "exact": ball.lookup(g), "lower": b.lower, "upper": b.upper,
                "range": D.range_(spec, g), "element": g.to_json()}
    if sub == "ball":
        radius = int(p.get("radius") or 4)
        ball = M.exact_length_bfs(spec, radius, p.get("factor"))
        counts, ok = {}, {}
        for g, d in ball.items():
            counts[d] = counts.get(d, 0) + 1
            if p.get("factor") is None:
                b = M.delta_length_bounds(spec, g)
                ok[d] = ok.get(d, True) and b.lower <= d <= b.upper
        rows = [{"d": d, "count": counts[d], "bounds_ok": ok.get(d)} for d in sorted(counts)]
        return {"table": "ball", "rows": rows, "size": len(ball)}
    if sub == "return":
        rows = [{"n": n, "prob": v, "prob_float": float(v)}
                for n in range(int(p.get("n_max") or 2) + 1)
                for v in [PR.return_prob_paths(spec, n)]]
        return {"table": "return", "rows": rows}
    raise ValidationError(f"unknown oracle target {sub}")


COMMANDS = {"validate": cmd_validate, "simulate": cmd_simulate, "profile": cmd_profile,
            "plan": cmd_plan, "compress": cmd_compress, "oracle": cmd_oracle}

SUBS = {"simulate": ["speed", "entropy", "traverse", "stable", "joint"],
        "profile": ["lambda", "psi", "wsolve", "return-oracle", "folner"],
        "compress": ["probe", "check", "predict"],
        "oracle": ["length", "ball", "return"]}


# argument parsing

def _common(ap):
    ap.add_argument("--config", help="JSON file with option values")
    ap.add_argument("--spec", help="spec JSON text or file (a plan file works too)")
    ap.add_argument("--n", nargs="+", help="n grid (strictly increasing)")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, help="worker cap; GWLAB_THREADS overrides")
    ap.add_argument("--out", help="output file, written atomically")
    ap.add_argument("--format", choices=["csv", "json"])


def _extras(ap, command):
    if command == "simulate":
        ap.add_argument("--k", nargs="+")
        ap.add_argument("--x", nargs="+")
        ap.add_argument("--m", nargs="+")
        ap.add_argument("--w", nargs=2, type=float)
        ap.add_argument("--spec-b", dest="spec_b")
        ap.add_argument("--no-entropy", dest="no_entropy", action="store_true", default=None)
    elif command == "profile":
        ap.add_argument("--p", type=float)
        ap.add_argument("--delta", type=float)
        ap.add_argument("--logv", nargs="+")
        ap.add_argument("--r", nargs="+")
        ap.add_argument("--exact", action="store_true", default=None)
        ap.add_argument("--fn")
        ap.add_argument("--n-max", dest="n_max", type=int)
    elif command == "plan":
        ap.add_argument("--target", choices=["speed", "profile", "return", "compression"])
        ap.add_argument("--fn")
        ap.add_argument("--m0", type=float)
        ap.add_argument("--K")
        ap.add_argument("--L")
        ap.add_argument("--C1", type=float)
        ap.add_argument("--p", type=float)
        ap.add_argument("--x-max", dest="x_max", type=float)
        ap.add_argument("--family", choices=["dihedral", "linear"])
    elif command == "compress":
        ap.add_argument("--gamma-eps", dest="gamma_eps", type=float)
        ap.add_argument("--q", type=float)
        ap.add_argument("--pairs", type=int)
        ap.add_argument("--literal", action="store_true", default=None,
                        help="use the unrotated b-polygon map")
        ap.add_argument("--family", choices=["dihedral", "expanders"])
        ap.add_argument("--theta")
        ap.add_argument("--p")
        ap.add_argument("--alpha-h", dest="alpha_h")
    elif command == "oracle":
        ap.add_argument("--word")
        ap.add_argument("--element", help="element JSON text or file")
        ap.add_argument("--radius", type=int)
        ap.add_argument("--factor", type=int)
        ap.add_argument("--n-max", dest="n_max", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gwlab")
    cmds = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        if name in SUBS:
            c = cmds.add_parser(name)
            subs = c.add_subparsers(dest="sub", required=True)
            for s in SUBS[name]:
                sp = subs.add_parser(s)
                _common(sp)
                _extras(sp, name)
        else:
            c = cmds.add_parser(name)
            _common(c)
            _extras(c, name)
    return ap


_BASE = {"spec", "n", "samples", "seed", "threads", "out", "format"}
_LISTS = {"k": int, "x": int, "m": int, "r": int, "logv": float}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    vals = {k: v for k, v in vars(ns).items() if k not in ("command", "sub", "config")}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"cannot read config: {e}") from None
        for k, v in file_cfg.items():
            k = k.replace("-", "_")
            if vals.get(k) is None:
                vals[k] = v
    params = {k: v for k, v in vals.items() if k not in _BASE}
    for k, kind in _LISTS.items():
        if params.get(k) is not None:
            params[k] = _num_list(params[k] if isinstance(params[k], list) else [params[k]], kind)
    n = vals.get("n")
    if n is not None and not isinstance(n, list):
        n = [n]
    if ns.command == "profile" and n is not None:
        params["nf"] = _num_list(n, float)
        n = None
    try:
        n = _num_list(n) if n is not None else None
    except ValueError:
        raise ValidationError("n grid must be numeric") from None
    cfg = ExperimentConfig(ns.command, getattr(ns, "sub", None), vals.get("spec"), n,
                           vals.get("samples"), vals.get("seed"), vals.get("threads"),
                           vals.get("out"), vals.get("format"), params)
    if cfg.n is not None and len(cfg.n) == 0:
        raise ValidationError("empty n grid")
    if ns.command == "profile" and params.get("nf"):
        nf = params["nf"]
        if any(b <= a for a, b in zip(nf, nf[1:])):
            raise ValidationError("the n grid must be strictly increasing")
    cfg.validate()
    return cfg


def run(cfg: ExperimentConfig) -> str:
    result = COMMANDS[cfg.command](cfg)
    fmt_ = cfg.output_format() if "table" in result else "json"
    if "table" in result:
        result = dict(result, schema=SCHEMAS[result["table"]][0])
    text = render(result, fmt_)
    if cfg.out:
        write_atomic(cfg.out, text)
    return text


def _error(e: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = config_from_args(ns)
        text = run(cfg)
    except (ValidationError, InvalidInput) as e:
        return _error(e, 2)
    except GwlabError as e:
        return _error(e, 1)
    except (ValueError, KeyError, TypeError) as e:
        return _error(e, 2)
    if not cfg.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
