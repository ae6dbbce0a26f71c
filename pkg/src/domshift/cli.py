"""Command-line entry point: ``domshift {verify,train,constants,axioms,generate,replay}``.

Exit codes: 0 success, 1 usage or configuration error, 2 a checked
inequality failed (reports are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .adapt import train
from .bounds import (compute_bound_analogy, compute_bound_bendavid, compute_bound_dt,
                     compute_bound_dtn, compute_bound_mansour, compute_bound_oda, two_sided_gap_report)
from .checks import run_axioms
from .core import TRIANGLE_CONSTANT, LossSpec, compose
from .measures import estimate_K, estimate_L
from .scenarios import _SUP_CLASSES, ScenarioConfig, generate, scenario_document
from .setting import DASetting

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2
WORKERS_ENV = "DSHIFT_WORKERS"

SETTINGS = {
    "da": "standard_da",
    "binary-da": "binary_da",
    "oda": "output_da",
    "analogy": "analogy_oda",
    "two-sided": "two_sided",
    "dt": "domain_transfer",
}
LOSSES = {"abs": "absolute", "sq": "squared", "01": "zero_one"}
WEIGHT_FLAGS = {"w_disc": "disc", "w_tid": "tid", "w_const": "const", "w_inv": "inv"}

# Weights that leave only the directly supervised term: the "ERM" candidate.
ERM_WEIGHTS = {
    "standard_da": {"disc": 0.0},
    "binary_da": {"disc": 0.0},
    "output_da": {"inv": 0.0, "disc": 0.0},
    "analogy_oda": {"disc": 0.0},
    "domain_transfer": {"const": 0.0, "disc": 0.0},
}
CANDIDATE_CLASSES = {
    "standard_da": ("H1", "H2"),
    "binary_da": ("H1", "H2"),
    "output_da": ("H1", "H2", "H2_prime"),
    "analogy_oda": ("H1", "H3", "H4"),
    "domain_transfer": ("H2",),
    "two_sided": ("H1", "H2", "H1", "H2", "H3", "H3"),
}
N_RANDOM = 8
N_RANDOM_TWO_SIDED = 10


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# scenario evaluation (module-level so worker processes can import it)


def bounds_for(setting: DASetting, parts: Sequence) -> list:
    """Bound reports for one candidate given as class members in CANDIDATE_CLASSES order."""
    kind = setting.kind
    if kind == "standard_da":
        return [compute_bound_mansour(setting, *parts)]
    if kind == "binary_da":
        return [compute_bound_bendavid(setting, *parts), compute_bound_mansour(setting, *parts)]
    if kind == "output_da":
        return [compute_bound_oda(setting, *parts)]
    if kind == "analogy_oda":
        f, a, b = parts
        return [compute_bound_analogy(setting, f, b, a)]
    if kind == "domain_transfer":
        return [compute_bound_dt(setting, *parts), compute_bound_dtn(setting, *parts)]
    f1, g1, f2, g2, a1, a2 = parts
    return [two_sided_gap_report(setting, compose(f1, g1), compose(f2, g2), a1, a2)]


def candidate_indices(setting: DASetting, weights: Dict[str, float], seed: int) -> list:
    """(label, index tuple) pairs: trained, ERM and seeded random candidates."""
    kind = setting.kind
    names = CANDIDATE_CLASSES[kind]
    out = []
    if kind != "two_sided":
        for label, w in (("trained", weights), ("erm", ERM_WEIGHTS[kind])):
            chosen = train(setting, w).chosen
            out.append((label, tuple(chosen.values())))
    rng = np.random.Generator(np.random.PCG64([seed, 1]))
    n = N_RANDOM_TWO_SIDED if kind == "two_sided" else N_RANDOM
    for r in range(n):
        idx = tuple(int(rng.integers(len(setting.classes[c]))) for c in names)
        out.append((f"random-{r}", idx))
    return out


def verify_scenario(task: tuple) -> dict:
    index, cfg_dict, weights = task
    cfg = ScenarioConfig.from_dict(cfg_dict)
    setting = generate(cfg)
    names = CANDIDATE_CLASSES[setting.kind]
    candidates = []
    for label, idx in candidate_indices(setting, weights, cfg.seed):
        parts = [setting.classes[c][i] for c, i in zip(names, idx)]
        reports = [r.to_dict() for r in bounds_for(setting, parts)]
        candidates.append({"label": label, "indices": list(idx), "reports": reports})
    ok = all(r["pass"] for c in candidates for r in c["reports"])
    return {"scenario": index, "seed": cfg.seed, "setting": setting.kind,
            "candidates": candidates, "pass": ok}


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be at least 1")
    return n


def run_tasks(fn, tasks: list, workers: int) -> list:
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


# ---------------------------------------------------------------------------
# argument handling


def _weight(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v) or v < 0:
        raise argparse.ArgumentTypeError("weights are non-negative")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _add_scenario_flags(p, setting_required=True):
    p.add_argument("--setting", choices=sorted(SETTINGS), required=setting_required,
                   default=None if setting_required else "da")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--support-size", type=int, default=None)
    p.add_argument("--class-size", type=int, default=None,
                   help="size of the classes the discrepancy ranges over")
    p.add_argument("--loss", choices=sorted(LOSSES), default=None)
    p.add_argument("--shift", type=float, default=None, help="shift magnitude between domains")
    p.add_argument("--realizable", action="store_true")


def _add_weight_flags(p):
    for flag in WEIGHT_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=_weight, default=None)


def _add_output_flags(p):
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> Parser:
    parser = Parser(prog="domshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check bounds on N generated scenarios")
    _add_scenario_flags(p)
    p.add_argument("--n", type=_nonneg_int, default=10)
    _add_weight_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("train", help="train on one scenario and report its bounds")
    _add_scenario_flags(p)
    _add_weight_flags(p)
    p.add_argument("--trace", action="store_true", help="include every candidate's objective")
    _add_output_flags(p)

    p = sub.add_parser("constants", help="estimate K and per-member Lipschitz constants")
    _add_scenario_flags(p, setting_required=False)
    p.add_argument("--n", type=_nonneg_int, default=100_000, help="probe triples for K")
    p.add_argument("--pairs", type=_nonneg_int, default=1000, help="probe pairs per member")
    _add_output_flags(p)

    p = sub.add_parser("axioms", help="run the randomized measures property suite")
    p.add_argument("--seed", type=_nonneg_int, default=42)
    p.add_argument("--n", type=_nonneg_int, default=100)
    _add_output_flags(p)

    p = sub.add_parser("generate", help="write a scenario file")
    _add_scenario_flags(p)
    p.add_argument("--out", default=None)
    p.add_argument("--check", default=None, metavar="FILE",
                   help="regenerate and compare against an existing scenario file")

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="override the recorded output path")
    return parser


def scenario_config(args, seed: Optional[int] = None) -> ScenarioConfig:
    kind = SETTINGS[args.setting]
    opts = {"kind": kind, "seed": args.seed if seed is None else seed}
    if args.support_size is not None:
        opts["support_size"] = args.support_size
    if args.class_size is not None:
        opts["class_sizes"] = {c: args.class_size for c in _SUP_CLASSES[kind]}
    if args.loss is not None:
        opts["loss_kind"] = LOSSES[args.loss]
    if args.shift is not None:
        opts["shift_magnitude"] = args.shift
    if args.realizable:
        opts["realizable"] = True
    return ScenarioConfig(**opts)


def weights_from(args) -> Dict[str, float]:
    return {name: getattr(args, flag) for flag, name in WEIGHT_FLAGS.items()
            if getattr(args, flag, None) is not None}


# ---------------------------------------------------------------------------
# output


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _sanitize(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf" if o > 0 else "-inf"
    if isinstance(o, dict):
        return {k: _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    return o


def dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips exactly.
    return json.dumps(_sanitize(obj), indent=2, default=_json_default, allow_nan=False) + "\n"


def report_rows(report: dict, **key) -> List[dict]:
    rows = []
    for name, value in report["terms"].items():
        rows.append({**key, "theorem": report["theorem"], "quantity": name, "value": repr(value),
                     "coefficient": repr(report["coefficients"][name]), "pass": report["pass"]})
    for name in ("lhs", "rhs", "constant", "slack"):
        rows.append({**key, "theorem": report["theorem"], "quantity": name,
                     "value": repr(report[name]), "coefficient": "", "pass": report["pass"]})
    return rows


def to_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def write_manifest(args, argv: Sequence[str], started: float) -> None:
    if getattr(args, "out", None) is None:
        return
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": {k: v for k, v in vars(args).items() if k != "command"},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": [args.out],
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
        fh.write(dumps(manifest))


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    base = scenario_config(args)
    weights = weights_from(args)
    tasks = [(i, base.replace(seed=base.seed + i).to_dict(), weights) for i in range(args.n)]
    results = run_tasks(verify_scenario, tasks, _workers())
    if args.format == "csv":
        rows = []
        for res in results:
            for cand in res["candidates"]:
                for rep in cand["reports"]:
                    rows += report_rows(rep, scenario=res["scenario"], seed=res["seed"],
                                        candidate=cand["label"])
        emit(to_csv(rows), args.out)
    else:
        emit(dumps(results), args.out)
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_VIOLATION


def cmd_train(args) -> int:
    cfg = scenario_config(args)
    setting = generate(cfg)
    if setting.kind == "two_sided":
        raise UsageError("two-sided settings have no trainer; use verify")
    result = train(setting, weights_from(args), trace=args.trace)
    names = CANDIDATE_CLASSES[setting.kind]
    parts = [setting.classes[c][i] for c, i in zip(names, result.chosen.values())]
    reports = [r.to_dict() for r in bounds_for(setting, parts)]
    if args.format == "csv":
        rows = []
        for rep in reports:
            rows += report_rows(rep, seed=cfg.seed)
        emit(to_csv(rows), args.out)
    else:
        emit(dumps({"train": result.to_dict(), "bounds": reports}), args.out)
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_VIOLATION


def _k_probes(rng, kind: str, n: int, dim: int) -> np.ndarray:
    if kind == "zero_one":
        return rng.integers(0, 2, size=(n, 3, dim)).astype(float)
    return rng.uniform(-2.0, 2.0, size=(n, 3, dim))


def cmd_constants(args) -> int:
    loss_kind = LOSSES[args.loss or "abs"]
    if args.setting is None:
        args.setting = "da"
    if loss_kind == "zero_one" and args.setting != "binary-da":
        args.setting = "binary-da"
    cfg = scenario_config(args)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    spec = LossSpec(loss_kind, 1)
    K_hat = estimate_K(spec, _k_probes(rng, loss_kind, args.n, 1)) if args.n else 0.0
    declared_K = TRIANGLE_CONSTANT[loss_kind]
    members = []
    if loss_kind != "zero_one":
        setting = generate(cfg)
        for cname, C in sorted(setting.classes.items()):
            if C.lipschitz_L is None:
                continue
            probes = rng.uniform(-2.0, 2.0, size=(args.pairs, 2, C.input_dim))
            for i, h in enumerate(C.members):
                L_hat = estimate_L(h, spec, probes) if args.pairs else 0.0
                members.append({"class": cname, "index": i, "L_hat": L_hat,
                                "L_declared": C.lipschitz_L, "pass": L_hat <= C.lipschitz_L})
    ok = K_hat <= declared_K + 1e-12 and all(m["pass"] for m in members)
    doc = {"loss": loss_kind, "probes": args.n, "K_hat": K_hat, "K_declared": declared_K,
           "members": members, "pass": ok}
    if args.format == "csv":
        rows = [{"class": "", "index": "", "quantity": "K_hat", "estimate": repr(K_hat),
                 "declared": repr(declared_K), "pass": K_hat <= declared_K + 1e-12}]
        rows += [{"class": m["class"], "index": m["index"], "quantity": "L_hat",
                  "estimate": repr(m["L_hat"]), "declared": repr(m["L_declared"]),
                  "pass": m["pass"]} for m in members]
        emit(to_csv(rows), args.out)
    else:
        emit(dumps(doc), args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_axioms(args) -> int:
    checks = run_axioms(args.seed, args.n)
    failed = [c.to_dict() for c in checks if not c.passed]
    counts: Dict[str, int] = {}
    for c in checks:
        counts[c.name] = counts.get(c.name, 0) + 1
    if args.format == "csv":
        emit(to_csv([c.to_dict() for c in checks]), args.out)
    else:
        emit(dumps({"seed": args.seed, "instances": args.n, "checks": counts,
                    "failed": failed, "pass": not failed}), args.out)
    return EXIT_OK if not failed else EXIT_VIOLATION


def cmd_generate(args) -> int:
    doc = dumps(scenario_document(scenario_config(args)))
    if args.check is not None:
        with open(args.check, encoding="utf-8") as fh:
            same = fh.read() == doc
        print("identical" if same else "drift detected")
        return EXIT_OK if same else EXIT_VIOLATION
    emit(doc, args.out)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
    if args.out is not None:
        argv = _replace_out(argv, args.out)
    return main(argv)


def _replace_out(argv: List[str], out: str) -> List[str]:
    result, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        result.append(tok)
    return result + ["--out", out]


COMMANDS = {
    "verify": cmd_verify,
    "train": cmd_train,
    "constants": cmd_constants,
    "axioms": cmd_axioms,
    "generate": cmd_generate,
    "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"domshift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command not in ("replay", "generate"):
        write_manifest(args, argv, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
