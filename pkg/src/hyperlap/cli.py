"""Command-line interface.

Exit codes: 0 success, 1 a check or verification failed, 2 bad input.
Every output carries a header with the instance hash, tool version, seed and
tolerance; deterministic subcommands give byte-identical output on reruns.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .hypergraph import (
    DEFAULT_TOL,
    Hypergraph,
    HypergraphError,
    Space,
    StateVector,
    convert,
    resolve_instance,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad flags or input files (exit code 2)."""


@dataclass(frozen=True)
class CommandConfig:
    subcommand: str
    instance: str | None
    tol: float
    seed: int | None
    out: str | None
    fmt: str


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise InputError(f"{what}: expected finite numbers, got {text!r}")
    return vals


def _positive(name: str, value: float) -> None:
    if not value > 0 or not math.isfinite(value):
        raise InputError(f"--{name} must be positive, got {value!r}")


def _vector(H: Hypergraph, text: str, what: str) -> np.ndarray:
    """Comma-separated values, or ``point:<node>`` for a unit mass on one node."""
    if text.startswith("point:"):
        node = text[len("point:"):]
        if node not in H.nodes:
            raise InputError(f"{what}: unknown node {node!r}")
        v = np.zeros(H.n)
        v[H.index(node)] = 1.0
        return v
    vals = _floats(text, what)
    if len(vals) != H.n:
        raise InputError(f"{what}: got {len(vals)} values for {H.n} nodes")
    return np.array(vals)


def header(H: Hypergraph | None, cfg: CommandConfig) -> dict:
    return {
        "tool": "hyperlap",
        "version": __version__,
        "command": cfg.subcommand,
        "instance": None if H is None else (H.name or cfg.instance),
        "instance_hash": None if H is None else H.digest(),
        "seed": cfg.seed,
        "tol": cfg.tol,
    }


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o)}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc: dict, out: str | None) -> None:
    _emit(json.dumps(doc, indent=2, default=_json_default) + "\n", out)


def _csv_header(H: Hypergraph, cfg: CommandConfig) -> str:
    h = header(H, cfg)
    return "# " + " ".join(f"{k}={v}" for k, v in h.items()) + "\n"


# -- subcommands --------------------------------------------------------------

def cmd_apply(args, cfg: CommandConfig) -> int:
    from .operator import apply_even_split_operator, apply_operator, audit_rules

    H = resolve_instance(args.instance)
    space = Space(args.space)
    v = StateVector(space, _vector(H, args.vector, "--vector"))
    f = convert(H, v, Space.WEIGHTED).values
    res = apply_even_split_operator(H, f, cfg.tol) if args.even_split else apply_operator(H, f, cfg.tol, method=args.method)
    lhs, rhs = res.energy_terms()
    doc = header(H, cfg)
    doc.update(
        {
            "mode": "even-split" if args.even_split else "diffusion",
            "input": {"space": space.value, "values": v.values},
            "f": f,
            "r": res.r,
            "L_w_f": res.Lw,
            "L_phi": res.L_measure,
            "L_normalized_x": res.L_normalized,
            "layers": [
                {"nodes": [H.nodes[u] for u in layer.T], "rate": layer.delta}
                for layer in res.layers
            ],
            "energy_identity": {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)},
            "rule_violations": [] if args.even_split else audit_rules(H, res),
        }
    )
    _emit_json(doc, cfg.out)
    return EXIT_OK


def cmd_simulate(args, cfg: CommandConfig) -> int:
    from .diffusion import simulate

    H = resolve_instance(args.instance)
    _positive("t-end", args.t_end)
    _positive("dt-max", args.dt_max)
    if args.record_every < 1:
        raise InputError("--record-every must be >= 1")
    phi0 = _vector(H, args.phi0, "--phi0")
    tr = simulate(H, phi0, args.t_end, args.dt_max, cfg.tol, event_guard=not args.no_event_guard, record_every=args.record_every)
    if cfg.fmt == "csv":
        _emit(_csv_header(H, cfg) + tr.to_csv(H), cfg.out)
    else:
        doc = header(H, cfg)
        doc.update({"meta": tr.meta, "times": tr.times, "states": tr.states, "rayleigh": tr.rayleigh, "l1_to_equilibrium": tr.l1_eq})
        _emit_json(doc, cfg.out)
    return EXIT_OK


def cmd_sde(args, cfg: CommandConfig) -> int:
    from .stochastic import SdeConfig, ensemble_stats, simulate_sde

    H = resolve_instance(args.instance)
    _positive("dt", args.dt)
    _positive("t-end", args.t_end)
    if args.eta < 0:
        raise InputError("--eta must be nonnegative")
    if args.traj < 1:
        raise InputError("--traj must be >= 1")
    try:
        sde_cfg = SdeConfig(args.eta, args.dt, args.t_end, args.traj, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    phi0 = _vector(H, args.phi0, "--phi0")
    if cfg.fmt == "csv":
        tr = simulate_sde(H, phi0, sde_cfg, trajectory_index=args.trajectory_index, record_every=args.record_every)
        _emit(_csv_header(H, cfg) + tr.to_csv(H), cfg.out)
        return EXIT_OK
    checkpoints = _floats(args.checkpoints, "--checkpoints") if args.checkpoints else [args.t_end]
    if any(t < 0 or t > args.t_end + 1e-12 for t in checkpoints):
        raise InputError("--checkpoints must lie in [0, t-end]")
    gamma2 = args.gamma2
    st = ensemble_stats(H, phi0, sde_cfg, checkpoints, gamma2=gamma2, tol=cfg.tol)
    doc = header(H, cfg)
    doc.update({"dt": args.dt, "t_end": args.t_end, "stats": st.to_dict()})
    _emit_json(doc, cfg.out)
    return EXIT_OK


def cmd_spectrum(args, cfg: CommandConfig) -> int:
    from .spectral import minimax_parameters, procedural_minimizers

    H = resolve_instance(args.instance)
    if not 1 <= args.k <= H.n:
        raise InputError(f"--k must be between 1 and {H.n}")
    if args.restarts < 1:
        raise InputError("--restarts must be >= 1")
    res = procedural_minimizers(H, args.k, restarts=args.restarts, seed=cfg.seed, tol=cfg.tol)
    doc = header(H, cfg)
    doc.update(res.to_dict(H))
    if args.minimax:
        doc["minimax"] = []
        for k in range(1, args.k + 1):
            est = minimax_parameters(H, k, seed=cfg.seed, tol=cfg.tol, procedural=res)
            doc["minimax"].append({"k": k, "xi": est.xi, "zeta": est.zeta})
    _emit_json(doc, cfg.out)
    return EXIT_OK


def _load_priors(H: Hypergraph, path: str | None, k: int) -> list[np.ndarray]:
    one = np.ones(H.n)
    if path is None:
        if k != 2:
            raise InputError("--priors is required for k > 2")
        return [one]
    p = Path(path)
    if not p.is_file():
        raise InputError(f"priors file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"priors file {p}: invalid JSON ({exc})") from None
    vecs = doc.get("priors") if isinstance(doc, dict) else doc
    if not isinstance(vecs, list) or not all(isinstance(v, list) and len(v) == H.n for v in vecs):
        raise InputError(f"priors file {p}: expected a list of {H.n}-vectors (weighted space)")
    vecs = [np.array(v, dtype=float) for v in vecs]
    if len(vecs) == k - 2:
        vecs = [one] + vecs
    if len(vecs) != k - 1:
        raise InputError(f"priors file {p}: need {k - 1} vectors (or {k - 2} without the constant), got {len(vecs)}")
    return vecs


def cmd_verify(args, cfg: CommandConfig) -> int:
    from .oracle import OracleError, verify_gamma

    H = resolve_instance(args.instance)
    if args.k < 2:
        raise InputError("--k must be >= 2")
    priors = _load_priors(H, args.priors, args.k)
    try:
        res = verify_gamma(H, priors, args.gamma, tol=cfg.tol, method=args.method, restarts=args.restarts, seed=cfg.seed or 0)
    except OracleError as exc:
        raise InputError(str(exc)) from None
    doc = header(H, cfg)
    doc.update({"k": args.k})
    doc.update(res.to_dict(H))
    _emit_json(doc, cfg.out)
    return EXIT_OK if res.verified else EXIT_FAIL


def cmd_examples(args, cfg: CommandConfig) -> int:
    from .golden import CRITERIA, run_criterion

    wanted = sorted(CRITERIA) if not args.criteria else sorted({int(x) for x in _floats(args.criteria, "--criteria")})
    unknown = [k for k in wanted if k not in CRITERIA]
    if unknown:
        raise InputError(f"unknown criteria {unknown}; choose from {sorted(CRITERIA)}")
    checks = []
    for k in wanted:
        for c in run_criterion(k):
            checks.append(c)
            if cfg.fmt != "json":
                print(c.line(), flush=True)
    ok = all(c.passed for c in checks)
    if cfg.fmt == "json":
        doc = header(None, cfg)
        doc.update({"passed": ok, "records": [c.to_dict() for c in checks]})
        _emit_json(doc, cfg.out)
    else:
        failed = [c for c in checks if not c.passed]
        print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
        for c in failed:
            print(f"FAILED criterion {c.criterion} {c.name}: {c.quantity} expected {c.expected}, got {c.got}, tolerance {c.tolerance}")
    return EXIT_OK if ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperlap", description="Diffusion-defined hypergraph Laplacian toolkit.")
    p.add_argument("--version", action="version", version=f"hyperlap {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, instance=True, fmt=("json",)):
        if instance:
            sp.add_argument("--instance", required=True, help="bundled name (louis4, nested5, twoedge4) or JSON file")
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", dest="fmt", choices=fmt, default=fmt[0])

    sp = sub.add_parser("apply", help="apply the operator to one vector")
    common(sp)
    sp.add_argument("--vector", required=True)
    sp.add_argument("--space", choices=[s.value for s in Space], default="weighted")
    sp.add_argument("--even-split", action="store_true", help="use the even-split construction instead")
    sp.add_argument("--method", choices=["auto", "brute", "cut"], default="auto")
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("simulate", help="deterministic diffusion from a measure vector")
    common(sp, fmt=("csv", "json"))
    sp.add_argument("--phi0", required=True, help="measure vector, or point:<node>")
    sp.add_argument("--t-end", type=float, required=True)
    sp.add_argument("--dt-max", type=float, default=1e-3)
    sp.add_argument("--record-every", type=int, default=1)
    sp.add_argument("--no-event-guard", action="store_true", help="fixed steps of exactly dt-max")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sde", help="stochastic diffusion (Euler-Maruyama)")
    common(sp, fmt=("json", "csv"))
    sp.add_argument("--phi0", required=True)
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--t-end", type=float, required=True)
    sp.add_argument("--traj", type=int, default=1)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--checkpoints", help="comma-separated times (default: t-end)")
    sp.add_argument("--gamma2", type=float, help="spectral gap to use (default: computed)")
    sp.add_argument("--trajectory-index", type=int, default=0, help="trajectory written in csv format")
    sp.add_argument("--record-every", type=int, default=1)
    sp.set_defaults(func=cmd_sde)

    sp = sub.add_parser("spectrum", help="procedural minimizers gamma_1..gamma_k")
    common(sp)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--minimax", action="store_true", help="also estimate xi_k and zeta_k")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify", help="certify gamma_k by the per-permutation programs")
    common(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--priors", help="JSON list of weighted-space prior vectors")
    sp.add_argument("--method", choices=["faces", "projected_gradient"], default="faces")
    sp.add_argument("--restarts", type=int, default=256)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify, tol=1e-7)

    sp = sub.add_parser("examples", help="run the golden acceptance suite")
    common(sp, instance=False, fmt=("table", "json"))
    sp.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    sp.set_defaults(func=cmd_examples)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tol = args.tol
    if not tol > 0:
        print(f"hyperlap: error: --tol must be positive, got {tol!r}", file=sys.stderr)
        return EXIT_INPUT
    cfg = CommandConfig(args.subcommand, getattr(args, "instance", None), tol, getattr(args, "seed", None), args.out, args.fmt)
    try:
        return args.func(args, cfg)
    except (InputError, HypergraphError) as exc:
        print(f"hyperlap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"hyperlap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
