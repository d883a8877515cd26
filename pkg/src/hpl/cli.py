"""
Command line interface.

    hpl run <config>
    hpl audit <run-dir> --m 0,1,2 --pairs "0.2,0.4;0.3,0.5"
    hpl derive [--json] [--out DIR]
    hpl sweep <config> --grid dt=4e-3,2e-3,1e-3

Exit codes: 0 ok, 1 derivation mismatch, 2 configuration error,
3 numerical failure (NaN or CFL), 4 blowup suspected.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__, snapshot
from .audit import CadenceError, energy_audit, theorem_ledger
from .config import ConfigError, RunConfig, emit, parse_config, parse_override
from .convergence import refinement_ratio, self_convergence_order
from .gevrey import assumption_lhs, derivative_ladder, estimate_radius, weighted_sup
from .model import ModelKind, NonFiniteError, physical_u
from .stepper import CFLError, State, energy, max_abs_u, run

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BLOWUP = 0, 1, 2, 3, 4


def _log(msg, quiet=False):
    if not quiet:
        print(msg, flush=True)


def _err(msg):
    print(f"hpl: error: {msg}", file=sys.stderr, flush=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _file_record(path: Path) -> dict:
    data = path.read_bytes()
    return {"bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}


def _metadata(out: Path, cfg: RunConfig, started: float, extra: dict):
    files = {p.relative_to(out).as_posix(): _file_record(p)
             for p in sorted(out.rglob("*")) if p.is_file() and p.name != "metadata.json"}
    meta = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "grid": {"Nx": cfg.Nx, "Ny": cfg.Ny, "Y": cfg.Y, "Lx": cfg.Lx, "ell": cfg.ell,
                 "dealias_cutoff": cfg.grid().dealias_cutoff},
        "model": cfg.model,
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_clock_s": time.time() - started,
        "files": files,
        **extra,
    }
    _write_json(out / "metadata.json", meta)


# run ------------------------------------------------------------------------------

def _gevrey_monitor(cfg: RunConfig, grid, outer, ladders: list):
    M = cfg.ladder_order()
    sigma_fit = cfg.sigma
    hyper = cfg.kind is ModelKind.HYPERBOLIC

    def gevrey(s: State):
        u = physical_u(grid, s.u, outer, s.t)
        lad = derivative_ladder(grid, u, s.ut if hyper else None, M)
        ladders.append((s.t, lad))
        out = {}
        for rho, rt, sigma in cfg.gevrey:
            out[f"rho={rho:g},sigma={sigma:g}"] = weighted_sup(lad, rho, sigma)
            out[f"rho={rt:g},sigma={sigma:g}"] = weighted_sup(lad, rt, sigma)
        fit = estimate_radius(lad, sigma_fit)
        out["rho_hat"] = fit.rho_hat if fit.rho_hat is not None else float("nan")
        out["fit_quality"] = fit.fit_quality
        return out
    return gevrey


def execute(cfg: RunConfig, out: Path | None = None, quiet: bool = False) -> int:
    """Run the solver for ``cfg`` and write every report file; returns the exit code."""
    started = time.time()
    out = Path(out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    text = emit(cfg)
    (out / "config.toml").write_text(text, encoding="utf-8")
    _log("effective config:\n" + text.rstrip(), quiet)

    preset = cfg.build_preset()
    grid = cfg.grid()
    outer = preset.outer
    ladders: list = []

    def assumption(s: State):
        return assumption_lhs(grid, physical_u(grid, s.u, outer, s.t))

    monitors = [energy, max_abs_u, assumption]
    if cfg.gevrey:
        monitors.append(_gevrey_monitor(cfg, grid, outer, ladders))

    status, code, error = "completed", EXIT_OK, None
    try:
        result = run(cfg.kind, preset.state, cfg.stepper(), outer, monitors)
    except (NonFiniteError, CFLError) as exc:
        _err(f"run {out}: {exc}")
        _metadata(out, cfg, started, {"status": "numerical failure", "error": str(exc),
                                      "exit_code": EXIT_NUMERIC})
        return EXIT_NUMERIC
    if result.blew_up:
        status, code = result.status, EXIT_BLOWUP
        error = f"max|u| exceeded {cfg.blowup_threshold:g} at t={result.t_stop:.6g}"
        _err(f"run {out}: {error}")

    # series
    keys = list(result.series)
    _write_csv(out / "series.csv", ["t"] + keys,
               ([t] + [result.series[k][i] for k in keys] for i, t in enumerate(result.times)))

    # snapshots
    if cfg.snapshot_every:
        sdir = out / "snapshots"
        sdir.mkdir(exist_ok=True)
        for i, s in enumerate(result.snapshots):
            snapshot.write(sdir / f"snap_{i:06d}.hpf", grid, s.u, s.ut, s.t)
    fin = result.final
    snapshot.write(out / "final.hpf", grid, fin.u, fin.ut, fin.t)

    summary = {"status": status, "steps": result.steps, "t_stop": result.t_stop,
               "t": result.times, "m": [], "norms": {}, "rho_hat": [], "fit_quality": [],
               "Cstar": max([1.0] + result.series.get("assumption", [])), "Chat": {}}
    if cfg.gevrey:
        M = cfg.ladder_order()
        summary["m"] = list(range(M + 1))
        _write_csv(out / "gevrey.csv", ["t", "m", "dt_norm", "dy_norm", "m_norm", "b"],
                   ([t, m, *lad[m], float(lad[m].sum())] for t, lad in ladders for m in range(M + 1)))
        summary["norms"] = {k.split(".", 1)[1]: v for k, v in result.series.items()
                            if k.startswith("gevrey.rho=")}
        summary["rho_hat"] = result.series.get("gevrey.rho_hat", [])
        summary["fit_quality"] = result.series.get("gevrey.fit_quality", [])
        summary["Chat"] = _ledger_summary(cfg, result, outer)

    _write_json(out / "summary.json", summary)
    _figures(out, cfg, result, ladders, quiet)
    _metadata(out, cfg, started, {"status": status, "exit_code": code, "error": error})
    _log(f"run {out}: {status} at t={result.t_stop:.6g} after {result.steps} steps", quiet)
    return code


def _ledger_summary(cfg, result, outer):
    if cfg.kind is not ModelKind.HYPERBOLIC or len(result.snapshots) < 2:
        return {}
    hist = SimpleNamespace(kind=cfg.kind, outer=outer, config=cfg.stepper(), snapshots=result.snapshots)
    out = {}
    for sigma in sorted({s for _, _, s in cfg.gevrey}):
        pairs = [(r, rt) for r, rt, s in cfg.gevrey if s == sigma]
        led = theorem_ledger(hist, pairs, sigma, M=cfg.ladder_order())
        for p in led.pairs:
            out[f"rho={p.rho:g},rho_tilde={p.rho_tilde:g},sigma={sigma:g}"] = {
                "sup": p.sup, "stabilized": p.stabilized(), "final": float(p.chat[-1])}
    return out


def _figures(out, cfg, result, ladders, quiet):
    from . import plotting

    if not result.times:
        return
    t = result.times
    plotting.plot_series(out / "series.png", t, result.series, ["energy", "max_abs_u", "assumption"])
    if cfg.gevrey:
        norms = [k for k in result.series if k.startswith("gevrey.rho=")]
        plotting.plot_series(out / "gevrey_norms.png", t, result.series, norms, logy=True)
        pick = sorted({0, len(ladders) // 2, len(ladders) - 1})
        plotting.plot_ladder(out / "gevrey_ladder.png", {ladders[i][0]: ladders[i][1] for i in pick},
                             cfg.sigma)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    return execute(cfg, Path(args.out) if args.out else None, args.quiet)


# audit ------------------------------------------------------------------------------

def _parse_pairs(text: str):
    pairs = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = (float(v) for v in item.split(","))
        except ValueError:
            raise ConfigError(f"pair {item!r} must look like rho,rho_tilde") from None
        pairs.append((a, b))
    if not pairs:
        raise ConfigError("--pairs needs at least one rho,rho_tilde pair")
    return pairs


def load_history(run_dir: Path):
    cfg = parse_config(run_dir / "config.toml")
    files = sorted((run_dir / "snapshots").glob("snap_*.hpf"))
    if not files:
        raise ConfigError(f"{run_dir} has no stored snapshots; rerun with snapshot_every >= 1")
    grid = cfg.grid()
    snaps = []
    for f in files:
        g, u, ut, t = snapshot.read(f, grid.dealias_cutoff)
        if ut is None:
            raise ConfigError(f"{f} is a plain snapshot; the audit needs checkpoints with u_t")
        snaps.append(State(grid, u, ut, t))
    outer = cfg.build_preset().outer
    return cfg, SimpleNamespace(kind=cfg.kind, outer=outer, config=cfg.stepper(), snapshots=snaps)


def cmd_audit(args) -> int:
    from . import plotting

    run_dir = Path(args.run_dir)
    cfg, hist = load_history(run_dir)
    ms = [int(v) for v in str(args.m).split(",") if v.strip()]
    pairs = _parse_pairs(args.pairs) if args.pairs else [(r, rt) for r, rt, _ in cfg.gevrey]
    sigma = args.sigma if args.sigma is not None else cfg.sigma
    out = Path(args.out) if args.out else run_dir / "audit"
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    report = {"energy": {}, "ledger": {}}
    try:
        for m in ms:
            a = energy_audit(hist, m)
            report["energy"][str(m)] = {"lhs": a.lhs, "rhs": a.rhs, "residual": a.residual,
                                        "lhs_total": a.lhs_total}
            _write_csv(out / f"energy_m{m}.csv",
                       ["t", "half_dt_norm", "half_dy_norm", "damping", "initial", "pairing", "commutator",
                        "residual"],
                       ([a.times[i], *a.lhs_series[i], a.initial, a.pairing_series[i],
                         a.commutator_series[i], a.residual_series[i]] for i in range(len(a.times))))
            plotting.plot_audit(out / f"energy_m{m}.png", a)
            _log(f"energy identity m={m}: LHS={a.lhs_total:.6e} residual={a.residual:.3e}", args.quiet)
        if pairs:
            if not 1 <= sigma <= 2:
                raise ConfigError(f"sigma={sigma} violates 1 ≤ σ ≤ 2")
            led = theorem_ledger(hist, pairs, sigma, M=cfg.gevrey_M or None)
            report["ledger"] = {"sigma": led.sigma, "rho0": led.rho0, "C0": led.C0, "Cstar": led.cstar,
                                "pairs": {f"{p.rho:g},{p.rho_tilde:g}": {"sup": p.sup,
                                                                         "stabilized": p.stabilized()}
                                          for p in led.pairs}}
            _write_csv(out / "ledger.csv", ["t", "rho", "rho_tilde", "lhs", "I1", "I2", "Chat", "running_sup"],
                       ([p.times[i], p.rho, p.rho_tilde, p.lhs[i], p.I1[i], p.I2[i], p.chat[i],
                         p.running_sup[i]] for p in led.pairs for i in range(len(p.times))))
            plotting.plot_ledger(out / "ledger.png", led.pairs)
            for p in led.pairs:
                _log(f"ledger rho={p.rho:g} rho~={p.rho_tilde:g}: sup Chat={p.sup:.4e} "
                     f"stabilized={p.stabilized()}", args.quiet)
    except (CadenceError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    _write_json(out / "audit.json", report)
    _metadata(out, cfg, started, {"status": "completed", "exit_code": EXIT_OK, "source": str(run_dir)})
    return EXIT_OK


# derive -------------------------------------------------------------------------------

def derivation_outputs(drop_damping: bool = False):
    from .expansion import derive_layer_system

    d = derive_layer_system(drop_damping=drop_damping)
    records = d.log.records
    return d.log.text(), json.dumps(records, ensure_ascii=False, indent=1) + "\n"


def cmd_derive(args) -> int:
    from .expansion import DerivationMismatch

    try:
        text, js = derivation_outputs(args.drop_damping)
    except DerivationMismatch as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "derivation.log").write_text(text, encoding="utf-8")
        (out / "derivation.json").write_text(js, encoding="utf-8")
    sys.stdout.write(js if args.json else text)
    return EXIT_OK


# sweep -------------------------------------------------------------------------------

def _threads() -> int | None:
    v = os.environ.get("HPL_THREADS")
    if not v:
        return None
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"HPL_THREADS must be a positive integer, got {v!r}") from None
    if n < 1:
        raise ConfigError(f"HPL_THREADS must be a positive integer, got {v!r}")
    return n


def _child_env(threads: int) -> dict:
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    src = str(Path(__file__).resolve().parents[1])
    env["PYTHONPATH"] = src + (os.pathsep + env["PYTHONPATH"] if env.get("PYTHONPATH") else "")
    return env


def cmd_sweep(args) -> int:
    base = parse_config(args.config)
    axes = [parse_override(g) for g in args.grid]
    if not axes:
        raise ConfigError("sweep needs at least one --grid key=v1,v2,...")
    root = Path(args.out or base.output)
    members = []
    for i, combo in enumerate(itertools.product(*[vals for _, vals in axes])):
        overrides = {k: v for (k, _), v in zip(axes, combo)}
        run_dir = root / f"run_{i:03d}"
        cfg = base.with_overrides({**overrides, "output": str(run_dir)})
        members.append({"id": f"run_{i:03d}", "dir": str(run_dir), "overrides": overrides, "config": cfg})
    root.mkdir(parents=True, exist_ok=True)
    threads = _threads()
    workers = args.workers or threads or min(len(members), os.cpu_count() or 1)
    if threads:
        workers = min(workers, threads)
    env = _child_env(1)

    def launch(mem):
        run_dir = Path(mem["dir"])
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / "config.toml"
        path.write_text(emit(mem["config"]), encoding="utf-8")
        proc = subprocess.run([sys.executable, "-m", "hpl.cli", "run", str(path), "--quiet"],
                              env=env, capture_output=True, text=True)
        return proc.returncode, proc.stderr

    _log(f"sweep: {len(members)} runs, {workers} workers", args.quiet)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(launch, members))
    manifest = {"base": str(args.config), "axes": {k: v for k, v in axes}, "runs": []}
    worst = EXIT_OK
    for mem, (code, stderr) in zip(members, results):
        entry = {"id": mem["id"], "dir": mem["dir"], "overrides": mem["overrides"], "exit_code": code,
                 "files": sorted(p.relative_to(mem["dir"]).as_posix()
                                 for p in Path(mem["dir"]).rglob("*") if p.is_file())}
        if code:
            entry["error"] = stderr.strip().splitlines()[-1] if stderr.strip() else ""
            _err(f"{mem['id']} exited with {code}: {entry['error']}")
            worst = max(worst, code)
        manifest["runs"].append(entry)
    if len(axes) == 1 and len(members) >= 3 and worst == EXIT_OK:
        manifest["convergence"] = _convergence(axes[0][0], members)
        for c in manifest["convergence"]:
            _log(f"observed order ({axes[0][0]}, runs {', '.join(c['runs'])}): {c['order']:.4f}", args.quiet)
    _write_json(root / "manifest.json", manifest)
    return worst


def _convergence(key, members):
    finer_is_larger = key in ("Nx", "Ny")
    ordered = sorted(members, key=lambda m: float(m["overrides"][key]), reverse=not finer_is_larger)
    out = []
    for trip in zip(ordered, ordered[1:], ordered[2:]):
        vals = [m["overrides"][key] for m in trip]
        sols = []
        for m in trip:
            g, u, _, _ = snapshot.read(Path(m["dir"]) / "final.hpf")
            sols.append((g, u))
        ratio = refinement_ratio(key, vals)
        out.append({"runs": [m["id"] for m in trip], "values": vals, "ratio": ratio,
                    "order": self_convergence_order(sols, ratio)})
    return out


# entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hpl", description="Hyperbolic Prandtl boundary-layer laboratory")
    p.add_argument("--version", action="version", version=f"hpl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one configuration and write its report")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="energy identity and a priori ledger over a stored run")
    a.add_argument("run_dir")
    a.add_argument("--m", default="0", help="tangential order(s), comma separated")
    a.add_argument("--pairs", help='"rho,rho_tilde;..." (defaults to the run config)')
    a.add_argument("--sigma", type=float)
    a.add_argument("--out")
    a.add_argument("--quiet", action="store_true")
    a.set_defaults(func=cmd_audit)

    d = sub.add_parser("derive", help="boundary-layer derivation by formal expansion")
    d.add_argument("--json", action="store_true", help="print JSON records instead of the log")
    d.add_argument("--out", help="also write derivation.log and derivation.json here")
    d.add_argument("--drop-damping", action="store_true", help="mutation check: remove the d_t u term")
    d.set_defaults(func=cmd_derive)

    s = sub.add_parser("sweep", help="fan out runs over a parameter grid")
    s.add_argument("config")
    s.add_argument("--grid", action="append", default=[], help="key=v1,v2,... (repeatable)")
    s.add_argument("--workers", type=int)
    s.add_argument("--out")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
