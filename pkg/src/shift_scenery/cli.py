"""Config-driven experiment runner.

Subcommands: validate, sample, verify-usm, verify-q, clt, gibbs-bounds,
demo-nonergodic.  Every command reads one JSON config (seed mandatory), writes
CSV tables and structured-text reports into --out, and stamps each file with
a manifest line carrying the config digest and seed.  Re-running a command
with the same config gives byte-identical primary outputs; --threads changes
scheduling only, never results.

Exit codes: 0 success, 2 invariant/unsupported-model failure, 3 malformed
config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from ._parallel import map_indexed
from .battery import battery_from_config, default_battery
from .errors import (
    ConfigError,
    DegenerateIndicatorError,
    InvalidModelError,
    PeriodicChainError,
    ShiftSceneryError,
    UnsupportedModelError,
)
from .jacobian import limit_mass_exact, limit_mass_montecarlo
from .models import MixtureModel, model_from_dict, model_hash, validate_model
from .sampling import GENERATOR_NAME, derive_trial_seed, sample_future
from .scenery import (
    GeneratingSet,
    blowup_distribution,
    distribution_distance,
    scenery_checkpoints,
    scenery_distribution,
)
from .stats import clt_ensemble, gibbs_equivalence_audit, random_prefixes

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3


# ---------------------------------------------------------------------------
# config and file plumbing


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _effective_config(cfg: dict, seed_override) -> dict:
    cfg = dict(cfg)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    seed = cfg.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("config needs a nonnegative integer 'seed' (wall-clock seeding is banned)")
    return cfg


def _digest(cfg: dict) -> str:
    payload = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _manifest(cfg: dict) -> str:
    return f"# config_sha256={_digest(cfg)} seed={cfg['seed']} rng={GENERATOR_NAME}"


def _model_of(cfg: dict):
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' object")
    return model_from_dict(cfg["model"])


def _int_field(cfg, key, default=None, minimum=1):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"config needs an integer '{key}'")
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ConfigError(f"'{key}' must be an integer >= {minimum}, got {v!r}")
    return v


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _fmt_word(w) -> str:
    return "-".join(str(int(s)) for s in w)


def _write_table(path: Path, manifest: str, header, rows) -> None:
    lines = [manifest, ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_report(path: Path, manifest: str, body: str) -> None:
    path.write_text(manifest + "\n" + body + "\n", encoding="utf-8")


def _checkpoints(N: int) -> list[int]:
    out = []
    n = 100
    while n < N:
        out.append(n)
        n *= 10
    out.append(N)
    return out


def _resolve_battery(cfg, model, depth):
    raw = cfg.get("battery")
    if isinstance(raw, list):
        battery = battery_from_config(raw, model)
    else:
        opts = raw if isinstance(raw, dict) else {}
        battery = default_battery(
            model,
            max_word_len=opts.get("max_word_len", min(3, depth)),
            count=opts.get("count", 20),
        )
    for gset in battery:
        if len(gset.e) > depth:
            raise ConfigError(
                f"battery word {_fmt_word(gset.e)} deeper than the fingerprint depth {depth}"
            )
    return battery


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: dict, out: Path, threads: int) -> int:
    manifest = _manifest(cfg)
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' object")
    try:
        model = model_from_dict(cfg["model"])
    except InvalidModelError as exc:
        _write_report(out / "validation_report.txt", manifest, f"construction: FAIL\nreason: {exc}")
        print(f"validation: FAIL ({exc})")
        return EXIT_INVARIANT
    report = validate_model(model, max_word_len=cfg.get("validate_depth", 6))
    _write_report(out / "validation_report.txt", manifest, report.to_text())
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_sample(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    N = _int_field(cfg, "N")
    traj = sample_future(model, N, cfg["seed"])
    _write_table(
        out / "trajectory.csv",
        _manifest(cfg),
        ["n", "symbol"],
        [(n, s) for n, s in enumerate(traj.future)],
    )
    sidecar = {
        "seed": traj.seed,
        "model": model_hash(model),
        "length": N,
        "rng": GENERATOR_NAME,
        "component": traj.component,
    }
    (out / "trajectory_manifest.json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {N} symbols to {out / 'trajectory.csv'}")
    return EXIT_OK


def _write_atom_table(cfg, out, model, N, depth, seed):
    """Atom table of the first trajectory's final scenery: one row per atom,
    depth and weight followed by the k^depth cylinder masses."""
    traj = sample_future(model, N, derive_trial_seed(seed, 0))
    sc = scenery_distribution(model, traj, N, depth)
    header = ["depth", "weight"] + [f"p{i}" for i in range(model.k**depth)]
    _write_table(out / "scenery_atoms.csv", _manifest(cfg), header, sc.export_rows())


def _usm_ergodic(cfg, out, threads, model):
    seed = cfg["seed"]
    depth = _int_field(cfg, "depth", 3)
    N = _int_field(cfg, "N")
    T = _int_field(cfg, "trajectories", 3)
    cps = _checkpoints(N)
    reference = blowup_distribution(model, depth)
    battery = _resolve_battery(cfg, model, depth)
    exact = [limit_mass_exact(model, g) for g in battery]

    def run(t):
        traj = sample_future(model, N, derive_trial_seed(seed, t))
        rows = []
        for cp, sc in zip(cps, scenery_checkpoints(model, traj, cps, depth)):
            dist = distribution_distance(sc, reference)
            worst = max(abs(sc.evaluate(g) - q) for g, q in zip(battery, exact))
            rows.append((t, cp, dist, worst))
        return rows

    results = map_indexed(run, T, threads)
    rows = [row for chunk in results for row in chunk]
    _write_table(
        out / "usm_convergence.csv",
        _manifest(cfg),
        ["trajectory", "N", "distance_to_limit", "battery_max_abs_err"],
        rows,
    )
    _write_atom_table(cfg, out, model, N, depth, seed)
    final = [r for r in rows if r[1] == N]
    body = "\n".join(
        [
            f"model: {model_hash(model)}",
            f"trajectories: {T}",
            f"final_N: {N}",
            f"max_distance_to_limit: {max(r[2] for r in final)!r}",
            f"max_battery_abs_err: {max(r[3] for r in final)!r}",
            "verdict: scenery averages contract toward the limit distribution",
        ]
    )
    _write_report(out / "usm_summary.txt", _manifest(cfg), body)
    return EXIT_OK


def _usm_mixture(cfg, out, threads, model: MixtureModel):
    seed = cfg["seed"]
    depth = _int_field(cfg, "depth", 3)
    N = _int_field(cfg, "N")
    T = _int_field(cfg, "trajectories", 3)
    tol = float(cfg.get("component_tolerance", 0.02))
    sep = float(cfg.get("separation_threshold", 0.1))
    cps = _checkpoints(N)
    refs = [blowup_distribution(c, depth) for c in model.components]

    def run(t):
        traj = sample_future(model, N, derive_trial_seed(seed, t))
        rows = []
        for cp, sc in zip(cps, scenery_checkpoints(model, traj, cps, depth)):
            dists = [distribution_distance(sc, ref) for ref in refs]
            nearest = int(np.argmin(dists))
            rows.append((t, cp, traj.component, *dists, nearest))
        return rows

    results = map_indexed(run, T, threads)
    rows = [row for chunk in results for row in chunk]
    dist_cols = [f"distance_to_component_{i}" for i in range(len(refs))]
    _write_table(
        out / "usm_convergence.csv",
        _manifest(cfg),
        ["trajectory", "N", "sampled_component", *dist_cols, "nearest_component"],
        rows,
    )
    _write_atom_table(cfg, out, model, N, depth, seed)
    final = [r for r in rows if r[1] == N]
    own = [r[3 + r[2]] for r in final]
    seen = sorted({r[2] for r in final})
    seps = [
        distribution_distance(refs[i], refs[j])
        for i in range(len(refs))
        for j in range(i + 1, len(refs))
    ]
    split = len(seen) > 1 and max(own) <= tol and min(seps) > sep
    body_lines = [
        f"trajectories: {T}",
        f"final_N: {N}",
        f"components_sampled: {seen}",
        f"max_distance_to_own_component: {max(own)!r}",
        f"min_component_separation: {min(seps)!r}",
    ]
    if split:
        body_lines.append(
            "verdict: not uniformly scaling - per-trajectory limits split across ergodic components"
        )
    else:
        body_lines.append("verdict: inconclusive at these settings")
    _write_report(out / "usm_summary.txt", _manifest(cfg), "\n".join(body_lines))
    return EXIT_OK


def cmd_verify_usm(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    if isinstance(model, MixtureModel):
        return _usm_mixture(cfg, out, threads, model)
    return _usm_ergodic(cfg, out, threads, model)


def cmd_verify_q(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    seed = cfg["seed"]
    depth = _int_field(cfg, "depth", 3)
    mc_samples = _int_field(cfg, "mc_samples", 100_000)
    tol_emp = float(cfg.get("empirical_tolerance", 0.012))

    if isinstance(model, MixtureModel):
        # No single limit distribution exists; expose each component's.
        rows = []
        long_rows = []
        for ci, comp in enumerate(model.components):
            battery = _resolve_battery(cfg, comp, depth)
            for bi, gset in enumerate(battery):
                q = limit_mass_exact(comp, gset)
                est, se = limit_mass_montecarlo(
                    comp, gset, mc_samples, derive_trial_seed(seed, 1000 * (ci + 1) + bi)
                )
                flag = abs(est - q) > 4 * se if se > 0 else est != q
                rows.append((ci, _fmt_word(gset.e), gset.a, gset.b, q, est, se, est - q, flag))
                long_rows.append((ci, _fmt_word(gset.e), gset.a, gset.b, "exact", q, 0.0))
                long_rows.append((ci, _fmt_word(gset.e), gset.a, gset.b, "montecarlo", est, se))
        _write_table(
            out / "verify_q.csv",
            _manifest(cfg),
            ["component", "e", "a", "b", "q_exact", "q_montecarlo", "mc_se", "delta_mc", "flag_mc"],
            rows,
        )
        _write_table(
            out / "q_evaluations.csv",
            _manifest(cfg),
            ["component", "e", "a", "b", "method", "value", "standard_error"],
            long_rows,
        )
        return EXIT_OK

    N = _int_field(cfg, "N")
    battery = _resolve_battery(cfg, model, depth)
    traj = sample_future(model, N, derive_trial_seed(seed, 0))
    sc = scenery_distribution(model, traj, N, depth)

    def run(bi):
        gset = battery[bi]
        q = limit_mass_exact(model, gset)
        est, se = limit_mass_montecarlo(model, gset, mc_samples, derive_trial_seed(seed, 1000 + bi))
        emp = sc.evaluate(gset)
        return gset, q, est, se, emp

    rows = []
    long_rows = []
    flagged = 0
    for gset, q, est, se, emp in map_indexed(run, len(battery), threads):
        flag_mc = abs(est - q) > 4 * se if se > 0 else est != q
        flag_emp = abs(emp - q) > tol_emp
        flagged += int(flag_mc or flag_emp)
        rows.append(
            (
                _fmt_word(gset.e), gset.a, gset.b, q, est, se, emp,
                est - q, emp - q, flag_mc, flag_emp,
            )
        )
        long_rows.append((_fmt_word(gset.e), gset.a, gset.b, "exact", q, 0.0))
        long_rows.append((_fmt_word(gset.e), gset.a, gset.b, "montecarlo", est, se))
        long_rows.append((_fmt_word(gset.e), gset.a, gset.b, "empirical", emp, 0.0))
    _write_table(
        out / "verify_q.csv",
        _manifest(cfg),
        [
            "e", "a", "b", "q_exact", "q_montecarlo", "mc_se", "empirical",
            "delta_mc", "delta_empirical", "flag_mc", "flag_empirical",
        ],
        rows,
    )
    _write_table(
        out / "q_evaluations.csv",
        _manifest(cfg),
        ["e", "a", "b", "method", "value", "standard_error"],
        long_rows,
    )
    print(f"verify-q: {len(battery)} generating sets, {flagged} flagged")
    return EXIT_OK


def _parse_indicator(cfg, model):
    raw = cfg.get("indicator")
    if not isinstance(raw, dict):
        raise ConfigError("config needs an 'indicator' object")
    if "generating_set" in raw:
        spec = raw["generating_set"]
        if not isinstance(spec, dict) or not {"e", "a", "b"} <= set(spec):
            raise ConfigError("indicator.generating_set needs 'e', 'a', 'b'")
        return GeneratingSet(model.alphabet.word(spec["e"]), float(spec["a"]), float(spec["b"]))
    if "symbol_set" in raw:
        spec = raw["symbol_set"]
        if not isinstance(spec, list) or not spec:
            raise ConfigError("indicator.symbol_set must be a nonempty list of symbols")
        return frozenset(int(s) for s in spec)
    raise ConfigError("indicator must carry 'generating_set' or 'symbol_set'")


def cmd_clt(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    if isinstance(model, MixtureModel):
        raise UnsupportedModelError("fluctuation ensembles need a single ergodic component")
    indicator = _parse_indicator(cfg, model)
    N = _int_field(cfg, "N")
    M = _int_field(cfg, "trials", 300)
    report = clt_ensemble(model, indicator, N, M, cfg["seed"], threads=threads)
    _write_report(out / "clt_report.txt", _manifest(cfg), report.to_text())
    _write_table(
        out / "clt_trials.csv",
        _manifest(cfg),
        ["statistic"],
        [(v,) for v in report.statistics],
    )
    print(report.to_text())
    return EXIT_OK


def cmd_gibbs_bounds(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    count = _int_field(cfg, "prefixes", 500)
    max_len = _int_field(cfg, "prefix_max_len", 50)
    depth = _int_field(cfg, "audit_depth", 6)
    prefixes = random_prefixes(model, count, max_len, cfg["seed"])
    report = gibbs_equivalence_audit(model, prefixes, depth)
    _write_report(out / "equivalence_report.txt", _manifest(cfg), report.to_text())
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_demo_nonergodic(cfg: dict, out: Path, threads: int) -> int:
    model = _model_of(cfg)
    if not isinstance(model, MixtureModel):
        raise UnsupportedModelError("the non-ergodic demo needs a mixture model")
    seed = cfg["seed"]
    depth = _int_field(cfg, "depth", 3)
    N = _int_field(cfg, "N", 10_000)
    T = _int_field(cfg, "trajectories", 50)
    tol = float(cfg.get("component_tolerance", 0.02))
    sep = float(cfg.get("separation_threshold", 0.1))
    refs = [blowup_distribution(c, depth) for c in model.components]

    def run(t):
        traj = sample_future(model, N, derive_trial_seed(seed, t))
        sc = scenery_distribution(model, traj, N, depth)
        dists = [distribution_distance(sc, ref) for ref in refs]
        return (t, traj.component, *dists, int(np.argmin(dists)))

    rows = map_indexed(run, T, threads)
    dist_cols = [f"distance_to_component_{i}" for i in range(len(refs))]
    _write_table(
        out / "nonergodic_clusters.csv",
        _manifest(cfg),
        ["trajectory", "sampled_component", *dist_cols, "nearest_component"],
        rows,
    )
    own = [row[2 + row[1]] for row in rows]
    seen = sorted({row[1] for row in rows})
    seps = [
        distribution_distance(refs[i], refs[j])
        for i in range(len(refs))
        for j in range(i + 1, len(refs))
    ]
    split = len(seen) > 1 and max(own) <= tol and min(seps) > sep
    body = "\n".join(
        [
            f"trajectories: {T}",
            f"steps: {N}",
            f"components_sampled: {seen}",
            f"max_distance_to_own_component: {max(own)!r}",
            f"min_component_separation: {min(seps)!r}",
            f"component_tolerance: {tol!r}",
            f"separation_threshold: {sep!r}",
            (
                "verdict: not uniformly scaling - trajectory sceneries cluster at "
                "distinct per-component limits"
                if split
                else "verdict: inconclusive at these settings"
            ),
        ]
    )
    _write_report(out / "nonergodic_verdict.txt", _manifest(cfg), body)
    print(body)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


_COMMANDS = {
    "validate": cmd_validate,
    "sample": cmd_sample,
    "verify-usm": cmd_verify_usm,
    "verify-q": cmd_verify_q,
    "clt": cmd_clt,
    "gibbs-bounds": cmd_gibbs_bounds,
    "demo-nonergodic": cmd_demo_nonergodic,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shift-scenery",
        description="Reproducible verification pipelines for scaling sceneries of shift-invariant measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _effective_config(_load_config(args.config), args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, max(1, args.threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        InvalidModelError,
        UnsupportedModelError,
        DegenerateIndicatorError,
        PeriodicChainError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
