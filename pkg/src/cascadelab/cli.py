"""Command line front end for the cascade laboratory.

One subcommand per pipeline stage plus a `pipeline` orchestrator that
runs the stages in dependency order and emits a reproducible manifest.
All artifacts are JSON or CSV; JSON documents are written with sorted
keys and a trailing newline so reruns are byte-identical.

Exit codes: 0 on success, 1 when a computed verdict is negative (a
verifier rejects, a slope misses its target, no admissible convergent),
2 on errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    PRESET_DIGITS,
    LabConfig,
    _rational_digits,
    load_config,
    loads_config,
)
from .diophantine import (
    ApproxFunction,
    ContinuedFraction,
    approximation_error,
    certify,
    expand,
    select_scaling,
    synthesize,
)
from .errors import (
    CapacityExceeded,
    CascadeNotFound,
    ConfigError,
    EmptyClass,
    InfeasibleRegime,
    InvalidInput,
    NoConvergentInRange,
    PlacementFailed,
    RadiusExceeded,
    SmallDivisor,
    StepSizeUnderflow,
    SupportViolation,
)
from .lambda_set import (
    build_genealogy,
    place,
    placed_from_json,
    placed_to_json,
    stats as lambda_stats,
    verify_properties,
)
from .lattice import PotentialSpec
from .nls_sim import (
    build_truncation,
    integrate_truncated,
    plan_strong_regime,
    shadow_sweep,
    sobolev_ratio_experiment,
)
from .normal_form import (
    check_cancellation,
    check_generator_commutes,
    completion_modes,
    default_etas,
    eta_sweep,
    make_instance,
    remainder_sweep,
)
from .resonance import build_report
from .toy_model import embed, find_cascade, integrate, slider_orbit

# negative verdicts: the computation succeeded and the answer is "no"
_VERDICT_ERRORS = (NoConvergentInRange, InfeasibleRegime, CascadeNotFound, SmallDivisor)
_STAGE_ERRORS = (
    InvalidInput,
    CapacityExceeded,
    PlacementFailed,
    EmptyClass,
    RadiusExceeded,
    SupportViolation,
    StepSizeUnderflow,
    ConfigError,
    OSError,
    ValueError,
)


# --- emission helpers ---------------------------------------------------------

def _np_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_np_default) + "\n"


def _emit_json(doc, out: str | None) -> None:
    text = _json_text(doc)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --- argument parsing helpers ---------------------------------------------------

def _load(path_or_name: str) -> LabConfig:
    """Config from a path, or from the packaged presets by bare name."""
    path = Path(path_or_name)
    if path.exists():
        return load_config(path)
    name = path_or_name if path_or_name.endswith(".toml") else path_or_name + ".toml"
    preset = resources.files("cascadelab").joinpath("presets", name)
    if preset.is_file():
        return loads_config(preset.read_bytes(), f"preset:{path_or_name}")
    raise ConfigError(f"no such config file or preset: {path_or_name}")


def _omega_cf(spec: str) -> ContinuedFraction:
    """Frequency spec to a continued fraction.

    Accepts a preset name (golden, sqrt2), an exact rational "p/q", a
    comma-separated digit list, or a decimal literal (expanded to depth
    30, non-rigorous enclosure).
    """
    s = spec.strip()
    if s in PRESET_DIGITS:
        return ContinuedFraction(PRESET_DIGITS[s], exact=False)
    if "/" in s:
        num, den = s.split("/", 1)
        return ContinuedFraction(_rational_digits(int(num), int(den)), exact=True)
    if "," in s:
        return ContinuedFraction(tuple(int(d) for d in s.split(",")), exact=False)
    try:
        return ContinuedFraction(_rational_digits(int(s), 1), exact=True)
    except ValueError:
        pass
    try:
        x = float(s)
    except ValueError:
        raise InvalidInput(f"cannot parse frequency spec {s!r}") from None
    return expand(x, 30)


def _omega_value(spec: str):
    """Exact Fraction for rational specs, float otherwise."""
    s = spec.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    try:
        return Fraction(int(s), 1)
    except ValueError:
        return _omega_cf(s).to_float()


def _potential_arg(spec: str | None) -> PotentialSpec | None:
    """Potential spec: "zero", "decay:amplitude:s0:seed", "table:file.json"."""
    if spec is None or spec == "zero":
        return None
    kind, _, rest = spec.partition(":")
    if kind == "decay":
        parts = rest.split(":")
        if len(parts) != 3:
            raise InvalidInput("decay potential spec is decay:amplitude:s0:seed")
        return PotentialSpec(
            kind="decay", amplitude=float(parts[0]), s0=float(parts[1]), seed=int(parts[2])
        )
    if kind == "table":
        doc = json.loads(Path(rest).read_text())
        entries = doc.get("entries")
        if not isinstance(entries, list):
            raise InvalidInput("table potential file needs an 'entries' list of [j, k, v]")
        return PotentialSpec(
            kind="table", table={(int(j), int(k)): float(v) for j, k, v in entries}
        )
    raise InvalidInput(f"unknown potential spec {spec!r}")


def _psi_arg(args) -> ApproxFunction:
    return ApproxFunction(args.psi_kind, c=args.psi_c, tau=args.psi_tau)


def _eta_grid(spec: str | None):
    if spec is None:
        return None
    parts = spec.split(":")
    if len(parts) != 3:
        raise InvalidInput("eta sweep spec is lo:hi:steps")
    return default_etas(float(parts[0]), float(parts[1]), int(parts[2]))


def _read_lambda(path: str):
    return placed_from_json(Path(path).read_text())


def _convergent_rows(cf: ContinuedFraction, psi: ApproxFunction, count: int | None):
    rows = []
    for conv in cf.convergents(count):
        _, hi = approximation_error(cf, conv)
        rows.append(
            {
                "p": conv.p,
                "q": conv.q,
                "error_bound": float(hi),
                "certified": certify(cf, conv, psi),
            }
        )
    return rows


def _add_psi_flags(sub) -> None:
    sub.add_argument("--psi-kind", default="log", choices=("log", "power"),
                     help="approximation function family")
    sub.add_argument("--psi-c", type=float, default=1.0, help="psi prefactor c")
    sub.add_argument("--psi-tau", type=float, default=1.0, help="psi exponent tau")


# --- diophantine commands -------------------------------------------------------

def cmd_convergents(args) -> int:
    cf = _omega_cf(args.omega)
    rows = _convergent_rows(cf, _psi_arg(args), args.count)
    _emit_json(rows, args.out)
    return 0


def cmd_synthesize(args) -> int:
    psi = ApproxFunction("power", c=args.c, tau=args.tau)
    cf = synthesize(psi, args.seed, args.depth)
    # the deepest digit exists to certify the level above it; only the
    # levels below the tip are rigorously certifiable from the digit list
    rows = _convergent_rows(cf, psi, None)[:-1]
    _emit_json(rows, args.out)
    return 0


def cmd_select_scaling(args) -> int:
    cfg = _load(args.config)
    freq = cfg.frequency
    selection = select_scaling(
        freq.continued_fraction(),
        freq.psi(),
        L_min=freq.L_min,
        N=cfg.block.N,
        R=cfg.experiment.settings.plan_R,
        sup_V=cfg.potential.sup_abs(),
        c_assumption=freq.c_assumption,
        q_min=freq.q_min,
    )
    _emit_json(selection.as_dict(), args.out)
    return 0


# --- lambda set commands --------------------------------------------------------

def _place_block(N: int, seed: int, box: int | None, p: int, q: int):
    placed = place(build_genealogy(N), seed, box)
    if (p, q) != (1, 1):
        placed = placed.scale(p, q)
    return placed


def cmd_build_lambda(args) -> int:
    placed = _place_block(args.N, args.seed, args.box, args.p, args.q)
    Path(args.out).write_text(placed_to_json(placed))
    return 0


def _verify_doc(report) -> dict:
    return {
        "ok": report.ok,
        "n_modes": report.n_modes,
        "n_triples_scanned": report.n_triples_scanned,
        "n_family_relations": report.n_family_relations,
        "n_trivial_relations": report.n_trivial_relations,
        "violations": [
            {"kind": v.kind, "detail": v.detail, "quadruple": [list(n) for n in v.quadruple]}
            for v in report.violations
        ],
    }


def cmd_verify_lambda(args) -> int:
    report = verify_properties(_read_lambda(args.lambda_file))
    _emit_json(_verify_doc(report), args.out)
    return 0 if report.ok else 1


# --- resonance command ----------------------------------------------------------

def _gap_constant(cf: ContinuedFraction, q: int, potential: PotentialSpec | None) -> float:
    lo, _ = cf.enclosure()
    sup_v = potential.sup_abs() if potential is not None else 0.0
    return float(lo) ** 2 * q**2 / 8.0 - 4.0 * sup_v


def cmd_resonance_report(args) -> int:
    placed = _read_lambda(args.lambda_file)
    cf = _omega_cf(args.omega)
    potential = _potential_arg(args.potential)
    report = build_report(
        placed,
        cf,
        _psi_arg(args),
        _gap_constant(cf, placed.q, potential),
        args.s0,
        potential,
        args.box,
    )
    _emit_json(report.as_dict(), args.out)
    return 0


# --- normal form command --------------------------------------------------------

def cmd_nf_check(args) -> int:
    placed = _read_lambda(args.lambda_file)
    support = placed.modes()
    omega = _omega_value(args.omega)
    potential = _potential_arg(args.potential)
    truncation = completion_modes(support)
    if args.truncation_radius is not None:
        radius = float(args.truncation_radius)
        kept = [n for n in truncation if n[0] ** 2 + n[1] ** 2 <= radius**2]
        truncation = sorted(set(kept) | set(support))
    instance = make_instance(
        support, omega, potential, args.divisor_floor, truncation
    )
    cancellation = check_cancellation(instance.table, instance.generator, omega, potential)
    commutator = check_generator_commutes(instance.generator)
    etas = _eta_grid(args.eta_sweep)
    gamma = eta_sweep(instance, etas, args.seed)
    remainder = remainder_sweep(instance, etas, args.seed)
    doc = {
        "support_size": len(support),
        "truncation_size": len(truncation),
        "cancellation_residual": cancellation,
        "commutator_residual": commutator,
        "gamma_deviation": gamma,
        "remainder": remainder,
        "verdicts": {
            "cancellation_ok": cancellation <= 1e-12,
            "gamma_slope_ok": abs(gamma["slope"] - 3.0) <= 0.1,
            "remainder_slope_ok": remainder["slope"] >= 4.7,
        },
    }
    _emit_json(doc, args.out)
    return 0 if all(doc["verdicts"].values()) else 1


# --- toy model commands ---------------------------------------------------------

def _toy_initial(spec: str, N: int) -> np.ndarray:
    if spec == "slider":
        return slider_orbit(0.0, N, start=1)
    doc = json.loads(Path(spec).read_text())
    re, im = doc.get("re"), doc.get("im")
    if not isinstance(re, list) or not isinstance(im, list) or len(re) != len(im):
        raise InvalidInput("initial state file needs equal-length 're' and 'im' lists")
    if len(re) != N:
        raise InvalidInput(f"initial state has {len(re)} modes, expected N={N}")
    return np.array(re, dtype=float) + 1j * np.array(im, dtype=float)


def _trajectory_rows(times, states_at):
    rows = []
    for t in times:
        state = states_at(t)
        row = [float(t)]
        for z in state:
            row.extend((float(z.real), float(z.imag)))
        rows.append(row)
    return rows


def cmd_toy_run(args) -> int:
    b0 = _toy_initial(args.initial, args.N)
    traj = integrate(b0, args.t_end, args.tol)
    times = np.linspace(0.0, args.t_end, args.samples)
    header = ["t"]
    for i in range(1, args.N + 1):
        header.extend((f"re_{i}", f"im_{i}"))
    _write_csv(args.out, header, _trajectory_rows(times, traj.state))
    return 0


def cmd_cascade_find(args) -> int:
    orbit = find_cascade(args.N, args.delta, args.eps, args.tol, args.budget)
    _emit_json(orbit.as_dict(), args.out)
    return 0


# --- experiment commands --------------------------------------------------------

def _experiment_inputs(cfg: LabConfig):
    """Placed block, cascade orbit, and truncation for the config."""
    block = cfg.block
    placed = _place_block(block.N, block.seed, block.box, block.p, block.q)
    toy = cfg.toy
    orbit = find_cascade(toy.N, toy.delta, toy.eps, toy.tol, toy.budget)
    trunc = build_truncation(placed, cfg.experiment.closure_depth, cfg.experiment.radius)
    return placed, orbit, trunc


def cmd_nls_run(args) -> int:
    cfg = _load(args.config)
    placed, orbit, trunc = _experiment_inputs(cfg)
    settings = cfg.experiment.settings
    lam = args.lam if args.lam is not None else cfg.experiment.lambdas[0]
    omega = settings.omega
    if omega is None:
        omega = Fraction(placed.p, placed.q)
    state = embed(orbit.b0, placed, lam)
    z0 = np.array([state[n] for n in trunc.modes])
    t_end = args.t_end if args.t_end is not None else lam**2 * orbit.T0
    traj = integrate_truncated(
        z0,
        t_end,
        omega,
        trunc,
        settings.potential,
        settings.tol,
        classes=(0, 2, 3, 4),
        frame="rotating",
    )
    times = np.linspace(0.0, t_end, args.samples)
    header = ["t"]
    for j, k in trunc.modes:
        header.extend((f"re_{j}_{k}", f"im_{j}_{k}"))
    _write_csv(args.out, header, _trajectory_rows(times, traj.vector))
    return 0


def cmd_shadow(args) -> int:
    cfg = _load(args.config)
    placed, orbit, trunc = _experiment_inputs(cfg)
    lams = (
        tuple(float(x) for x in args.lambdas.split(","))
        if args.lambdas
        else cfg.experiment.lambdas
    )
    reports, slope = shadow_sweep(cfg.experiment.settings, placed, orbit, lams, trunc)
    doc = _shadow_doc(reports, slope)
    _emit_json(doc, args.out)
    return 0 if doc["verdict"] else 1


def _shadow_doc(reports, slope) -> dict:
    slope_ok = slope <= -1.0
    return {
        "lambda_values": [r.lam for r in reports],
        "slope": slope,
        "slope_ok": slope_ok,
        "verdict": slope_ok and all(r.verdict for r in reports),
        "reports": [r.as_dict() for r in reports],
    }


def cmd_ratio(args) -> int:
    cfg = _load(args.config)
    placed, orbit, trunc = _experiment_inputs(cfg)
    lam = args.lam if args.lam is not None else cfg.experiment.ratio_lambda
    report = sobolev_ratio_experiment(cfg.experiment.settings, placed, orbit, lam, trunc)
    _emit_json(report.as_dict(), args.out)
    return 0 if report.verdict else 1


def cmd_plan_strong(args) -> int:
    cfg = _load(args.config)
    ex = cfg.experiment
    psi = ApproxFunction("power", c=ex.plan_c, tau=ex.plan_tau)
    settings = replace(
        cfg.experiment.settings, regime="strong", omega=cfg.frequency.omega(), psi=psi
    )
    plan = plan_strong_regime(settings, psi)
    _emit_json(plan.as_dict(), args.out)
    return 0


# --- pipeline -------------------------------------------------------------------

def _manifest_identity(doc: dict) -> str:
    """Digest of the manifest minus wall-clock; equal for equal runs."""
    stripped = {k: v for k, v in doc.items() if k not in ("wall_clock", "identity")}
    return hashlib.sha256(_json_text(stripped).encode()).hexdigest()


def cmd_pipeline(args) -> int:
    cfg = _load(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else Path(Path(cfg.path).stem + "_run")
    out_dir.mkdir(parents=True, exist_ok=True)

    outputs: list[dict] = []
    wall_clock: dict[str, float] = {}
    verdicts: dict[str, bool] = {}
    state: dict = {}

    def save(stage: str, name: str, text: str) -> None:
        (out_dir / name).write_text(text)
        outputs.append(
            {
                "file": name,
                "stage": stage,
                "sha256": hashlib.sha256(text.encode()).hexdigest(),
            }
        )

    def run_stage(name: str, fn) -> None:
        started = time.perf_counter()
        try:
            fn()
        except (_VERDICT_ERRORS + _STAGE_ERRORS) as exc:
            print(f"pipeline halted at stage {name!r}: {exc}", file=sys.stderr)
            raise
        wall_clock[name] = round(time.perf_counter() - started, 3)

    def stage_frequency() -> None:
        freq = cfg.frequency
        cf = freq.continued_fraction()
        psi = freq.psi()
        doc = {
            "stage": "frequency",
            "kind": freq.kind,
            "convergents": _convergent_rows(cf, psi, None),
        }
        if cf.exact:
            doc["selection"] = None
            doc["note"] = "exact rational frequency; scaling taken from the config"
        else:
            try:
                selection = select_scaling(
                    cf,
                    psi,
                    L_min=freq.L_min,
                    N=cfg.block.N,
                    R=cfg.experiment.settings.plan_R,
                    sup_V=cfg.potential.sup_abs(),
                    c_assumption=freq.c_assumption,
                    q_min=freq.q_min,
                )
                doc["selection"] = selection.as_dict()
            except NoConvergentInRange as exc:
                doc["selection"] = None
                doc["note"] = str(exc)
        state["cf"], state["psi"] = cf, psi
        save("frequency", "frequency.json", _json_text(doc))

    def stage_lambda() -> None:
        block = cfg.block
        placed = _place_block(block.N, block.seed, block.box, block.p, block.q)
        state["placed"] = placed
        save("lambda", "lambda.json", placed_to_json(placed))

    def stage_verify() -> None:
        report = verify_properties(state["placed"])
        verdicts["lambda_ok"] = report.ok
        doc = {"stage": "verify", **_verify_doc(report)}
        save("verify", "verify.json", _json_text(doc))

    def stage_resonance() -> None:
        potential = cfg.experiment.settings.potential
        placed, cf, psi = state["placed"], state["cf"], state["psi"]
        report = build_report(
            placed,
            cf,
            psi,
            _gap_constant(cf, placed.q, potential),
            cfg.experiment.settings.s0,
            potential,
        )
        doc = {"stage": "resonance", **report.as_dict()}
        # the divisor lemmas are conclusions of the smallness assumption;
        # they become pipeline verdicts only where that hypothesis holds
        r_emp = lambda_stats(placed, 1.0).R_empirical
        lhs = 3.0 ** (2 * placed.N) * r_emp**2 * psi.psi(placed.q) / placed.q
        doc["assumption_lhs"] = lhs
        doc["assumption_ok"] = lhs <= cfg.frequency.c_assumption
        if doc["assumption_ok"]:
            verdicts["L1_ge_L"] = doc["L1_over_L"] >= 1.0
            verdicts["U0_le_10_theta"] = doc["U0_over_theta"] <= 10.0
        save("resonance", "resonance.json", _json_text(doc))

    def stage_normal_form() -> None:
        from .nls_sim import block_generator

        settings = cfg.experiment.settings
        omega = cfg.frequency.omega()
        doc = {"stage": "normal_form", "omega": float(omega)}
        try:
            generator = block_generator(
                state["placed"].modes(), omega, settings.potential, settings.divisor_floor
            )
            doc["class1_entries"] = len(generator)
            doc["max_coefficient"] = float(np.max(np.abs(generator.coeff)))
            doc["commutator_residual"] = check_generator_commutes(generator)
            doc["small_divisor"] = None
        except SmallDivisor as exc:
            # resonant class-1 monomials (square torus): no weak normal form
            doc["class1_entries"] = None
            doc["small_divisor"] = str(exc)
        save("normal_form", "nf.json", _json_text(doc))

    def stage_cascade() -> None:
        toy = cfg.toy
        orbit = find_cascade(toy.N, toy.delta, toy.eps, toy.tol, toy.budget)
        state["orbit"] = orbit
        doc = {"stage": "cascade", **orbit.as_dict()}
        save("cascade", "orbit.json", _json_text(doc))

    def stage_shadow() -> None:
        trunc = build_truncation(
            state["placed"], cfg.experiment.closure_depth, cfg.experiment.radius
        )
        state["trunc"] = trunc
        reports, slope = shadow_sweep(
            cfg.experiment.settings,
            state["placed"],
            state["orbit"],
            cfg.experiment.lambdas,
            trunc,
        )
        doc = {"stage": "shadow", **_shadow_doc(reports, slope)}
        verdicts["shadow_ok"] = doc["verdict"]
        save("shadow", "shadow.json", _json_text(doc))

    def stage_ratio() -> None:
        report = sobolev_ratio_experiment(
            cfg.experiment.settings,
            state["placed"],
            state["orbit"],
            cfg.experiment.ratio_lambda,
            state["trunc"],
        )
        doc = {"stage": "ratio", **report.as_dict()}
        verdicts["ratio_ok"] = report.verdict
        save("ratio", "ratio.json", _json_text(doc))

    run_stage("frequency", stage_frequency)
    run_stage("lambda", stage_lambda)
    run_stage("verify", stage_verify)
    if not verdicts["lambda_ok"]:
        print("pipeline halted at stage 'verify': placement rejected", file=sys.stderr)
        return 1
    run_stage("resonance", stage_resonance)
    run_stage("normal_form", stage_normal_form)
    run_stage("cascade", stage_cascade)
    run_stage("shadow", stage_shadow)
    run_stage("ratio", stage_ratio)

    manifest = {
        "config": {"path": cfg.path, "sha256": cfg.sha256},
        "seeds": {
            "lambda_set": cfg.block.seed,
            "experiment": cfg.experiment.settings.seed,
        },
        "versions": {
            "artifact": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "mpmath": __import__("mpmath").__version__,
        },
        "outputs": outputs,
        "verdicts": verdicts,
        "wall_clock": wall_clock,
    }
    manifest["identity"] = _manifest_identity(manifest)
    (out_dir / "manifest.json").write_text(_json_text(manifest))
    sys.stdout.write(_json_text(manifest))
    return 0 if all(verdicts.values()) else 1


# --- parser ---------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadelab",
        description="numerical laboratory for quasi-resonant NLS energy cascades",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergents", help="continued fraction convergents with certification")
    p.add_argument("--omega", required=True,
                   help="frequency: preset name, p/q, digit list, or decimal")
    p.add_argument("--count", type=int, default=None, help="number of convergents")
    _add_psi_flags(p)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_convergents)

    p = sub.add_parser("synthesize", help="synthesize a frequency with prescribed approximability")
    p.add_argument("--tau", type=float, required=True, help="power-law exponent tau")
    p.add_argument("--c", type=float, default=1.0, help="power-law prefactor c")
    p.add_argument("--seed", type=int, default=0, help="tie-breaking seed")
    p.add_argument("--depth", type=int, default=12, help="digit count")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("select-scaling", help="smallest admissible convergent for a config")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_select_scaling)

    p = sub.add_parser("build-lambda", help="place a generation set on the lattice")
    p.add_argument("--N", type=int, required=True, help="number of generations")
    p.add_argument("--seed", type=int, required=True, help="placement seed")
    p.add_argument("--box", type=int, default=None, help="first-generation box size")
    p.add_argument("--p", type=int, default=1, help="scaling numerator")
    p.add_argument("--q", type=int, default=1, help="scaling denominator")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_build_lambda)

    p = sub.add_parser("verify-lambda", help="exhaustively verify placement properties")
    p.add_argument("lambda_file", help="placed set JSON file")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_verify_lambda)

    p = sub.add_parser("resonance-report", help="divisor extrema against scaling targets")
    p.add_argument("--lambda", dest="lambda_file", required=True, help="placed set JSON file")
    p.add_argument("--omega", required=True, help="frequency spec")
    p.add_argument("--potential", default="zero",
                   help="zero | decay:amplitude:s0:seed | table:file.json")
    p.add_argument("--box", type=float, default=None, help="enumeration box override")
    p.add_argument("--s0", type=float, default=4.0, help="Sobolev index of the theta bound")
    _add_psi_flags(p)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_resonance_report)

    p = sub.add_parser("nf-check", help="normal form cancellation and sweep checks")
    p.add_argument("--lambda", dest="lambda_file", required=True, help="placed set JSON file")
    p.add_argument("--omega", required=True, help="frequency spec")
    p.add_argument("--potential", default="zero",
                   help="zero | decay:amplitude:s0:seed | table:file.json")
    p.add_argument("--truncation-radius", type=float, default=None,
                   help="keep completion modes with |n| below this radius")
    p.add_argument("--eta-sweep", default=None, help="lo:hi:steps geometric eta grid")
    p.add_argument("--divisor-floor", type=float, default=0.0,
                   help="reject class-1 divisors below this modulus")
    p.add_argument("--seed", type=int, default=0, help="sweep direction seed")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_nf_check)

    p = sub.add_parser("toy-run", help="integrate the toy model and write a trajectory CSV")
    p.add_argument("--N", type=int, required=True, help="number of generations")
    p.add_argument("--initial", required=True, help="initial state file or preset (slider)")
    p.add_argument("--t-end", type=float, required=True, help="integration horizon")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    p.add_argument("--samples", type=int, default=500, help="CSV sample count")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_toy_run)

    p = sub.add_parser("cascade-find", help="search for a full-transfer cascade orbit")
    p.add_argument("--N", type=int, required=True, help="number of generations")
    p.add_argument("--delta", type=float, required=True, help="allowed mass defect")
    p.add_argument("--eps", type=float, default=1e-3, help="leading junction seed")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    p.add_argument("--budget", type=int, default=48, help="search attempt budget")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_cascade_find)

    p = sub.add_parser("nls-run", help="integrate the truncated flow from the embedded cascade")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--lam", type=float, default=None, help="scaling factor (default first lambda)")
    p.add_argument("--t-end", type=float, default=None, help="horizon (default lam^2 T0)")
    p.add_argument("--samples", type=int, default=500, help="CSV sample count")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_nls_run)

    p = sub.add_parser("shadow", help="shadowing distance sweep over scaling factors")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--lambdas", default=None, help="comma-separated scaling factors")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_shadow)

    p = sub.add_parser("ratio", help="Sobolev norm transfer of the embedded orbit")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--lam", type=float, default=None, help="scaling factor override")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("plan-strong", help="parameter plan for the strong growth regime")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_plan_strong)

    p = sub.add_parser("pipeline", help="run all stages in dependency order")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--out-dir", default=None, help="artifact directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _VERDICT_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except _STAGE_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
