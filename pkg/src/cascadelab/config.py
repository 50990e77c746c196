"""TOML-backed configuration shared by the command-line pipelines.

A config file has five sections: [frequency] (continued-fraction data and
the approximation rate), [potential], [lambda_set] (block placement),
[toy] (cascade search) and [experiment] (integration and experiment knobs).
Every random choice is keyed by an explicit seed from the file, so a config
determines its outputs completely.
"""

from __future__ import annotations

import hashlib
import math

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .diophantine import ApproxFunction, ContinuedFraction
from .errors import ConfigError
from .lattice import PotentialSpec
from .nls_sim import ExperimentSettings

SECTIONS = ("frequency", "potential", "lambda_set", "toy", "experiment")

PRESET_DIGITS = {
    "golden": (1,) * 40,
    "sqrt2": (1,) + (2,) * 39,
}


def _get(section: dict, name: str, key: str, kind, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{name}] is missing the key {key!r}")
        return default
    val = section[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"[{name}].{key} must be {kind.__name__}, got {type(val).__name__}")
    return val


def _rational_digits(p: int, q: int) -> tuple[int, ...]:
    # Euclid; a final digit of 1 is folded into its predecessor so the
    # expansion is the canonical one
    digits = []
    a, b = p, q
    while b:
        digits.append(a // b)
        a, b = b, a % b
    if len(digits) > 1 and digits[-1] == 1:
        digits = digits[:-2] + [digits[-2] + 1]
    return tuple(digits)


@dataclass(frozen=True)
class FrequencySpec:
    """How the aspect frequency is given: digits, a preset, or a rational."""

    kind: str
    p: int = 0
    q: int = 1
    digits: tuple[int, ...] = ()
    psi_kind: str = "log"
    psi_c: float = 1.0
    psi_tau: float = 1.0
    L_min: float = 1.0
    c_assumption: float = 0.125
    q_min: int = 2

    def continued_fraction(self) -> ContinuedFraction:
        if self.kind == "rational":
            return ContinuedFraction(_rational_digits(self.p, self.q), exact=True)
        return ContinuedFraction(self.digits, exact=False)

    def omega(self):
        if self.kind == "rational":
            return Fraction(self.p, self.q)
        return self.continued_fraction().to_float()

    def psi(self) -> ApproxFunction:
        return ApproxFunction(self.psi_kind, c=self.psi_c, tau=self.psi_tau)


@dataclass(frozen=True)
class BlockSpec:
    """Placement parameters of the frequency block."""

    N: int
    seed: int
    p: int = 1
    q: int = 1
    box: int | None = None


@dataclass(frozen=True)
class ToySpec:
    """Cascade search parameters."""

    N: int
    delta: float
    eps: float = 1e-3
    tol: float = 1e-10
    budget: int = 48


@dataclass(frozen=True)
class ExperimentSpec:
    """Experiment knobs plus the settings object handed to the experiments."""

    settings: ExperimentSettings
    lambdas: tuple[float, ...]
    ratio_lambda: float
    closure_depth: int
    radius: float
    plan_tau: float
    plan_c: float


@dataclass(frozen=True)
class LabConfig:
    """One parsed config file, with the raw bytes' digest for manifests."""

    frequency: FrequencySpec
    potential: PotentialSpec
    block: BlockSpec
    toy: ToySpec
    experiment: ExperimentSpec
    sha256: str
    path: str


def _parse_frequency(sec: dict) -> FrequencySpec:
    kind = _get(sec, "frequency", "kind", str, required=True)
    common = dict(
        psi_kind=_get(sec, "frequency", "psi_kind", str, default="log"),
        psi_c=_get(sec, "frequency", "psi_c", float, default=1.0),
        psi_tau=_get(sec, "frequency", "psi_tau", float, default=1.0),
        L_min=_get(sec, "frequency", "L_min", float, default=1.0),
        c_assumption=_get(sec, "frequency", "c_assumption", float, default=0.125),
        q_min=_get(sec, "frequency", "q_min", int, default=2),
    )
    if kind == "rational":
        p = _get(sec, "frequency", "p", int, required=True)
        q = _get(sec, "frequency", "q", int, required=True)
        if p < 1 or q < 1:
            raise ConfigError("[frequency] rational needs p >= 1, q >= 1")
        return FrequencySpec("rational", p=p, q=q, **common)
    if kind == "preset":
        name = _get(sec, "frequency", "preset", str, required=True)
        if name not in PRESET_DIGITS:
            raise ConfigError(f"unknown frequency preset {name!r}")
        depth = _get(sec, "frequency", "depth", int, default=40)
        return FrequencySpec("digits", digits=PRESET_DIGITS[name][:depth], **common)
    if kind == "digits":
        digits = sec.get("digits")
        if not isinstance(digits, list) or not all(isinstance(d, int) for d in digits):
            raise ConfigError("[frequency].digits must be a list of integers")
        return FrequencySpec("digits", digits=tuple(digits), **common)
    raise ConfigError(f"unknown [frequency] kind {kind!r}")


def _parse_potential(sec: dict) -> PotentialSpec:
    kind = _get(sec, "potential", "kind", str, default="zero")
    if kind == "zero":
        return PotentialSpec()
    if kind == "decay":
        return PotentialSpec(
            kind="decay",
            s0=_get(sec, "potential", "s0", float, default=4.0),
            amplitude=_get(sec, "potential", "amplitude", float, required=True),
            seed=_get(sec, "potential", "seed", int, default=0),
        )
    if kind == "table":
        rows = sec.get("table")
        if not isinstance(rows, list):
            raise ConfigError("[potential].table must be a list of [j, k, v] rows")
        table = {}
        for row in rows:
            if len(row) != 3:
                raise ConfigError("[potential].table rows must be [j, k, v]")
            table[(int(row[0]), int(row[1]))] = float(row[2])
        return PotentialSpec(kind="table", table=table)
    raise ConfigError(f"unknown [potential] kind {kind!r}")


def load_config(path: str | Path) -> LabConfig:
    """Parse and validate a TOML config file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(raw, str(path))


def loads_config(raw: bytes, label: str) -> LabConfig:
    """Parse and validate raw TOML config bytes."""
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"invalid TOML in {label}: {exc}") from exc
    for name in SECTIONS:
        if name not in doc:
            raise ConfigError(f"config is missing the [{name}] section")

    freq = _parse_frequency(doc["frequency"])
    potential = _parse_potential(doc["potential"])

    ls = doc["lambda_set"]
    block = BlockSpec(
        N=_get(ls, "lambda_set", "N", int, required=True),
        seed=_get(ls, "lambda_set", "seed", int, required=True),
        p=_get(ls, "lambda_set", "p", int, default=1),
        q=_get(ls, "lambda_set", "q", int, default=1),
        box=_get(ls, "lambda_set", "box", int, default=None),
    )

    ts = doc["toy"]
    delta = _get(ts, "toy", "delta", float, default=None)
    gamma = _get(ts, "toy", "gamma", float, default=None)
    if (delta is None) == (gamma is None):
        raise ConfigError("[toy] needs exactly one of delta, gamma")
    if gamma is not None:
        delta = math.exp(-gamma * block.N)
    toy = ToySpec(
        N=block.N,
        delta=delta,
        eps=_get(ts, "toy", "eps", float, default=1e-3),
        tol=_get(ts, "toy", "tol", float, default=1e-10),
        budget=_get(ts, "toy", "budget", int, default=48),
    )

    ex = doc["experiment"]
    settings = ExperimentSettings(
        eps=_get(ex, "experiment", "eps", float, default=0.1),
        tol=_get(ex, "experiment", "tol", float, default=1e-10),
        samples=_get(ex, "experiment", "samples", int, default=800),
        seed=_get(ex, "experiment", "seed", int, default=0),
        perturbation_scale=_get(ex, "experiment", "perturbation_scale", float, default=1e-4),
        regime=_get(ex, "experiment", "regime", str, default="weak"),
        sobolev_s=_get(ex, "experiment", "sobolev_s", float, default=1.5),
        potential=potential if potential.kind != "zero" else None,
        use_transform=_get(ex, "experiment", "use_transform", bool, default=True),
        divisor_floor=_get(ex, "experiment", "divisor_floor", float, default=0.0),
        gronwall_c0=_get(ex, "experiment", "gronwall_c0", float, default=1.0),
        s0=_get(ex, "experiment", "s0", float, default=4.0),
        mu=_get(ex, "experiment", "mu", float, default=0.1),
        plan_N=_get(ex, "experiment", "plan_N", int, default=block.N),
        plan_R=_get(ex, "experiment", "plan_R", float, default=100.0),
    )
    lambdas = ex.get("lambdas", [8, 16, 32, 64])
    if not isinstance(lambdas, list) or not lambdas:
        raise ConfigError("[experiment].lambdas must be a nonempty list")
    experiment = ExperimentSpec(
        settings=settings,
        lambdas=tuple(float(x) for x in lambdas),
        ratio_lambda=_get(ex, "experiment", "ratio_lambda", float, default=256.0),
        closure_depth=_get(ex, "experiment", "closure_depth", int, default=0),
        radius=_get(ex, "experiment", "radius", float, default=0.0),
        plan_tau=_get(ex, "experiment", "plan_tau", float, default=4.0),
        plan_c=_get(ex, "experiment", "plan_c", float, default=1.0),
    )

    return LabConfig(
        frequency=freq,
        potential=potential,
        block=block,
        toy=toy,
        experiment=experiment,
        sha256=hashlib.sha256(raw).hexdigest(),
        path=label,
    )
