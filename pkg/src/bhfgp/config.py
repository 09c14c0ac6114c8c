"""TOML configuration shared by the command line tools.

One file describes a complete study: the microscale interaction and its
reference grid, the lattice and trap, and the knobs of the condensate,
minimizer, and sweep stages.  The interaction is given either as a list
of closed-form terms or as a `constructed` family, in which case the
seed profile is sampled on the micro grid, run through the stability
construction, and tabulated; the self-convolution samples then travel
along as the stability certificate.

Unknown keys anywhere in the tree are rejected so that a typo cannot
silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigurationError
from .gp import GPOptions
from .grids_potentials import (
    Grid,
    PotentialSpec,
    PotentialTerm,
    TrapSpec,
    construct_stable_potential,
)
from .latticebhf import BHFOptions

DEFAULT_H_LIST = (0.125, 0.0625, 0.03125, 0.015625)

_TERM_KEYS = {
    "kind", "depth", "radius", "amplitude", "width", "amplitude2",
    "width2", "r", "values",
}
_CONSTRUCTED_KEYS = {"family", "amplitude", "oscillation", "ring", "width"}


@dataclass(frozen=True)
class AppConfig:
    grid: Grid
    micro_grid: Grid
    potential: PotentialSpec
    certificate: tuple | None
    trap: TrapSpec
    slack_exponent: float
    gp_opts: GPOptions
    bhf_opts: BHFOptions
    h_list: tuple
    minimize_rows: bool
    tol_pointwise: float
    tol_fourier: float


def _reject_unknown(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown key {unknown[0]!r} in [{where}]")


def _get(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"[{where}] needs key {key!r}")
    return table[key]


def _parse_grid(table: dict, where: str) -> Grid:
    _reject_unknown(table, {"n", "length", "dimension", "kind", "micro"}, where)
    return Grid(
        int(table.get("dimension", 1)),
        str(table.get("kind", "periodic")),
        int(_get(table, "n", where)),
        float(_get(table, "length", where)),
    )


def _seed_profile(table: dict, grid: Grid) -> np.ndarray:
    family = str(_get(table, "family", "potential.constructed"))
    x = grid.nodes()
    amplitude = float(table.get("amplitude", 1.0))
    width = float(table.get("width", 1.0))
    if family == "cosine-gaussian":
        oscillation = float(table.get("oscillation", 0.0))
        return amplitude * np.cos(oscillation * x) * np.exp(
            -(x ** 2) / (2.0 * width ** 2)
        )
    if family == "mexican-hat":
        ring = float(table.get("ring", width))
        return amplitude * (1.0 - (x / ring) ** 2) * np.exp(
            -(x ** 2) / (2.0 * width ** 2)
        )
    raise ConfigurationError(f"unknown constructed family {family!r}")


def _parse_potential(table: dict, micro: Grid):
    _reject_unknown(table, {"terms", "lambda", "constructed"}, "potential")
    scale = float(table.get("lambda", 1.0))
    if "constructed" in table:
        if "terms" in table:
            raise ConfigurationError(
                "[potential] takes either terms or constructed, not both"
            )
        sub = table["constructed"]
        _reject_unknown(sub, _CONSTRUCTED_KEYS, "potential.constructed")
        if micro.kind != "periodic":
            raise ConfigurationError(
                "constructed potentials need a periodic micro grid"
            )
        u = _seed_profile(sub, micro)
        v_nodes, u_conv = construct_stable_potential(u, micro)
        half = micro.n // 2
        term = PotentialTerm(
            kind="tabulated",
            r=tuple(float(r) for r in micro.nodes()[half:]),
            values=tuple(float(v) for v in v_nodes[half:]),
        )
        return PotentialSpec((term,), scale), tuple(float(v) for v in u_conv)
    terms = []
    for raw in _get(table, "terms", "potential"):
        _reject_unknown(raw, _TERM_KEYS, "potential.terms")
        fields = dict(raw)
        if "r" in fields:
            fields["r"] = tuple(float(v) for v in fields["r"])
        if "values" in fields:
            fields["values"] = tuple(float(v) for v in fields["values"])
        terms.append(PotentialTerm(**fields))
    return PotentialSpec(tuple(terms), scale), None


def _parse_trap(table: dict) -> TrapSpec:
    _reject_unknown(table, {"coefficients", "cutoff"}, "trap")
    coefficients = tuple(float(c) for c in table.get("coefficients", (0.0,)))
    cutoff = table.get("cutoff")
    return TrapSpec(coefficients, None if cutoff is None else float(cutoff))


def load_config(path: str) -> AppConfig:
    """Parse one study file into validated domain objects."""
    with open(path, "rb") as handle:
        try:
            tree = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc

    _reject_unknown(
        tree,
        {"grid", "potential", "trap", "trial", "gp", "bhf", "scaling", "stability"},
        "root",
    )
    if "grid" not in tree:
        raise ConfigurationError("config needs a [grid] section")
    if "potential" not in tree:
        raise ConfigurationError("config needs a [potential] section")

    grid = _parse_grid(tree["grid"], "grid")
    micro_table = tree["grid"].get("micro")
    micro = grid if micro_table is None else _parse_grid(micro_table, "grid.micro")

    potential, certificate = _parse_potential(tree["potential"], micro)
    trap = _parse_trap(tree.get("trap", {}))

    trial = tree.get("trial", {})
    _reject_unknown(trial, {"slack_exponent"}, "trial")
    slack = float(trial.get("slack_exponent", 0.5))

    gp = tree.get("gp", {})
    _reject_unknown(gp, {"step", "max_iter", "tol"}, "gp")
    gp_opts = GPOptions(
        step=None if gp.get("step") is None else float(gp["step"]),
        max_iter=int(gp.get("max_iter", GPOptions.max_iter)),
        tol=float(gp.get("tol", GPOptions.tol)),
    )

    bhf = tree.get("bhf", {})
    _reject_unknown(bhf, {"step", "max_iter", "tol", "backtracks"}, "bhf")
    bhf_opts = BHFOptions(
        step=None if bhf.get("step") is None else float(bhf["step"]),
        max_iter=int(bhf.get("max_iter", BHFOptions.max_iter)),
        tol=float(bhf.get("tol", BHFOptions.tol)),
        backtracks=int(bhf.get("backtracks", BHFOptions.backtracks)),
    )

    scaling = tree.get("scaling", {})
    _reject_unknown(scaling, {"h_list", "minimize_rows"}, "scaling")
    h_list = tuple(float(h) for h in scaling.get("h_list", DEFAULT_H_LIST))
    minimize_rows = bool(scaling.get("minimize_rows", False))

    stability = tree.get("stability", {})
    _reject_unknown(stability, {"tol_pointwise", "tol_fourier"}, "stability")

    return AppConfig(
        grid=grid,
        micro_grid=micro,
        potential=potential,
        certificate=certificate,
        trap=trap,
        slack_exponent=slack,
        gp_opts=gp_opts,
        bhf_opts=bhf_opts,
        h_list=h_list,
        minimize_rows=minimize_rows,
        tol_pointwise=float(stability.get("tol_pointwise", 1e-9)),
        tol_fourier=float(stability.get("tol_fourier", 1e-9)),
    )
