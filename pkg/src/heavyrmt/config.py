"""INI configuration files for the command line tool.

Sections and keys (all optional unless a subcommand needs them)::

    [ensemble]
    family = ErdosRenyi          ; Levy | ExplodingMoments | ErdosRenyi | StandardWigner
    p = 1.0                      ; ErdosRenyi
    alpha = 1.5                  ; Levy
    measure = 1:0.5, 4:0.25      ; ExplodingMoments, atoms x:w
    entry_law = Rademacher       ; StandardWigner: Rademacher | Gaussian
    recenter = true              ; ErdosRenyi
    diagonal = SameLaw           ; SameLaw | Zero

    [experiment]
    N = 200, 400
    M = 100
    statistic = moment           ; moment | resolvent | function
    K = 2, 3, 4                  ; moment powers
    z = 2i, 1+1i                 ; resolvent spectral parameters
    function = lorentz           ; function id
    seed = 0
    threads = 1

    [solver]
    z = 2i, 1+1i
    t = 0.5, 1, 2
    tol = 1e-10
    damping = 0.5
    eta = 0.2                    ; cost grows like 1/eta**2
    x = -3, 3, 31                ; density curve range and point count
    u_order = 8

    [verify]
    criteria = all               ; or a list such as 1, 2, 9
    long = false                 ; include the long-running covariance check

Complex numbers are written like ``2i``, ``1+i``, ``-0.5-2i`` or ``3``.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .ensembles import EnsembleSpec, parse_measure
from .errors import ConfigurationError
from .mcstats import ExperimentConfig, Statistic

_BARE_I = re.compile(r"(?<![0-9.eE])i")


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise ConfigurationError("empty complex number")
    s = _BARE_I.sub("1i", s).replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigurationError(f"cannot parse complex number {text!r}") from None


def _split(text: str) -> List[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in _split(text)]
    except ValueError:
        raise ConfigurationError(f"expected numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in _split(text)]
    except ValueError:
        raise ConfigurationError(f"expected integers, got {text!r}") from None


@dataclass
class RunConfig:
    path: Optional[str]
    raw: Dict[str, Dict[str, str]]
    ensemble: Optional[EnsembleSpec] = None
    experiment: Optional[ExperimentConfig] = None
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    solver: Dict[str, object] = field(default_factory=dict)
    verify: Dict[str, object] = field(default_factory=dict)

    def snapshot(self) -> Dict[str, Dict[str, str]]:
        return {s: dict(v) for s, v in sorted(self.raw.items())}


def _ensemble(sec) -> EnsembleSpec:
    family = sec.get("family")
    if not family:
        raise ConfigurationError("[ensemble] needs a family")
    d = {"family": family}
    try:
        if "p" in sec:
            d["p"] = float(sec["p"])
        if "alpha" in sec:
            d["alpha"] = float(sec["alpha"])
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    if "measure" in sec:
        try:
            d["moment_measure"] = parse_measure(sec["measure"])
        except ValueError as exc:
            raise ConfigurationError(f"bad measure: {exc}") from None
    if "entry_law" in sec:
        d["entry_law"] = sec["entry_law"]
    if "recenter" in sec:
        d["recenter"] = sec.getboolean("recenter")
    if "diagonal" in sec:
        d["diagonal_policy"] = sec["diagonal"]
    return EnsembleSpec.from_dict(d)


def _statistic(sec) -> Statistic:
    kind = sec.get("statistic", "moment").strip().lower()
    if kind == "moment":
        return Statistic.moment(*_ints(sec.get("K", "2")))
    if kind == "resolvent":
        return Statistic.resolvent(*[parse_complex(v) for v in _split(sec.get("z", "2i"))])
    if kind == "function":
        return Statistic.of_function(sec.get("function", "lorentz").strip())
    raise ConfigurationError(f"unknown statistic {kind!r}")


def load_config(path: Optional[str] = None, text: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Read an INI file (or string); ``seed`` overrides ``[experiment] seed``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        if text is not None:
            cp.read_string(text)
        elif path is not None:
            with open(path) as fh:
                cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from None
    raw = {s: dict(cp[s]) for s in cp.sections()}
    if seed is not None:
        raw.setdefault("experiment", {})["seed"] = str(seed)
    cfg = RunConfig(path, raw)
    if cp.has_section("ensemble"):
        cfg.ensemble = _ensemble(cp["ensemble"])
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        if "threads" in sec:
            cfg.threads = max(1, _ints(sec["threads"])[0])
        if cfg.ensemble is None:
            raise ConfigurationError("[experiment] needs an [ensemble] section")
        base = seed if seed is not None else _ints(sec.get("seed", "0"))[0]
        try:
            cfg.experiment = ExperimentConfig(
                cfg.ensemble,
                tuple(_ints(sec.get("N", "100"))),
                int(sec.get("M", "100")),
                _statistic(sec),
                base,
            )
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    if cp.has_section("solver"):
        sec = cp["solver"]
        x = _floats(sec.get("x", "-3, 3, 31"))
        if len(x) != 3 or x[2] < 1:
            raise ConfigurationError("[solver] x needs min, max, count")
        cfg.solver = {
            "z": [parse_complex(v) for v in _split(sec.get("z", "2i"))],
            "t": _floats(sec.get("t", "0.5, 1, 2")),
            "tol": _floats(sec.get("tol", "1e-10"))[0],
            "damping": _floats(sec.get("damping", "0.5"))[0],
            "eta": _floats(sec.get("eta", "0.2"))[0],
            "x": (x[0], x[1], int(x[2])),
            "u_order": _ints(sec.get("u_order", "8"))[0],
        }
        if not 0 < cfg.solver["damping"] <= 1 or cfg.solver["eta"] <= 0 or cfg.solver["tol"] <= 0:
            raise ConfigurationError("[solver] needs tol > 0, eta > 0 and damping in (0, 1]")
    if cp.has_section("verify"):
        sec = cp["verify"]
        crit = sec.get("criteria", "all").strip()
        cfg.verify = {
            "criteria": None if crit.lower() == "all" else _ints(crit),
            "long": sec.getboolean("long", fallback=False),
        }
    return cfg
