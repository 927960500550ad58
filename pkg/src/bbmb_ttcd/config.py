"""Experiment configuration: a strict INI dialect read with ``configparser``.

Example::

    [problem]
    name = manufactured

    [grid]
    h = 1/600

    [time]
    T = 1
    tau_c = 1/8
    beta_tau = 2

    [params]
    mu = 1, 1
    lambda = 1, 0.01

    [sweep]
    axis = time
    ladder = 1/8, 1/16, 1/32, 1/64

Step sizes accept fractions (``1/600``) and are kept exact, so grid sizes
and 2:1 ladder checks involve no rounding. ``mu`` and ``lambda`` may be
equal-length lists; each pair is a separate run.
"""

import configparser
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .errors import ConfigError
from .problems import builtin_problems
from .schemes import SOURCE_RULES

SCHEMES = ("ncd", "ttcd", "both")
AXES = ("none", "time", "space")

# section -> allowed keys
_KEYS = {
    "problem": {"name", "amplitude", "mode"},
    "domain": {"a", "l"},
    "grid": {"m", "h"},
    "time": {"t", "n_c", "tau_c", "beta_tau"},
    "params": {"mu", "lambda"},
    "solver": {"scheme", "tol", "max_iter", "guard", "source_rule"},
    "sweep": {"axis", "ladder", "rates", "threads"},
    "output": {"dir", "energy"},
    "perturb": {"zeta_amp", "source_amp"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "manufactured"
    amplitude: float = 0.0
    mode: int = 1
    a: Fraction = Fraction(0)
    L: Fraction = Fraction(2)
    T: Fraction = Fraction(1)
    h: Fraction = Fraction(1, 50)
    tau_c: Fraction = Fraction(1, 10)
    beta_tau: int = 2
    pairs: tuple = ((1.0, 1.0),)
    scheme: str = "both"
    tol: float = 1e-12
    max_iter: int = 200
    guard: float = 1e8
    source_rule: str = "average"
    axis: str = "none"
    ladder: tuple = ()
    rates: bool = True
    threads: int = 1
    out_dir: str = "out"
    energy: bool = False
    zeta_amp: float = 1e-5
    source_amp: float = 0.0
    source_text: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def M(self):
        return grid_size(self.L, self.h)

    @property
    def N_c(self):
        return step_count(self.T, self.tau_c)

    @property
    def N_f(self):
        return self.beta_tau * self.N_c

    @property
    def tau_f(self):
        return self.tau_c / self.beta_tau

    def with_axis(self, axis):
        cfg = replace(self, axis=axis)
        validate(cfg)
        return cfg


def grid_size(L, h):
    M = Fraction(L) / Fraction(h)
    if M.denominator != 1:
        raise ConfigError(f"h = {h} does not divide the period L = {L}")
    return int(M)


def step_count(T, tau):
    N = Fraction(T) / Fraction(tau)
    if N.denominator != 1:
        raise ConfigError(f"step {tau} does not divide the horizon T = {T}")
    return int(N)


def _fraction(text, where):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{where}: expected a number or fraction, got {text!r}") from None


def _list(text):
    return [s for s in (p.strip() for p in text.split(",")) if s]


def _key_lines(text):
    """``(section, key) -> line number`` for error messages."""
    out, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
        elif section and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            out.setdefault((section, key), n)
    return out


def parse_config(text):
    """Parse and validate a config document; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    lines = _key_lines(text)

    def where(section, key):
        n = lines.get((section, key))
        return f"line {n}: [{section}] {key}" if n else f"[{section}] {key}"

    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _KEYS[section]:
                raise ConfigError(f"{where(section, key)}: unknown key")

    def get(section, key):
        return cp.get(section, key, fallback=None)

    def number(section, key, default, kind=float):
        raw = get(section, key)
        if raw is None:
            return default
        value = _fraction(raw, where(section, key))
        if kind is int:
            if value.denominator != 1:
                raise ConfigError(f"{where(section, key)}: expected an integer, got {raw!r}")
            return int(value)
        if kind is Fraction:
            return value
        return float(value)

    def flag(section, key, default):
        raw = get(section, key)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"{where(section, key)}: expected yes/no, got {raw!r}")

    name = (get("problem", "name") or "manufactured").strip().lower()
    problems = builtin_problems()
    if name not in problems:
        raise ConfigError(f"{where('problem', 'name')}: unknown problem {name!r}; expected one of {sorted(problems)}")
    prob = problems[name]

    kw = {"problem": name, "source_text": text}
    kw["amplitude"] = number("problem", "amplitude", 0.0)
    kw["mode"] = number("problem", "mode", 1, int)
    if name != "custom" and (get("problem", "amplitude") or get("problem", "mode")):
        raise ConfigError(f"{where('problem', 'amplitude')}: amplitude/mode only apply to the custom problem")
    kw["a"] = number("domain", "a", Fraction(prob.a), Fraction)
    kw["L"] = number("domain", "l", Fraction(prob.L), Fraction)
    kw["T"] = number("time", "t", Fraction(prob.T), Fraction)

    if get("grid", "m") and get("grid", "h"):
        raise ConfigError(f"{where('grid', 'h')}: give either M or h, not both")
    if get("grid", "m"):
        M = number("grid", "m", None, int)
        if M < 3:
            raise ConfigError(f"{where('grid', 'm')}: M must be >= 3")
        kw["h"] = kw["L"] / M
    else:
        kw["h"] = number("grid", "h", ExperimentConfig.h, Fraction)

    if get("time", "n_c") and get("time", "tau_c"):
        raise ConfigError(f"{where('time', 'tau_c')}: give either N_c or tau_c, not both")
    if get("time", "n_c"):
        N_c = number("time", "n_c", None, int)
        if N_c < 1:
            raise ConfigError(f"{where('time', 'n_c')}: N_c must be >= 1")
        kw["tau_c"] = kw["T"] / N_c
    else:
        kw["tau_c"] = number("time", "tau_c", ExperimentConfig.tau_c, Fraction)
    kw["beta_tau"] = number("time", "beta_tau", 2, int)

    mus = [_fraction(s, where("params", "mu")) for s in _list(get("params", "mu") or "1")]
    lams = [_fraction(s, where("params", "lambda")) for s in _list(get("params", "lambda") or "1")]
    if len(mus) != len(lams):
        raise ConfigError(f"{where('params', 'lambda')}: mu and lambda lists differ in length")
    kw["pairs"] = tuple((float(m), float(l)) for m, l in zip(mus, lams))

    kw["scheme"] = (get("solver", "scheme") or "both").strip().lower()
    kw["tol"] = number("solver", "tol", 1e-12)
    kw["max_iter"] = number("solver", "max_iter", 200, int)
    kw["guard"] = number("solver", "guard", 1e8)
    kw["source_rule"] = (get("solver", "source_rule") or "average").strip().lower()

    kw["axis"] = (get("sweep", "axis") or "none").strip().lower()
    kw["ladder"] = tuple(_fraction(s, where("sweep", "ladder")) for s in _list(get("sweep", "ladder") or ""))
    kw["rates"] = flag("sweep", "rates", True)
    kw["threads"] = number("sweep", "threads", 1, int)

    kw["out_dir"] = (get("output", "dir") or "out").strip()
    kw["energy"] = flag("output", "energy", False)
    kw["zeta_amp"] = number("perturb", "zeta_amp", 1e-5)
    kw["source_amp"] = number("perturb", "source_amp", 0.0)

    cfg = ExperimentConfig(**kw)
    validate(cfg, where)
    return cfg


def validate(cfg, where=lambda s, k: f"[{s}] {k}"):
    """Check cross-field constraints; raises :class:`ConfigError`."""
    if cfg.L <= 0:
        raise ConfigError(f"{where('domain', 'l')}: L must be positive")
    if cfg.T <= 0:
        raise ConfigError(f"{where('time', 't')}: T must be positive")
    if cfg.h <= 0:
        raise ConfigError(f"{where('grid', 'h')}: h must be positive")
    if cfg.tau_c <= 0:
        raise ConfigError(f"{where('time', 'tau_c')}: tau_c must be positive")
    if cfg.beta_tau < 1:
        raise ConfigError(f"{where('time', 'beta_tau')}: beta_tau must be a positive integer, got {cfg.beta_tau}")
    for mu, lam in cfg.pairs:
        if not (mu > 0 and lam > 0):
            raise ConfigError(f"{where('params', 'mu')}: mu and lambda must be positive, got ({mu}, {lam})")
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"{where('solver', 'scheme')}: expected one of {SCHEMES}, got {cfg.scheme!r}")
    if cfg.source_rule not in SOURCE_RULES:
        raise ConfigError(f"{where('solver', 'source_rule')}: expected one of {SOURCE_RULES}, got {cfg.source_rule!r}")
    if not cfg.tol > 0:
        raise ConfigError(f"{where('solver', 'tol')}: tol must be positive")
    if cfg.max_iter < 1:
        raise ConfigError(f"{where('solver', 'max_iter')}: max_iter must be >= 1")
    if cfg.threads < 1:
        raise ConfigError(f"{where('sweep', 'threads')}: threads must be >= 1")
    if cfg.axis not in AXES:
        raise ConfigError(f"{where('sweep', 'axis')}: expected one of {AXES}, got {cfg.axis!r}")
    try:
        M = cfg.M
        cfg.N_c
    except ConfigError as exc:
        raise ConfigError(f"{where('grid', 'h')}: {exc}") from None
    if M < 3:
        raise ConfigError(f"{where('grid', 'h')}: grid has {M} nodes; need >= 3")
    if cfg.axis != "none":
        if not cfg.ladder:
            raise ConfigError(f"{where('sweep', 'ladder')}: axis {cfg.axis!r} needs a ladder")
        for step in cfg.ladder:
            if step <= 0:
                raise ConfigError(f"{where('sweep', 'ladder')}: steps must be positive, got {step}")
            try:
                if cfg.axis == "time":
                    step_count(cfg.T, step)
                else:
                    if grid_size(cfg.L, step) < 3:
                        raise ConfigError(f"h = {step} gives fewer than 3 nodes")
            except ConfigError as exc:
                raise ConfigError(f"{where('sweep', 'ladder')}: {exc}") from None
        if cfg.rates:
            for big, small in zip(cfg.ladder, cfg.ladder[1:]):
                if big != 2 * small:
                    raise ConfigError(
                        f"{where('sweep', 'ladder')}: rates need exact 2:1 refinement, got {big} -> {small}"
                    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
