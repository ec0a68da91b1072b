"""The state omega_lambda, its KMS property and convergence sweeps.

``omega(w) = <Omega, theta_+(l_1) ... theta_+(l_L) Omega>`` is evaluated right to left
on sparse states.  After each letter, components with more particles than the
remaining letters can annihilate are dropped: they cannot return to the vacuum,
so the value is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import itertools
import math
import time

import numpy as np

from . import fock
from .kcell import Grid
from .repdyn import RepConfig, TimeWindow, theta_pm
from .sl2gns import DEFAULT_PAD, build_gns, tail_bound
from .swnlie import (AlgebraParams, GeneratorWord, Kind, Letter, tau_analytic_factor)

KIND_TO_GEN = {Kind.B: "b", Kind.BPLUS: "b+", Kind.N: "n"}
DEFAULT_WINDOWS = (TimeWindow(0.0, 1.0), TimeWindow(1.0, 2.0))


@dataclass(frozen=True)
class KmsConfig:
    lam: float = 0.5
    gamma: float = 1.0
    sl2_cutoff: int = 40
    particle_cutoff: int = 4
    half_width: float = 2.0
    cells: int = 4
    tolerance: float = 1e-6
    seed: int = 0
    pad: int = DEFAULT_PAD

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.particle_cutoff < 1 or self.sl2_cutoff < 2:
            raise ValueError("cutoffs too small")

    @property
    def grid(self) -> Grid:
        return Grid(self.half_width, self.cells)

    def to_json(self) -> dict:
        return {"lambda": self.lam, "gamma": self.gamma, "sl2_cutoff": self.sl2_cutoff,
                "particle_cutoff": self.particle_cutoff,
                "grid": {"half_width": self.half_width, "cells": self.cells},
                "tolerance": self.tolerance, "seed": self.seed}

    @classmethod
    def from_json(cls, d: dict) -> "KmsConfig":
        kw = {}
        names = {"lambda": "lam", "gamma": "gamma", "sl2_cutoff": "sl2_cutoff",
                 "particle_cutoff": "particle_cutoff", "tolerance": "tolerance", "seed": "seed",
                 "pad": "pad"}
        for k, v in d.items():
            if k == "grid":
                kw["half_width"] = float(v["half_width"])
                kw["cells"] = int(v["cells"])
            elif k in names:
                kw[names[k]] = v
            else:
                raise ValueError(f"unknown config key {k!r}")
        return cls(**kw)


@dataclass
class CheckReport:
    check: str
    parameters: dict
    max_abs_error: float
    passed: bool
    runtime_ms: float
    closed_form: float | None = None

    def to_json(self) -> dict:
        return {"check": self.check, "parameters": self.parameters,
                "max_abs_error": float(self.max_abs_error),
                "closed_form": None if self.closed_form is None else float(self.closed_form),
                "pass": bool(self.passed), "runtime_ms": float(self.runtime_ms)}


def make_report(check, parameters, err, tol, t0, closed_form=None) -> CheckReport:
    err = float(err)
    return CheckReport(check, parameters, err, bool(err <= tol),
                       1e3 * (time.perf_counter() - t0), closed_form)


class StateEvaluator:
    """``omega_lambda`` for one configuration, caching the letter operators."""

    def __init__(self, cfg: KmsConfig, prune: bool = True):
        self.cfg = cfg
        self.prune = prune
        self.rep_cfg = RepConfig(cfg.grid, build_gns(cfg.lam, cfg.sl2_cutoff, cfg.pad),
                                 AlgebraParams(cfg.gamma), cfg.particle_cutoff)
        self._ops: dict = {}

    def _op(self, letter: Letter) -> fock.FockOperator:
        key = (letter.kind, letter.arg.coeffs.tobytes())
        op = self._ops.get(key)
        if op is None:
            if letter.kind is Kind.ONE:
                op = fock.identity()
            else:
                op = theta_pm(self.rep_cfg, letter.arg, "+", KIND_TO_GEN[letter.kind])
            self._ops[key] = op
        return op

    def __call__(self, w: GeneratorWord) -> complex:
        L = len(w)
        P = self.cfg.particle_cutoff
        if L // 2 > P:
            raise ValueError(f"word of length {L} needs particle cutoff >= {L // 2}")
        s = fock.vacuum(P)
        scalar = 1.0 + 0j
        for pos, letter in enumerate(reversed(w.letters)):
            # b is anti-linear: c * b_f = b_{conj(c) f}, folded here as a plain factor
            scalar *= letter.scalar
            s = self._op(letter)(s)
            if self.prune:
                s = s.project(L - pos - 1)
            if not s.amps:
                return 0j
        return scalar * s.vacuum_amplitude()


def omega(cfg: KmsConfig, w: GeneratorWord) -> complex:
    return StateEvaluator(cfg)(w)


def letter(kind, window: TimeWindow, grid: Grid, scalar: complex = 1.0) -> Letter:
    return Letter(Kind(kind), window.indicator(grid), scalar)


def closed_forms(lam: float) -> dict:
    return {"omega(b b+)": 2.0 / (1 - lam) ** 2, "omega(b+ b)": 2.0 * lam / (1 - lam) ** 2}


def generator_words(grid: Grid, windows=DEFAULT_WINDOWS, max_length: int = 2,
                    kinds=(Kind.B, Kind.BPLUS, Kind.N)) -> list:
    """All words of length 1..max_length over ``kinds`` on the given windows."""
    letters = [letter(k, w, grid) for w in windows for k in kinds]
    out = []
    for n in range(1, max_length + 1):
        out += [GeneratorWord(c) for c in itertools.product(letters, repeat=n)]
    return out


def kms_check(ev: StateEvaluator, y: GeneratorWord, windows=DEFAULT_WINDOWS) -> CheckReport:
    """KMS residuals for ``y``.

    primary (proof form): ``|w(b+ y) - lam w(y b+)|`` and ``|w(b y) - w(y b) / lam|``;
    secondary (statement form, standard pairing): ``|w(x y) - w(y tau_i(x))|`` for every
    generator letter ``x``, with ``tau_i`` from :func:`tau_analytic_factor`.
    """
    t0 = time.perf_counter()
    cfg = ev.cfg
    lam, grid = cfg.lam, cfg.grid
    primary = 0.0
    for w in windows:
        bp = GeneratorWord((letter(Kind.BPLUS, w, grid),))
        bm = GeneratorWord((letter(Kind.B, w, grid),))
        primary = max(primary, abs(ev(bp * y) - lam * ev(y * bp)),
                      abs(ev(bm * y) - ev(y * bm) / lam))
    secondary = 0.0
    for w in windows:
        for k in (Kind.B, Kind.BPLUS, Kind.N):
            x = GeneratorWord((letter(k, w, grid),))
            secondary = max(secondary,
                            abs(ev(x * y) - tau_analytic_factor(x, lam) * ev(y * x)))
    err = max(primary, secondary)
    params = {"word": _word_label(y), "lambda": lam, "sl2_cutoff": cfg.sl2_cutoff,
              "particle_cutoff": cfg.particle_cutoff, "primary": primary,
              "secondary": secondary}
    return make_report("kms", params, err, cfg.tolerance, t0)


def _word_label(w: GeneratorWord) -> str:
    names = {Kind.B: "b", Kind.BPLUS: "b+", Kind.N: "n", Kind.ONE: "1"}
    parts = []
    for l in w.letters:
        cells = np.flatnonzero(l.arg.coeffs)
        edges = l.arg.grid.edges
        span = f"[{edges[cells[0]]:g},{edges[cells[-1] + 1]:g})" if cells.size else "0"
        sc = "" if l.scalar == 1 else f"({l.scalar:.3g})"
        parts.append(f"{sc}{names[l.kind]}{span}")
    return " ".join(parts) or "1"


def kms_suite(cfg: KmsConfig, max_length: int = 2, ev: StateEvaluator | None = None) -> list:
    ev = ev or StateEvaluator(cfg)
    words = [GeneratorWord(())] + generator_words(cfg.grid, max_length=max_length)
    return [kms_check(ev, y) for y in words]


def state_values(cfg: KmsConfig, ev: StateEvaluator | None = None) -> list:
    """``omega(b b+)`` and ``omega(b+ b)`` on ``[0,1)`` against their closed forms."""
    ev = ev or StateEvaluator(cfg)
    grid, lam = cfg.grid, cfg.lam
    w01 = TimeWindow(0.0, 1.0)
    b, bp = letter(Kind.B, w01, grid), letter(Kind.BPLUS, w01, grid)
    cf = closed_forms(lam)
    tol = max(tail_bound(lam, cfg.sl2_cutoff, 2), 1e-12)
    out = []
    for name, wd in (("omega(b b+)", GeneratorWord((b, bp))),
                     ("omega(b+ b)", GeneratorWord((bp, b)))):
        t0 = time.perf_counter()
        val = ev(wd)
        err = abs(val - cf[name])
        out.append(make_report(name, {"lambda": lam, "sl2_cutoff": cfg.sl2_cutoff,
                                      "value_re": val.real, "value_im": val.imag,
                                      "tail_bound": tol}, err, tol, t0, cf[name]))
    return out


def random_word(grid: Grid, rng: np.random.Generator, max_length: int = 2,
                windows=DEFAULT_WINDOWS) -> GeneratorWord:
    n = int(rng.integers(0, max_length + 1))
    letters = []
    for _ in range(n):
        k = [Kind.B, Kind.BPLUS, Kind.N][int(rng.integers(3))]
        w = windows[int(rng.integers(len(windows)))]
        z = complex(rng.normal(), rng.normal())
        letters.append(letter(k, w, grid, z))
    return GeneratorWord(tuple(letters))


def positivity_check(ev: StateEvaluator, words) -> CheckReport:
    """``min Re w(x* x) >= -tol`` and ``|Im w(x* x)| <= tol``."""
    t0 = time.perf_counter()
    worst_neg, worst_im, vals = 0.0, 0.0, []
    for w in words:
        v = ev(w.star() * w)
        vals.append(v.real)
        worst_neg = max(worst_neg, -v.real)
        worst_im = max(worst_im, abs(v.imag))
    err = max(worst_neg, worst_im, 0.0)
    return make_report("positivity", {"words": len(words), "min_re": min(vals),
                                      "max_abs_im": worst_im}, err, ev.cfg.tolerance, t0)


SWEEP_FIELDS = {"N": "sl2_cutoff", "P": "particle_cutoff", "cells": "cells", "lambda": "lam"}


def kms_regression_bound(lam: float, N: int, C: float = 10.0) -> float:
    """Empirical bound ``C lam^{N-2} (N+2)^3`` on KMS residuals of short words."""
    return C * lam ** (N - 2) * (N + 2) ** 3


def sweep(base: KmsConfig, vary: str, values, max_length: int = 2) -> list:
    """Rerun the KMS, state-value and positivity suites for each value of one field.

    For ``vary='N'`` an extra report checks that the KMS residual shrinks with
    ``N`` (ratio per step within twice the ratio of the ``lam^N`` bounds) and
    stays under :func:`kms_regression_bound`.
    """
    if vary not in SWEEP_FIELDS:
        raise ValueError(f"cannot vary {vary!r}; choose from {sorted(SWEEP_FIELDS)}")
    values = list(values)
    reports, maxima = [], []
    for v in values:
        try:
            cfg = replace(base, **{SWEEP_FIELDS[vary]: type(getattr(base, SWEEP_FIELDS[vary]))(v)})
            if vary == "cells":
                for w in DEFAULT_WINDOWS:
                    w.indicator(cfg.grid)
        except (ValueError, TypeError) as e:
            raise ValueError(f"invalid value {v!r} for {vary}: {e}") from None
        ev = StateEvaluator(cfg)
        kms = kms_suite(cfg, max_length, ev)
        for r in kms:
            r.parameters["vary"] = vary
            r.parameters["value"] = v
        maxima.append(max(r.max_abs_error for r in kms))
        summary = make_report("kms-max", {"vary": vary, "value": v}, maxima[-1],
                              cfg.tolerance, time.perf_counter())
        if vary == "N":
            bound = kms_regression_bound(cfg.lam, cfg.sl2_cutoff)
            summary = make_report("kms-max", {"vary": vary, "value": v, "bound": bound},
                                  maxima[-1], bound, time.perf_counter())
        reports.append(summary)
        reports += state_values(cfg, ev)
        rng = np.random.default_rng(cfg.seed)
        reports.append(positivity_check(ev, [random_word(cfg.grid, rng) for _ in range(50)]))
    if vary == "N" and len(values) > 1:
        t0 = time.perf_counter()
        worst = 0.0
        for i in range(1, len(values)):
            allowed = 2.0 * kms_regression_bound(base.lam, values[i]) / \
                kms_regression_bound(base.lam, values[i - 1])
            ratio = maxima[i] / maxima[i - 1] if maxima[i - 1] > 0 else 0.0
            worst = max(worst, ratio - allowed)
        reports.append(make_report("kms-decay", {"values": values, "maxima": maxima},
                                   max(worst, 0.0), 0.0, t0))
    if vary == "P" and len(values) > 1:
        t0 = time.perf_counter()
        spread = max(maxima) - min(maxima)
        reports.append(make_report("kms-P-independence", {"values": values, "maxima": maxima},
                                   spread, 1e-12, t0))
    return reports


def kms_proof_replay(ev: StateEvaluator, y: GeneratorWord, window: TimeWindow = DEFAULT_WINDOWS[0]):
    """Replay the chain behind ``w(b+ y) = lam w(y b+)`` term by term.

    ``S0 = <theta+(b) Omega, theta+(y) Omega>``,
    ``S1 = sqrt(lam) <theta-(b) Omega, theta+(y) Omega>``  (``B1- psi = sqrt(lam) B2- psi``),
    ``S2 = sqrt(lam) <Omega, theta+(y) theta-(b+) Omega>``  (``theta-`` commutes with ``theta+``),
    ``S3 = lam <Omega, theta+(y) theta+(b+) Omega>``  (``B2+ psi = sqrt(lam) B1+ psi``).
    Returns a report whose error is the largest step ``|S_k - S_{k+1}|``.
    """
    t0 = time.perf_counter()
    rc, lam = ev.rep_cfg, ev.cfg.lam
    P = ev.cfg.particle_cutoff
    if len(y) + 1 > P:
        raise ValueError(f"word of length {len(y)} needs particle cutoff >= {len(y) + 1}")
    chi = window.indicator(rc.grid)
    vac = fock.vacuum(P)

    def plus_word(s):
        for l in reversed(y.letters):
            s = ev._op(l)(s).scale(l.scalar)
        return s

    y_vac = plus_word(vac)
    tp_b = theta_pm(rc, chi, "+", "b")(vac)
    tm_b = theta_pm(rc, chi, "-", "b")(vac)
    S0 = tp_b.inner(y_vac)
    S1 = math.sqrt(lam) * tm_b.inner(y_vac)
    S2 = math.sqrt(lam) * plus_word(theta_pm(rc, chi, "-", "b+")(vac)).vacuum_amplitude()
    S3 = lam * plus_word(theta_pm(rc, chi, "+", "b+")(vac)).vacuum_amplitude()
    chain = [S0, S1, S2, S3]
    err = max(abs(chain[k] - chain[k + 1]) for k in range(3))
    return make_report("kms-proof-replay", {"word": _word_label(y),
                                            "chain_re": [c.real for c in chain],
                                            "chain_im": [c.imag for c in chain]},
                       err, ev.cfg.tolerance, t0)
