"""Experiment orchestration: Monte Carlo trials, scaling studies, probability
and Combes-Thomas experiments, configuration, and result emission.

Determinism contract: a config plus master seed fixes every result file
bit-for-bit, independently of the worker pool size. Each trial derives its
randomness from (master_seed, trial_index) and trials never share mutable
state; records are sorted by trial index before writing.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import beta as beta_dist

from . import profiles
from .cellproblem import hypothesis_dlt, hypothesis_loc, hypothesis_osc
from .gauge import first_order_coeff, second_order_coeff_osc
from .geometry import LatticeSpec, Window, build_window_grid
from .hamiltonian import (DltSpec, LocSpec, MeasureSpec, OscSpec, RandomField,
                          assemble_dlt, assemble_loc, assemble_osc,
                          assemble_unperturbed, sample_omega, trial_seed)
from .spectral import (CellBox, box_distance, fit_decay, fit_two_sided_constant,
                       resolvent_block_norm, smallest_eigs, two_sided_check)
from .transverse import (TransverseProblem, richardson_h_tolerance,
                         solve_transverse)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "GridParams",
    "ProblemSetup",
    "TrialRecord",
    "ProbabilityEstimate",
    "build_setup",
    "build_perturbation",
    "run_ilse_trials",
    "estimate_c2",
    "scaling_study",
    "interval_IN",
    "th1_window_bound",
    "run_probability_experiment",
    "run_ct_experiment",
    "two_sided_sweep",
    "binomial_upper",
    "write_trials_csv",
    "write_summary",
    "worker_count",
]

KINDS = ("loc", "osc", "dlt")
THREADS_ENV = "STRIP_LOCALIZER_THREADS"


class ConfigError(ValueError):
    pass


def worker_count():
    raw = os.environ.get(THREADS_ENV, "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridParams:
    m_per_cell: int = 64
    m_transverse: int = 16
    d: float = 1.0
    bc_bottom: str = "neumann"
    bc_top: str = "neumann"
    auto_resolve_factor: float | None = None  # osc: m >= factor/eps when set


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    lattice: LatticeSpec = LatticeSpec()
    alpha: tuple = (0,)
    n_schedule: tuple = (4,)
    grid: GridParams = GridParams()
    v0: dict | None = None
    perturbation: dict = field(default_factory=dict)
    measure: MeasureSpec = MeasureSpec(kind="uniform")
    eps_schedule: tuple = (0.05,)
    gamma: int = 17
    trials: int = 1
    master_seed: int = 0
    c1_hat: float | None = None
    c2_hat: float | None = None
    window_gate: str = "off"  # "th1" | "th3" | "off"
    output_csv: str | None = None
    output_summary: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if self.gamma < 17:
            raise ConfigError("gamma must be >= 17")
        if self.trials < 1:
            raise ConfigError("trial count must be >= 1")
        if not self.eps_schedule or not self.n_schedule:
            raise ConfigError("schedules must be nonempty")
        if self.window_gate not in ("th1", "th3", "off"):
            raise ConfigError("window_gate must be th1, th3, or off")

    @classmethod
    def from_dict(cls, raw):
        try:
            lattice = LatticeSpec(**raw.get("lattice", {}))
            grid = GridParams(**raw.get("grid", {}))
            measure = MeasureSpec(**raw.get("measure", {"kind": "uniform"}))
            kwargs = {k: v for k, v in raw.items()
                      if k not in ("lattice", "grid", "measure")}
            for key in ("alpha", "n_schedule", "eps_schedule"):
                if key in kwargs:
                    kwargs[key] = tuple(kwargs[key])
            return cls(lattice=lattice, grid=grid, measure=measure, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        return cls.from_dict(raw)


def _v0_callable(v0_spec, d):
    if v0_spec is None or v0_spec.get("name", "zero") == "zero":
        return None
    if v0_spec["name"] == "cosine":
        return profiles.v_cosine(amplitude=v0_spec.get("amplitude", 1.0),
                                 periods=v0_spec.get("periods", 1), d=d)
    raise ConfigError(f"unknown transverse potential {v0_spec!r}")


def build_perturbation(config: ExperimentConfig):
    """Construct the typed perturbation spec from its config dictionary."""
    p = dict(config.perturbation)
    ell = config.lattice.basis_lengths[0]
    d = config.grid.d
    if config.kind == "loc":
        name = p.get("profile", "hat")
        radius = p.get("radius", 1.0)
        amp = p.get("amplitude", 1.0)
        if name == "hat":
            prof = profiles.hat_profile(radius=radius, amplitude=amp)
        elif name == "bump":
            prof = profiles.smooth_bump_profile(radius=radius, amplitude=amp)
        else:
            raise ConfigError(f"unknown loc profile {name!r}")
        return LocSpec(profile=prof, support_radius=radius, a=p.get("a", 0.5))
    if config.kind == "osc":
        x1_knots = tuple(p.get("x1_knots", (-0.4 * ell, -0.25 * ell,
                                            0.25 * ell, 0.4 * ell)))
        tr_knots = tuple(p.get("trans_knots", (0.1 * d, 0.25 * d,
                                               0.75 * d, 0.9 * d)))
        env = profiles.product_window([x1_knots, tr_knots])
        q = profiles.cosine_mode(env, freq=p.get("freq", 1),
                                 amplitude=p.get("q_amplitude", 1.0))
        w_amp = p.get("w_amplitude", 0.0)
        w = (lambda x: w_amp * env(x)) if w_amp else None
        support = ((x1_knots[0], x1_knots[3]), (tr_knots[0], tr_knots[3]))
        return OscSpec(Q=q, W=w, a=p.get("a", 0.5), support=support,
                       m_xi=p.get("m_xi", 64))
    # dlt
    if p.get("surface", "circle") != "circle":
        raise ConfigError("only the circle surface is configurable")
    b = p.get("b", 1.0)
    return DltSpec.circle(config.lattice, d, radius=p.get("radius"),
                          center_trans=p.get("center_trans"),
                          n_nodes=p.get("nodes", 256), b=b)


@dataclass(frozen=True)
class ProblemSetup:
    """Grid, base operator, spec, and transverse data for one window size."""

    config: ExperimentConfig
    N: int
    grid: object
    base: object
    spec: object
    mode: object
    lambda0: float
    h_tolerance: float
    hypothesis: object


def build_setup(config: ExperimentConfig, N=None, eps=None):
    N = int(N if N is not None else config.n_schedule[0])
    window = Window(alpha=config.alpha, N=N)
    gp = config.grid
    m_per_cell = gp.m_per_cell
    if gp.auto_resolve_factor and eps:
        m_per_cell = max(m_per_cell, int(math.ceil(gp.auto_resolve_factor / eps)))
    grid = build_window_grid(config.lattice, window, gp.d, m_per_cell,
                             gp.m_transverse, bcs=(gp.bc_bottom, gp.bc_top))
    v0 = _v0_callable(config.v0, gp.d)
    base = assemble_unperturbed(grid, v0)
    tp = TransverseProblem(d=gp.d, V0=v0, bc_bottom=gp.bc_bottom,
                           bc_top=gp.bc_top, m=gp.m_transverse)
    mode = solve_transverse(tp)
    # Richardson allowance plus an eigensolver noise floor
    h_tol = max(richardson_h_tolerance(tp), 1e-10 * (1.0 + abs(mode.lambda0)))
    spec = build_perturbation(config)
    if config.kind == "loc":
        hyp = hypothesis_loc(spec)
    elif config.kind == "osc":
        hyp = hypothesis_osc(spec, mode)
    else:
        hyp = hypothesis_dlt(spec, mode)
    return ProblemSetup(config=config, N=N, grid=grid, base=base, spec=spec,
                        mode=mode, lambda0=mode.lambda0, h_tolerance=h_tol,
                        hypothesis=hyp)


# ---------------------------------------------------------------------------
# theorem windows and intervals
# ---------------------------------------------------------------------------

def _exponent_a(spec):
    return getattr(spec, "a", 0.0)


def th1_window_bound(kind, N, c1_hat, a):
    """Upper epsilon bound of the deterministic-estimate window."""
    if kind == "loc":
        return c1_hat / N ** (8.0 / (1.0 - a))
    if kind == "osc":
        return c1_hat / N ** (4.0 / (1.0 - a))
    return c1_hat / N ** 8.0


def interval_IN(kind, N, measure: MeasureSpec, c1_hat, c2_hat, gamma, a=0.5):
    """Probability-theorem interval I_N; None when empty.

    Moments used: loc E w^{(1-a)/2}, osc E w^{1-a}, dlt E w^{1/2}.
    """
    if c1_hat is None or c2_hat is None or c2_hat <= 0:
        raise ConfigError("interval_IN needs positive fitted constants")
    if gamma < 17:
        raise ConfigError("gamma must be >= 17")
    if kind == "loc":
        mom = measure.moment((1.0 - a) / 2.0)
        if mom == 0:
            raise ConfigError("measure moment vanishes")
        c3 = 2.0 ** (2.0 / (1.0 - a)) / c2_hat ** (1.0 / (1.0 - a))
        lo = c3 / (mom ** (2.0 / (1.0 - a)) * N ** (8.0 / (1.0 - a)))
        hi = c1_hat / N ** (8.0 / (gamma * (1.0 - a)))
    elif kind == "osc":
        mom = measure.moment(1.0 - a)
        if mom == 0:
            raise ConfigError("measure moment vanishes")
        c3 = 2.0 ** (1.0 / (1.0 - a)) / c2_hat ** (1.0 / (2.0 * (1.0 - a)))
        lo = c3 / (mom ** (1.0 / (1.0 - a)) * N ** (1.0 / (4.0 * (1.0 - a))))
        hi = c1_hat / N ** (4.0 / (gamma * (1.0 - a)))
    elif kind == "dlt":
        mom = measure.moment(0.5)
        if mom == 0:
            raise ConfigError("measure moment vanishes")
        c3 = 4.0 / c2_hat
        lo = c3 / (mom ** 2 * N ** 0.5)
        hi = c1_hat / N ** (8.0 / gamma)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    if lo > hi:
        return None
    return (lo, hi)


def _check_gate(config, setup, eps):
    a = _exponent_a(setup.spec)
    if config.window_gate == "off":
        return
    if config.window_gate == "th1":
        if config.c1_hat is None:
            raise ConfigError("th1 gate needs c1_hat")
        bound = th1_window_bound(config.kind, setup.N, config.c1_hat, a)
        if eps >= bound:
            raise ConfigError(
                f"eps={eps:g} outside the deterministic window (< {bound:g})")
    else:
        iv = interval_IN(config.kind, setup.N, config.measure, config.c1_hat,
                         config.c2_hat, config.gamma, a)
        if iv is None or not (iv[0] <= eps <= iv[1]):
            raise ConfigError(f"eps={eps:g} outside I_N={iv}")


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    lambda_min: float
    gap: float
    rhs: float
    ratio: float
    flags: tuple = ()
    omega_sum_1ma: float = 0.0   # sum w^{1-a}
    omega_sum_2m2a: float = 0.0  # sum w^{2-2a}
    omega_sum_1: float = 0.0     # sum w

    @property
    def degenerate(self):
        return "degenerate" in self.flags

    @property
    def failed(self):
        return any(f.startswith("error") for f in self.flags)


def _assemble(setup, eps, omega):
    kind = setup.config.kind
    if kind == "loc":
        return assemble_loc(setup.grid, setup.spec, eps, omega, base=setup.base)
    if kind == "osc":
        return assemble_osc(setup.grid, setup.spec, eps, omega, base=setup.base)
    return assemble_dlt(setup.grid, setup.spec, eps, omega, base=setup.base)


def _rhs(kind, a, eps, omega, N, n=1):
    w = omega.values
    if kind == "loc":
        return eps ** (1.0 - a) / N * float(np.sum(w ** (1.0 - a)))
    if kind == "osc":
        return eps ** (2.0 - 2.0 * a) / N ** n * float(np.sum(w ** (2.0 - 2.0 * a)))
    return eps / N ** n * float(np.sum(w))


def _one_trial(setup, eps, index):
    config = setup.config
    a = _exponent_a(setup.spec)
    omega = sample_omega(config.measure, setup.grid.window, config.master_seed,
                         index)
    w = omega.values
    sums = (float(np.sum(w ** (1.0 - a))) if a < 1 else 0.0,
            float(np.sum(w ** (2.0 - 2.0 * a))) if a < 1 else 0.0,
            float(np.sum(w)))
    rhs = _rhs(config.kind, a, eps, omega, setup.N)
    flags = []
    try:
        op = _assemble(setup, eps, omega)
        flags.extend(op.notes)
        lam = smallest_eigs(op, k=1, tol=1e-9).lambda_min
        gap = lam - setup.lambda0
    except Exception as exc:
        flags.append(f"error:{type(exc).__name__}:{exc}")
        return TrialRecord(trial=index, seed=trial_seed(config.master_seed, index),
                           lambda_min=float("nan"), gap=float("nan"), rhs=rhs,
                           ratio=float("nan"), flags=tuple(flags),
                           omega_sum_1ma=sums[0], omega_sum_2m2a=sums[1],
                           omega_sum_1=sums[2])
    if rhs == 0.0:
        flags.append("degenerate")
        ratio = float("inf") if gap > 0 else float("nan")
    else:
        ratio = gap / rhs
    return TrialRecord(trial=index, seed=trial_seed(config.master_seed, index),
                       lambda_min=lam, gap=gap, rhs=rhs, ratio=ratio,
                       flags=tuple(flags), omega_sum_1ma=sums[0],
                       omega_sum_2m2a=sums[1], omega_sum_1=sums[2])


def run_ilse_trials(config: ExperimentConfig, N=None, eps=None, setup=None):
    """Monte Carlo batch of initial-length-scale trials.

    Per-trial assembly or solver errors are recorded in the trial flags, not
    fatal to the batch. The batch is deterministic for a fixed master seed.
    """
    eps = float(eps if eps is not None else config.eps_schedule[0])
    if setup is None:
        setup = build_setup(config, N=N, eps=eps)
    if not setup.hypothesis.passes:
        raise ConfigError(
            f"{config.kind} hypothesis fails (value {setup.hypothesis.value:g})")
    _check_gate(config, setup, eps)

    indices = range(config.trials)
    workers = worker_count()
    if workers == 1:
        records = [_one_trial(setup, eps, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: _one_trial(setup, eps, i), indices))
    return sorted(records, key=lambda r: r.trial)


def estimate_c2(records):
    """Empirical infimum of the trial ratios plus the minimizing seed."""
    usable = [r for r in records if not r.degenerate and not r.failed]
    if len(usable) < 10:
        raise ValueError("need at least 10 non-degenerate trials")
    best = min(usable, key=lambda r: r.ratio)
    return best.ratio, best.seed


# ---------------------------------------------------------------------------
# scaling study
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingResult:
    eps: tuple
    gaps: tuple
    slope: float
    expected_exponent: float
    prefactor: float
    theory_coeff: float
    sign: int


def scaling_study(config: ExperimentConfig, N=None):
    """Deterministic (omega = 1) eps sweep; log-log slope of |gap| vs eps."""
    eps_list = [float(e) for e in config.eps_schedule]
    if len(eps_list) < 4:
        raise ConfigError("scaling study needs >= 4 epsilon values")
    ratios = [eps_list[i + 1] / eps_list[i] for i in range(len(eps_list) - 1)]
    if max(ratios) / min(ratios) > 1.05:
        raise ConfigError("epsilon schedule must be geometric")

    a = None
    gaps = []
    theory = None
    for eps in eps_list:
        setup = build_setup(config, N=N, eps=eps)
        a = _exponent_a(setup.spec)
        omega = RandomField.constant(setup.grid.window, 1.0)
        op = _assemble(setup, eps, omega)
        lam = smallest_eigs(op, k=1, tol=1e-10).lambda_min
        gaps.append(lam - setup.lambda0)
        if theory is None:
            if config.kind == "osc":
                theory = second_order_coeff_osc(setup.spec, setup.mode,
                                                config.lattice)
            else:
                theory = first_order_coeff(setup.spec, setup.mode, config.lattice)

    if any(g == 0 for g in gaps):
        raise RuntimeError("zero spectral shift in scaling study")
    signs = {1 if g > 0 else -1 for g in gaps}
    if len(signs) > 1:
        raise RuntimeError("spectral shifts change sign across the sweep")
    sign = signs.pop()

    exponent = {"loc": 1.0 - a, "osc": 2.0 - 2.0 * a, "dlt": 1.0}[config.kind]
    log_e = np.log(eps_list)
    log_g = np.log(np.abs(gaps))
    slope = float(np.polyfit(log_e, log_g, 1)[0])
    prefactor = float(np.exp(np.mean(log_g - exponent * log_e)))
    return ScalingResult(eps=tuple(eps_list), gaps=tuple(gaps), slope=slope,
                         expected_exponent=exponent, prefactor=prefactor,
                         theory_coeff=float(theory), sign=sign)


# ---------------------------------------------------------------------------
# two-sided sweep
# ---------------------------------------------------------------------------

def two_sided_sweep(config: ExperimentConfig, eps_rule=None):
    """Deterministic N-sweep of the two-sided bottom-eigenvalue estimate.

    eps_rule(N) defaults to the schedule saturating the N^-2 envelope, which
    makes gap * N^2 constant up to higher-order terms; the fitted constant
    and its relative spread quantify the estimate.
    """
    a = None
    gaps = []
    lams = []
    setups = []
    for N in config.n_schedule:
        eps0 = float(config.eps_schedule[0])
        a_guess = config.perturbation.get("a", 0.5)
        exponent = {"loc": 1.0 - a_guess, "osc": 2.0 - 2.0 * a_guess,
                    "dlt": 1.0}[config.kind]
        eps = eps_rule(N) if eps_rule else eps0 * float(N) ** (-2.0 / exponent)
        setup = build_setup(config, N=N, eps=eps)
        a = _exponent_a(setup.spec)
        omega = RandomField.constant(setup.grid.window, 1.0)
        op = _assemble(setup, eps, omega)
        lam = smallest_eigs(op, k=1, tol=1e-10).lambda_min
        lams.append(lam)
        gaps.append(lam - setup.lambda0)
        setups.append(setup)

    c_hat, residual = fit_two_sided_constant(config.n_schedule, gaps)
    reports = [two_sided_check(lam, s.lambda0, s.N, c_hat, s.h_tolerance)
               for lam, s in zip(lams, setups)]
    return {"n_schedule": list(config.n_schedule), "gaps": gaps,
            "c_hat": c_hat, "residual": residual, "reports": reports}


# ---------------------------------------------------------------------------
# probability experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilityEstimate:
    events: int
    trials: int
    estimate: float
    upper95: float
    N: int
    eps: float

    def __post_init__(self):
        if not (0.0 <= self.estimate <= self.upper95 <= 1.0):
            raise ValueError("inconsistent probability estimate")


def binomial_upper(events, trials, confidence=0.95):
    """One-sided exact (Clopper-Pearson) upper confidence bound."""
    if events >= trials:
        return 1.0
    return float(beta_dist.ppf(confidence, events + 1, trials - events))


def run_probability_experiment(config: ExperimentConfig, N=None, eps=None,
                               setup=None):
    """Monte Carlo frequency of the small-gap event {gap <= N^{-1/2}}."""
    records = run_ilse_trials(config, N=N, eps=eps, setup=setup)
    N = int(N if N is not None else config.n_schedule[0])
    eps = float(eps if eps is not None else config.eps_schedule[0])
    ok = [r for r in records if not r.failed]
    if not ok:
        raise RuntimeError("all trials failed")
    threshold = N ** -0.5
    events = sum(1 for r in ok if r.gap <= threshold)
    est = events / len(ok)
    return ProbabilityEstimate(events=events, trials=len(ok), estimate=est,
                               upper95=binomial_upper(events, len(ok)), N=N,
                               eps=eps)


# ---------------------------------------------------------------------------
# Combes-Thomas experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CtTrialResult:
    trial: int
    skipped: bool
    reason: str
    gap: float
    norms: tuple = ()
    distances: tuple = ()
    fit: object = None
    envelope: float = 0.0
    passed: bool = False


def run_ct_experiment(config: ExperimentConfig, box_pairs, N=None, eps=None,
                      trials=None, setup=None):
    """Per-trial resolvent block norms at lambda = Lambda0 + 1/(2 sqrt N),
    conditioned on the gap event gap > N^{-1/2} (the initial-length-scale
    conditioning); flags whether norms stay under the 2 sqrt N envelope with
    a positive fitted decay rate."""
    eps = float(eps if eps is not None else config.eps_schedule[0])
    if setup is None:
        setup = build_setup(config, N=N, eps=eps)
    N = setup.N
    n_trials = int(trials if trials is not None else config.trials)
    if len(box_pairs) < 4:
        raise ConfigError("need at least 4 box pairs for the decay fit")

    threshold = N ** -0.5
    lam_probe = setup.lambda0 + 0.5 / math.sqrt(N)
    envelope = 2.0 * math.sqrt(N)

    results = []
    for i in range(n_trials):
        omega = sample_omega(config.measure, setup.grid.window,
                             config.master_seed, i)
        op = _assemble(setup, eps, omega)
        gap = smallest_eigs(op, k=1, tol=1e-10).lambda_min - setup.lambda0
        if gap <= threshold:
            results.append(CtTrialResult(trial=i, skipped=True,
                                         reason="gap below N^{-1/2}", gap=gap))
            continue
        norms = []
        dists = []
        for b1, b2 in box_pairs:
            dists.append(box_distance(setup.grid, b1, b2))
            norms.append(resolvent_block_norm(op, lam_probe, b1, b2))
        fit = fit_decay(list(zip(dists, norms)),
                        delta=gap - 0.5 / math.sqrt(N))
        passed = all(v <= envelope for v in norms) and fit.rate > 0
        results.append(CtTrialResult(trial=i, skipped=False, reason="",
                                     gap=gap, norms=tuple(norms),
                                     distances=tuple(dists), fit=fit,
                                     envelope=envelope, passed=passed))
    return results


# ---------------------------------------------------------------------------
# result emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("trial", "seed", "lambda_min", "gap", "rhs", "ratio", "flags")


def write_trials_csv(records, path):
    """Fixed column order, shortest round-trip decimals, deterministic."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in sorted(records, key=lambda x: x.trial):
            writer.writerow([r.trial, r.seed, repr(r.lambda_min), repr(r.gap),
                             repr(r.rhs), repr(r.ratio), ";".join(r.flags)])


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def write_summary(summary, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
        fh.write("\n")
