"""Escape rates of the semi-flow through a cross-section hole ``I x {0}``.

Both step roofs (above and below ``f``) are discretized; one step of a
discretized shift is ``delta`` units of flow time, so step rates divided by
``delta`` bracket the flow escape rate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from . import _linalg

from .exceptions import DepthMismatch, FullEscape, PrefixExhausted, ValidationError
from .gibbs import MarkovGibbsMeasure
from .open_system import (
    Hole,
    escape_from_chain,
    hole_mask,
    make_nested_cylinders,
    masked_survivor_curve,
    validate_nested,
)
from .sft import LocallyConstantFunction, enumerate_words
from .suspension import (
    DiscretizationParams,
    FlowSampler,
    RoofFunction,
    StepRoof,
    SuspensionMeasure,
    SuspensionSFT,
    _word_codes,
    build_suspension_sft,
    mu_tilde,
    roof_lower,
    roof_upper,
    snap_floor,
    word_code,
)

LATTICE_DENOMINATOR = 10**6


@dataclass(frozen=True)
class FlowHole:
    """Level-0 states of a discretized shift lying over a base hole."""

    hole: Hole
    states: frozenset
    mask: np.ndarray = field(repr=False, compare=False)


def flow_hole(hole: Hole, S: SuspensionSFT) -> FlowHole:
    if hole.depth > S.block_depth:
        raise DepthMismatch(f"hole depth {hole.depth} exceeds suspension block depth {S.block_depth}")
    n = hole.depth
    mask = np.zeros(S.n_states, dtype=bool)
    for w, off in zip(S.blocks.words, S.offsets):
        if w[:n] in hole.words:
            mask[off] = True
    return FlowHole(hole, frozenset(np.flatnonzero(mask).tolist()), mask)


def steps_for(t: float, delta: float, side: str) -> int:
    """``ceil(t/delta)`` for ``side="lower"`` and ``floor(t/delta)`` for ``"upper"``."""
    q = t / delta
    if side == "upper":
        return snap_floor(q)
    if side == "lower":
        f = snap_floor(q)
        return f if abs(q - round(q)) <= 1e-9 * max(1.0, q) else f + 1
    raise ValidationError(f"side must be 'upper' or 'lower', got {side!r}")


def K_flow_discretized(nu: SuspensionMeasure, fhole: FlowHole, t: float, side: str) -> tuple[float, int]:
    """Discrete survivor log-measure at the step count bracketing flow time ``t``."""
    if t <= nu.delta:
        raise ValidationError("t must exceed delta")
    k = steps_for(t, nu.delta, side)
    K = masked_survivor_curve(nu.chain(), fhole.mask, k)[-1]
    return float(K), k


# ----------------------------------------------------------------------------
# exact survival for lattice roofs


def lattice_step(values: Iterable[float], max_denominator: int = LATTICE_DENOMINATOR) -> float:
    """Largest ``delta`` with every value an integer multiple of it."""
    values = [float(v) for v in values]
    fracs = [Fraction(v).limit_denominator(max_denominator) for v in values]
    for v, fr in zip(values, fracs):
        if abs(float(fr) - v) > 4 * np.finfo(float).eps * max(1.0, abs(v)):
            raise ValidationError(f"{v} is not on a rational lattice")
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (fr.denominator for fr in fracs), 1)
    num = reduce(math.gcd, (fr.numerator * (den // fr.denominator) for fr in fracs), 0)
    return num / den


def lattice_suspension(mu: MarkovGibbsMeasure, roof, delta: float, block_depth: int) -> SuspensionMeasure:
    f = roof.underlying if isinstance(roof, RoofFunction) else (roof.function if isinstance(roof, StepRoof) else roof)
    step = StepRoof.from_function(f, delta)
    S = build_suspension_sft(mu.shift, step, max(block_depth, mu.depth))
    return mu_tilde(mu, step, S)


def flow_survival_log_measure(
    mu: MarkovGibbsMeasure, roof, hole: Hole, t: float, delta: float | None = None
) -> float:
    """``K(mu^f, t, I x {0})`` exactly, for a roof whose values lie on a lattice.

    With ``delta`` dividing every roof value and ``t``, the flow survivor
    set over ``[0, t]`` corresponds to ``t/delta`` steps of the discretized
    shift.
    """
    f = roof.underlying if isinstance(roof, RoofFunction) else (roof.function if isinstance(roof, StepRoof) else roof)
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if t == 0:
        return 0.0
    if delta is None:
        delta = lattice_step(list(f.values.values()) + [t])
    k = steps_for(t, delta, "upper")
    if abs(k * delta - t) > 1e-9 * max(1.0, t):
        raise ValidationError(f"t = {t} is not a multiple of delta = {delta}")
    nu = lattice_suspension(mu, f, delta, hole.depth)
    return float(masked_survivor_curve(nu.chain(), flow_hole(hole, nu.sft).mask, k)[-1])


def slab_measure_via_discretization(mu: MarkovGibbsMeasure, roof: RoofFunction, hole: Hole) -> float:
    """``nu(I x [0, 1])`` summed over the levels of a lattice discretization."""
    delta = lattice_step(list(roof.underlying.values.values()) + [1.0])
    nu = lattice_suspension(mu, roof, delta, hole.depth)
    return nu.slab_measure(hole.words, int(round(1.0 / delta)))


# ----------------------------------------------------------------------------
# escape rates


@dataclass(frozen=True)
class FlowEscapeResult:
    n: int
    R_lower: float
    R_upper: float
    hole_measure: float
    nu_slab_measure: float
    gamma_target: float
    params: DiscretizationParams
    integral_f: float
    integral_upper: float
    integral_lower: float

    @property
    def ratio_interval(self) -> tuple[float, float]:
        return self.R_lower / self.nu_slab_measure, self.R_upper / self.nu_slab_measure

    @property
    def envelope(self) -> tuple[float, float]:
        """Limit bracket ``gamma int f / int f_upper .. gamma int f / int f_lower``."""
        g = self.gamma_target
        return g * self.integral_f / self.integral_upper, g * self.integral_f / self.integral_lower

    @property
    def width(self) -> float:
        lo, hi = self.ratio_interval
        return hi - lo

    @property
    def midpoint(self) -> float:
        lo, hi = self.ratio_interval
        return 0.5 * (lo + hi)

    def contains(self, x: float) -> bool:
        lo, hi = self.ratio_interval
        return lo <= x <= hi


def tower_rate(mu: MarkovGibbsMeasure, step: StepRoof, hole: Hole, depth: int) -> float:
    """Flow rate of a step roof from the spectral radius of the full open tower."""
    S = build_suspension_sft(mu.shift, step, depth)
    nu = mu_tilde(mu, step, S)
    rate, _, _ = escape_from_chain(nu.chain(), flow_hole(hole, S).mask, k_max=0)
    return rate / step.delta


def step_rate(mu: MarkovGibbsMeasure, step: StepRoof, hole: Hole, depth: int, xtol: float = 1e-16) -> float:
    """Flow rate of a step roof, solved on the base chain.

    A tower eigenvector is ``s**k`` times its level-0 value, so the open
    rate ``R`` is the root of ``log rho(diag(exp(R f*)) Q_open) = 0``, which
    lies between the base rate over ``max f*`` and over ``min f*``.
    """
    chain = mu.block_chain(depth)
    mask = hole_mask(chain, hole.depth, hole.words)
    keep = np.flatnonzero(~mask)
    Q = chain.Q[keep][:, keep].tocsr()
    m = step.depth
    heights = np.array([step.function.values[w[:m]] for w in (chain.labels[i] for i in keep)])
    rho0 = _linalg.spectral_radius(Q)
    if rho0 <= 0.0:
        raise FullEscape("the hole-restricted operator is nilpotent; the escape rate is infinite")
    base = -math.log(rho0)
    if base == 0.0:
        return 0.0

    def g(R):
        return math.log(_linalg.spectral_radius(sp.diags(np.exp(R * heights)) @ Q))

    lo, hi = base / heights.max(), base / heights.min()
    if hi - lo <= xtol:
        return 0.5 * (lo + hi)
    glo, ghi = g(lo), g(hi)
    if glo >= 0.0:
        return lo
    if ghi <= 0.0:
        return hi
    return float(brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))


def escape_rate_flow(
    mu: MarkovGibbsMeasure,
    roof: RoofFunction,
    hole: Hole,
    params: DiscretizationParams,
    target=None,
    check: bool = True,
) -> FlowEscapeResult:
    """Bracket ``R(nu, I x {0})`` between the rates of the two step roofs.

    The taller roof escapes more slowly and gives ``R_lower``.
    """
    if check:
        params.check(roof, mu)
    up = roof_upper(roof, params.m, params.delta)
    lo = roof_lower(roof, params.m, params.delta)
    depth = max(params.m, hole.depth, mu.depth)
    R_lower = step_rate(mu, up, hole, depth)
    R_upper = step_rate(mu, lo, hole, depth)
    int_f = roof.integral(mu)
    hole_mass = mu.measure_of(hole.words)
    g = mu.gamma(target) if target is not None else math.nan
    return FlowEscapeResult(
        hole.depth, float(R_lower), float(R_upper), hole_mass, hole_mass / int_f, float(g), params,
        int_f, up.integral(mu), lo.integral(mu),
    )


def theorem_a_curve(
    mu: MarkovGibbsMeasure,
    roof: RoofFunction,
    z,
    n_range: Iterable[int],
    params: DiscretizationParams,
    jobs: int = 1,
) -> list[FlowEscapeResult]:
    """Ratio intervals ``[R_lower, R_upper] / nu(I_n x [0, 1])`` for ``I_n = [z]_n``."""
    ns = sorted(set(n_range))
    seq = make_nested_cylinders(z, ns, mu)
    report = validate_nested(seq, mu)
    if not report.passed:
        raise ValidationError(f"hole sequence fails nested-condition items {report.failed_items}")
    params.check(roof, mu)

    def one(n):
        return escape_rate_flow(mu, roof, seq.holes[n], params, target=z, check=False)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(one, ns))
    return [one(n) for n in ns]


# ----------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    stderr: float
    samples: int

    @property
    def log_estimate(self) -> float:
        return math.log(self.estimate) if self.estimate > 0 else -math.inf


def _survives(sampler: FlowSampler, hole: Hole, t: float, n: int, returns: int) -> np.ndarray:
    f = sampler.roof
    a = sampler.mu.shift.size
    hole_codes = np.array(sorted(word_code(w, a) for w in hole.words))
    length = returns + max(hole.depth, f.depth) + 1
    symbols, heights = sampler.sample(n, length)
    alive = np.ones(n, dtype=bool)
    in_hole0 = np.isin(_word_codes(symbols, a, 0, hole.depth), hole_codes)
    alive &= ~((heights == 0.0) & in_hole0)
    clock = sampler.roof_values(symbols, 0) - heights  # time of the first section crossing
    for j in range(1, returns + 1):
        hit = (clock <= t) & np.isin(_word_codes(symbols, a, j, hole.depth), hole_codes)
        alive &= ~hit
        clock = clock + sampler.roof_values(symbols, j)
    if np.any(clock - sampler.roof_values(symbols, returns) <= t):
        raise PrefixExhausted("sampled trajectories outran the sampler horizon")
    return alive


def monte_carlo_survival(
    mu: MarkovGibbsMeasure,
    roof,
    hole: Hole,
    t: float,
    samples: int,
    seed: int,
    shards: int = 8,
) -> MonteCarloResult:
    """Fraction of ``nu``-random points whose section crossings in ``[0, t]`` avoid ``I``.

    Shards use child seeds of ``seed`` and are recombined in order, so the
    result depends only on ``(seed, samples, shards)``.
    """
    if samples < 1000:
        raise ValidationError("use at least 1000 samples")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    f = roof.underlying if isinstance(roof, RoofFunction) else roof
    returns = math.ceil(t / f.min_value) + 2
    sizes = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]
    children = np.random.SeedSequence(seed).spawn(shards)
    alive = 0
    for size, child in zip(sizes, children):
        if size:
            alive += int(_survives(FlowSampler(mu, f, child), hole, t, size, returns).sum())
    p = alive / samples
    return MonteCarloResult(p, math.sqrt(max(p * (1 - p), 0.0) / samples), samples)


# ----------------------------------------------------------------------------
# finite-time sandwiches


@dataclass(frozen=True)
class SandwichRow:
    t: float
    K_disc_lower: float  # f_lower discretization at ceil(t/delta) steps
    K_lower: float  # K(mu^{f_lower}, t)
    K: float  # K(mu^f, t); nan unless f is on a lattice
    K_upper: float  # K(mu^{f_upper}, t)
    K_disc_upper: float  # f_upper discretization at floor(t/delta) steps

    @property
    def violations(self) -> list[str]:
        out = []
        if self.K_disc_lower > self.K_lower + 1e-12:
            out.append("discrete lower bound")
        if self.K_upper > self.K_disc_upper + 1e-12:
            out.append("discrete upper bound")
        if not math.isnan(self.K):
            if self.K_lower + math.log(0.5) > self.K + 1e-12:
                out.append("log 1/2 bound")
            if self.K > self.K_upper + math.log(2.0) + 1e-12:
                out.append("log 2 bound")
        return out


def sandwich_table(
    mu: MarkovGibbsMeasure,
    roof: RoofFunction,
    hole: Hole,
    params: DiscretizationParams,
    times: Sequence[float],
) -> list[SandwichRow]:
    """Finite-time orderings between discretized and exact survivor log-measures."""
    up = roof_upper(roof, params.m, params.delta)
    lo = roof_lower(roof, params.m, params.delta)
    depth = max(params.m, hole.depth, mu.depth)
    nus = {}
    for name, step in (("up", up), ("lo", lo)):
        S = build_suspension_sft(mu.shift, step, depth)
        nu = mu_tilde(mu, step, S)
        nus[name] = (nu, flow_hole(hole, S))
    try:
        lattice_step(list(roof.underlying.values.values()))
        on_lattice = True
    except ValidationError:
        on_lattice = False
    rows = []
    for t in times:
        Kdl, _ = K_flow_discretized(*nus["lo"], t, "lower")
        Kdu, _ = K_flow_discretized(*nus["up"], t, "upper")
        Kl = flow_survival_log_measure(mu, lo, hole, t)
        Ku = flow_survival_log_measure(mu, up, hole, t)
        K = flow_survival_log_measure(mu, roof, hole, t) if on_lattice else math.nan
        rows.append(SandwichRow(t, Kdl, Kl, K, Ku, Kdu))
    return rows


def pointwise_sandwich_violations(roof: RoofFunction, m: int, delta: float) -> list[tuple]:
    """Words on which ``f_lower <= f <= f_upper`` fails (empty when the construction is sound)."""
    up = roof_upper(roof, m, delta)
    lo = roof_lower(roof, m, delta)
    depth = max(m, roof.depth)
    out = []
    for w in enumerate_words(roof.shift, depth):
        v = roof.underlying(w)
        if not lo.function(w) <= v <= up.function(w):
            out.append(w)
    return out
