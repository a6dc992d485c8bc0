"""Experiment design and model selection between two rate models.

The workflow is: find the polarizer setting where the two models disagree
most (``optimal_settings``), size the run (``required_samples``), then decide
between the models on observed counts (``likelihood_ratio_test``). ``fit_k``
estimates the free amplitude of the time-symmetric triphoton law.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri, xlog1py, xlogy

from .measurement import settings_from_angles
from .models import RateModel, TimeSymmetricTriphoton, predict_rate, rate_grid
from .montecarlo import (
    CountRecord,
    SimulationConfig,
    coincidence_probability,
    derive_stream_seed,
    simulate_counts,
)
from .state import canonical_angle

IDENTICAL_TOL = 1e-12


class NoDiscriminatingSetting(ValueError):
    """The two models agree at every setting examined."""


class KUnidentifiable(ValueError):
    """No record constrains the time-symmetric amplitude ``k``."""


def model_label(model: RateModel) -> str:
    return model.tag


def hellinger(p, q):
    """Hellinger distance between Bernoulli(p) and Bernoulli(q), in [0, 1].

    Written as a sum of squares so equal inputs give exactly 0.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    h2 = 0.5 * ((np.sqrt(p) - np.sqrt(q)) ** 2 + (np.sqrt(1.0 - p) - np.sqrt(1.0 - q)) ** 2)
    out = np.sqrt(h2)
    return float(out) if out.ndim == 0 else out


def grid_axis(steps: int) -> np.ndarray:
    """``steps`` equally spaced angles covering ``[0, pi)``."""
    if steps < 2:
        raise ValueError(f"grid needs at least 2 steps per axis, got {steps}")
    return np.arange(steps) * (math.pi / steps)


@dataclass(frozen=True)
class DivergenceTable:
    """Grid rows ordered by descending ``|rate_a - rate_b|``."""

    angles: np.ndarray  # shape (rows, arity)
    rate_a: np.ndarray
    rate_b: np.ndarray
    delta: np.ndarray

    def __len__(self):
        return len(self.delta)

    def __iter__(self):
        for i in range(len(self)):
            yield tuple(self.angles[i]), float(self.rate_a[i]), float(self.rate_b[i]), float(self.delta[i])

    def row_at(self, angles: Sequence[float]):
        hit = np.flatnonzero(np.all(np.isclose(self.angles, angles, rtol=0, atol=1e-12), axis=1))
        if hit.size == 0:
            raise KeyError(f"no grid row at {tuple(angles)}")
        i = hit[0]
        return tuple(self.angles[i]), float(self.rate_a[i]), float(self.rate_b[i]), float(self.delta[i])


def _check_arity(model_a: RateModel, model_b: RateModel) -> int:
    if model_a.arity != model_b.arity:
        raise ValueError(
            f"models measure different photon numbers ({model_a.arity} vs {model_b.arity})"
        )
    return model_a.arity


def divergence_map(model_a: RateModel, model_b: RateModel, grid: int = 64) -> DivergenceTable:
    arity = _check_arity(model_a, model_b)
    axis = grid_axis(grid)
    ra = rate_grid(model_a, *([axis] * arity)).reshape(-1)
    rb = rate_grid(model_b, *([axis] * arity)).reshape(-1)
    mesh = np.stack(np.meshgrid(*([axis] * arity), indexing="ij"), axis=-1).reshape(-1, arity)
    delta = np.abs(ra - rb)
    order = np.argsort(-delta, kind="stable")
    return DivergenceTable(mesh[order], ra[order], rb[order], delta[order])


@dataclass(frozen=True)
class DiscriminationConfig:
    model_a: RateModel
    model_b: RateModel
    angle_grid: int = 64
    refine_iterations: int = 50
    alpha: float = 0.01
    beta: float = 0.01
    n_emitted_per_setting: Optional[int] = None
    detector_efficiency: float = 1.0
    dark_coincidence_rate: float = 0.0
    n_resamples: int = 1000
    profile_k: bool = False

    def __post_init__(self):
        _check_arity(self.model_a, self.model_b)
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} out of range (0,1), got {v!r}")
        if self.angle_grid < 2:
            raise ValueError(f"angle_grid must be >= 2, got {self.angle_grid}")
        if self.refine_iterations < 0:
            raise ValueError(f"refine_iterations must be >= 0, got {self.refine_iterations}")
        if self.n_emitted_per_setting is not None and self.n_emitted_per_setting <= 0:
            raise ValueError(f"n_emitted_per_setting must be positive, got {self.n_emitted_per_setting}")

    @property
    def efficiency_product(self) -> float:
        return self.detector_efficiency ** self.model_a.arity


@dataclass(frozen=True)
class OptimalSettings:
    settings: tuple
    rate_a: float
    rate_b: float
    divergence: float
    hellinger: float
    grid_hellinger: float

    @property
    def angles(self) -> tuple:
        return tuple(s.angle for s in self.settings)


def _effective(rate, eta, dark):
    return np.clip(np.asarray(rate) * eta + dark, 0.0, 1.0)


def optimal_settings(config: DiscriminationConfig) -> OptimalSettings:
    """Maximize per-emission Hellinger distance over polarizer angles.

    A full grid over ``[0, pi)^m`` supplies the three best starting cells;
    each is polished by coordinate descent with a halving step, which only
    accepts improvements.
    """
    a, b = config.model_a, config.model_b
    eta, dark = config.efficiency_product, config.dark_coincidence_rate
    table = divergence_map(a, b, config.angle_grid)
    if table.delta[0] <= IDENTICAL_TOL:
        raise NoDiscriminatingSetting("no discriminating setting: models agree on the whole grid")

    h_grid = hellinger(_effective(table.rate_a, eta, dark), _effective(table.rate_b, eta, dark))
    starts = np.argsort(-h_grid, kind="stable")[:3]

    def objective(x):
        pa = predict_rate(a, x)
        pb = predict_rate(b, x)
        return hellinger(_effective(pa, eta, dark), _effective(pb, eta, dark))

    best_x, best_f = None, -1.0
    for i in starts:
        x = [float(v) for v in table.angles[i]]
        fx = objective(x)
        step = math.pi / config.angle_grid
        for _ in range(config.refine_iterations):
            improved = False
            for axis, sign in itertools.product(range(len(x)), (1.0, -1.0)):
                trial = list(x)
                trial[axis] += sign * step
                ft = objective(trial)
                if ft > fx:
                    x, fx, improved = trial, ft, True
            if not improved:
                step *= 0.5
        if fx > best_f:
            best_x, best_f = x, fx

    angles = [canonical_angle(v) for v in best_x]
    settings = tuple(settings_from_angles(angles))
    ra, rb = predict_rate(a, settings), predict_rate(b, settings)
    return OptimalSettings(
        settings=settings,
        rate_a=ra,
        rate_b=rb,
        divergence=abs(ra - rb),
        hellinger=hellinger(_effective(ra, eta, dark), _effective(rb, eta, dark)),
        grid_hellinger=float(h_grid[starts[0]]),
    )


def required_samples(p_a: float, p_b: float, alpha: float = 0.01, beta: float = 0.01) -> int:
    """Emissions per setting needed to tell Bernoulli(p_a) from Bernoulli(p_b).

    Normal-approximation bound

        n = ceil(((z_{1-alpha} sqrt(p_a q_a) + z_{1-beta} sqrt(p_b q_b)) / (p_a - p_b))^2)

    When one probability is 0 or 1 a single contrary observation refutes
    that model, and the exact bound ``ceil(log(err) / log(1 - r))`` is used,
    where ``r`` is the chance per emission of such an observation under the
    other model. ``err`` is beta when ``p_a`` is the degenerate model and
    alpha when ``p_b`` is.
    """
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} out of range (0,1), got {v!r}")
    for name, v in (("p_a", p_a), ("p_b", p_b)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} out of range [0,1], got {v!r}")
    if p_a == p_b:
        raise ValueError("p_a and p_b are equal; no sample size separates them")

    def degenerate(p):
        return p == 0.0 or p == 1.0

    if degenerate(p_a) or degenerate(p_b):
        if degenerate(p_a) and degenerate(p_b):
            return 1
        fixed, other, err = (p_a, p_b, beta) if degenerate(p_a) else (p_b, p_a, alpha)
        refute = other if fixed == 0.0 else 1.0 - other
        return max(1, math.ceil(math.log(err) / math.log1p(-refute)))

    z_a = float(ndtri(1.0 - alpha))
    z_b = float(ndtri(1.0 - beta))
    spread = z_a * math.sqrt(p_a * (1.0 - p_a)) + z_b * math.sqrt(p_b * (1.0 - p_b))
    return max(1, math.ceil((spread / (p_a - p_b)) ** 2))


def _record_probabilities(model: RateModel, records: Sequence[CountRecord], eta: float, dark: float) -> np.ndarray:
    return np.array(
        [coincidence_probability(predict_rate(model, r.settings), eta, dark)[0] for r in records]
    )


def _log_likelihood(counts: np.ndarray, n: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Binomial log-likelihood summed over the last axis, without the binomial coefficients.

    The coefficients cancel in every likelihood ratio used here.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(counts, p) + xlog1py(n - counts, -p)
    return np.sum(terms, axis=-1)


@dataclass(frozen=True)
class LRTResult:
    decision: str  # "model_a", "model_b" or "inconclusive"
    log_likelihood_ratio: float  # log L(model_a) - log L(model_b)
    p_value_estimate: float
    n_resamples: int
    model_b_fit: Optional["KFit"] = None

    def winner(self, model_a: RateModel, model_b: RateModel) -> Optional[RateModel]:
        return {"model_a": model_a, "model_b": model_b}.get(self.decision)


def _canonical_order(records: Sequence[CountRecord]) -> list[CountRecord]:
    return sorted(records, key=lambda r: (r.angles, r.n_emitted, r.n_coincidence))


def likelihood_ratio_test(
    records: Sequence[CountRecord],
    model_a: RateModel,
    model_b: RateModel,
    alpha: float = 0.05,
    n_resamples: int = 1000,
    seed: int = 0,
    detector_efficiency: float = 1.0,
    dark_coincidence_rate: float = 0.0,
    profile_k: bool = False,
) -> LRTResult:
    """Binomial likelihood-ratio test between two rate models.

    The statistic is the log-likelihood ratio in favour of the better-fitting
    model. Its null distribution is estimated by parametric bootstrap under
    the disfavoured model. Ties are counted with weight one half (mid-p),
    which matters because counting statistics are discrete. The favoured
    model is selected only when that p-value is below ``alpha``.

    A model giving probability 0 (or 1) to an observation that contradicts
    it is rejected outright: the log ratio is infinite and the p-value 0.

    With ``profile_k`` set and ``model_b`` a time-symmetric triphoton model,
    ``k`` of ``model_b`` is first replaced by its maximum-likelihood estimate
    from the records. The bootstrap keeps that fitted value fixed.
    """
    if not records:
        raise ValueError("records must not be empty")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha out of range (0,1), got {alpha!r}")
    if n_resamples < 1:
        raise ValueError(f"n_resamples must be >= 1, got {n_resamples}")
    _check_arity(model_a, model_b)

    fit = None
    if profile_k and isinstance(model_b, TimeSymmetricTriphoton):
        fit = fit_k(records, detector_efficiency=detector_efficiency, dark_coincidence_rate=dark_coincidence_rate)
        model_b = TimeSymmetricTriphoton(max(fit.k, 1e-12))

    records = _canonical_order(records)
    eta = detector_efficiency ** model_a.arity
    pa = _record_probabilities(model_a, records, eta, dark_coincidence_rate)
    pb = _record_probabilities(model_b, records, eta, dark_coincidence_rate)
    n = np.array([r.n_emitted for r in records], dtype=float)
    counts = np.array([r.n_coincidence for r in records], dtype=float)

    ll_a = _log_likelihood(counts, n, pa)
    ll_b = _log_likelihood(counts, n, pb)
    if math.isinf(ll_a) and math.isinf(ll_b):
        return LRTResult("inconclusive", math.nan, 1.0, 0, fit)
    if math.isinf(ll_a) or math.isinf(ll_b):
        llr = math.inf if math.isinf(ll_b) else -math.inf
        return LRTResult("model_a" if llr > 0 else "model_b", llr, 0.0, 0, fit)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (xlogy(counts, pa) + xlog1py(n - counts, -pa)) - (xlogy(counts, pb) + xlog1py(n - counts, -pb))
    llr = math.fsum(terms)
    if llr == 0.0 or np.array_equal(pa, pb):
        return LRTResult("inconclusive", 0.0, 1.0, 0, fit)

    favoured, p_fav, p_dis = ("model_a", pa, pb) if llr > 0 else ("model_b", pb, pa)
    observed = _log_likelihood(counts, n, p_fav) - _log_likelihood(counts, n, p_dis)

    rng = np.random.default_rng(derive_stream_seed(seed, 0))
    sims = rng.binomial(n.astype(np.int64), p_dis, size=(n_resamples, len(records))).astype(float)
    stats = _log_likelihood(sims, n, p_fav) - _log_likelihood(sims, n, p_dis)
    ties = np.isclose(stats, observed, rtol=1e-12, atol=1e-12)
    above = (stats > observed) & ~ties
    p_value = (np.count_nonzero(above) + 0.5 * np.count_nonzero(ties)) / n_resamples

    decision = favoured if p_value < alpha else "inconclusive"
    return LRTResult(decision, llr, float(p_value), n_resamples, fit)


@dataclass(frozen=True)
class KFit:
    k: float
    log_likelihood: float
    standard_error: float
    warnings: tuple = field(default=(), compare=False)


def _triphoton_factor(record: CountRecord) -> float:
    angles = record.angles
    if len(angles) != 3:
        raise ValueError(f"fit_k needs triphoton records, got {len(angles)} polarizers")
    ta, tb, tc = angles
    return math.cos(tc - ta - tb) ** 2


def fit_k(
    records: Sequence[CountRecord],
    detector_efficiency: float = 1.0,
    dark_coincidence_rate: float = 0.0,
    lower: float = 1e-9,
    tol: float = 1e-6,
) -> KFit:
    """Maximum-likelihood ``k`` for the time-symmetric triphoton law.

    The binomial log-likelihood is concave in ``k``, so golden-section search
    on ``[lower, 1]`` finds the maximum to within ``tol``.
    """
    if not records:
        raise ValueError("records must not be empty")
    g = np.array([_triphoton_factor(r) for r in records])
    if np.all(g <= 1e-12):
        raise KUnidentifiable("k unidentifiable: every setting has cos^2(theta_c - theta_a - theta_b) ~ 0")
    eta = detector_efficiency ** 3
    dark = dark_coincidence_rate
    n = np.array([r.n_emitted for r in records], dtype=float)
    c = np.array([r.n_coincidence for r in records], dtype=float)

    def loglik(k):
        p = np.clip(k * g * eta + dark, 0.0, 1.0)
        return float(_log_likelihood(c, n, p))

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = lower, 1.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = loglik(x1), loglik(x2)
    while hi - lo > tol:
        if f1 < f2 or (f1 == f2 == -math.inf):
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = loglik(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = loglik(x1)
    k_hat = 0.5 * (lo + hi)
    # the optimum may sit on a boundary the interior probes never reach
    for edge in (lower, 1.0):
        if loglik(edge) > loglik(k_hat):
            k_hat = edge

    warns = []
    if k_hat - lower <= tol:
        warns.append("k estimate at lower search bound; data carry no coincidences")
    if 1.0 - k_hat <= tol:
        warns.append("k estimate at upper bound 1")

    p = np.clip(k_hat * g * eta + dark, 1e-300, 1.0)
    dp = g * eta
    with np.errstate(divide="ignore", invalid="ignore"):
        info = np.sum(dp**2 * (c / p**2 + np.where(c < n, (n - c) / (1.0 - p) ** 2, 0.0)))
    stderr = 1.0 / math.sqrt(info) if info > 0 and math.isfinite(info) else math.inf
    return KFit(k_hat, loglik(k_hat), stderr, tuple(warns))


@dataclass(frozen=True)
class DiscriminationReport:
    best_settings: tuple
    rate_a: float
    rate_b: float
    divergence: float
    hellinger: float
    required_n: int
    n_emitted: int
    generating_model: str
    n_coincidence: int
    decision: str
    log_likelihood_ratio: float
    p_value_estimate: float
    k_fit: Optional[KFit] = None

    def to_dict(self) -> dict:
        out = {
            "best_settings": {
                name: s.angle for name, s in zip(("theta_a", "theta_b", "theta_c"), self.best_settings)
            },
            "rate_a": self.rate_a,
            "rate_b": self.rate_b,
            "divergence": self.divergence,
            "hellinger": self.hellinger,
            "required_n": self.required_n,
            "n_emitted": self.n_emitted,
            "generating_model": self.generating_model,
            "n_coincidence": self.n_coincidence,
            "decision": self.decision,
            "log_likelihood_ratio": _json_float(self.log_likelihood_ratio),
            "p_value_estimate": self.p_value_estimate,
        }
        if self.k_fit is not None:
            out["k_fit"] = {"k": self.k_fit.k, "standard_error": self.k_fit.standard_error}
        return out


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def discriminate(config: DiscriminationConfig, generating: str = "model_a", seed: int = 0) -> DiscriminationReport:
    """Design the experiment, simulate it under one model and run the test.

    ``generating`` names the model that produces the simulated counts.
    Without an explicit ``n_emitted_per_setting`` the run uses the required
    sample size at the optimal setting.
    """
    if generating not in ("model_a", "model_b"):
        raise ValueError(f"generating must be 'model_a' or 'model_b', got {generating!r}")
    best = optimal_settings(config)
    eta, dark = config.efficiency_product, config.dark_coincidence_rate
    pa = float(_effective(best.rate_a, eta, dark))
    pb = float(_effective(best.rate_b, eta, dark))
    if pa == pb:
        raise NoDiscriminatingSetting("no discriminating setting: detection probabilities coincide")
    req = required_samples(pa, pb, config.alpha, config.beta)
    n = config.n_emitted_per_setting or req
    model = config.model_a if generating == "model_a" else config.model_b
    sim = SimulationConfig(
        model=model,
        settings_list=[best.settings],
        n_emitted=n,
        detector_efficiency=config.detector_efficiency,
        dark_coincidence_rate=dark,
        master_seed=seed,
    )
    records = simulate_counts(sim)
    test = likelihood_ratio_test(
        records,
        config.model_a,
        config.model_b,
        alpha=config.alpha,
        n_resamples=config.n_resamples,
        seed=derive_stream_seed(seed, 1),
        detector_efficiency=config.detector_efficiency,
        dark_coincidence_rate=dark,
        profile_k=config.profile_k,
    )
    tags = {"model_a": model_label(config.model_a), "model_b": model_label(config.model_b)}
    if tags["model_a"] == tags["model_b"]:
        tags = {"model_a": "model_a", "model_b": "model_b"}
    return DiscriminationReport(
        best_settings=best.settings,
        rate_a=best.rate_a,
        rate_b=best.rate_b,
        divergence=best.divergence,
        hellinger=best.hellinger,
        required_n=req,
        n_emitted=n,
        generating_model=tags[generating],
        n_coincidence=records[0].n_coincidence,
        decision=tags.get(test.decision, "inconclusive"),
        log_likelihood_ratio=test.log_likelihood_ratio,
        p_value_estimate=test.p_value_estimate,
        k_fit=test.model_b_fit,
    )
