"""Plain and noisy MMD particle descent with trajectory logging.

The update per particle is

    x_i <- x_i - gamma * F(x_i + beta_t u_i),   u_i ~ N(0, I_d),

where F is the MMD gradient field (see :mod:`mmdpoints.mmd`).  Noise enters
only through the evaluation point of the kernel gradients; the particle
position itself is never perturbed, and beta = 0 reduces exactly to plain
gradient descent on squared MMD.

Also here: power-law and adaptive noise schedules, the empirical checker
for the gradient-dominance noise condition (lhs >= 4 beta^2 d^2 kappa^2
MMD^2), and the step-size admissibility check 256 gamma^2 d^2 kappa^2 <= 1.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .mmd import as_point_set, gradient_field, mmd_squared, stationarity_residual

__all__ = [
    "NoNoise",
    "PowerLawNoise",
    "AdaptiveNoise",
    "DescentConfig",
    "TrajectoryRecord",
    "DescentResult",
    "NoiseCheck",
    "StepSizeCheck",
    "DivergenceError",
    "NonFiniteUpdateError",
    "beta_at",
    "descent_step",
    "run_descent",
    "check_noise_level",
    "check_step_size",
    "origin_init",
]

DIVERGENCE_FACTOR = 1e3


class DivergenceError(RuntimeError):
    """MMD exceeded DIVERGENCE_FACTOR times its initial value during a run."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory or []


class NonFiniteUpdateError(RuntimeError):
    """A descent update overflowed; carries the first offending particle index."""

    def __init__(self, index):
        super().__init__(f"non-finite update for particle {index}")
        self.index = index


@dataclass(frozen=True)
class NoNoise:
    """beta_t = 0 for all t (plain descent)."""


@dataclass(frozen=True)
class PowerLawNoise:
    """beta_t = beta0 * t^(-alpha) with alpha in [0, 1/2].

    alpha = 1/2 sits on the boundary of the admissible decay range and is
    accepted with a warning.
    """

    beta0: float = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.beta0) and self.beta0 > 0):
            raise ValueError(f"beta0 must be positive, got {self.beta0}")
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 0.5], got {self.alpha}")
        if self.alpha == 0.5:
            warnings.warn(
                "alpha = 0.5 is the boundary of the admissible decay range",
                stacklevel=3,
            )


@dataclass(frozen=True)
class AdaptiveNoise:
    """Per-iteration noise selection from candidate exponents.

    At iteration t the candidate levels are t^(-alpha) for each exponent;
    they are tried in increasing-beta order and the smallest level passing
    the noise-condition check is used, falling back to the largest level
    when none passes.
    """

    candidates: tuple = (0.5, 0.25, 0.1)
    check_samples: int = 100

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise ValueError("candidate exponent set must be non-empty")
        for a in self.candidates:
            if not 0.0 <= a <= 0.5:
                raise ValueError(f"candidate exponents must lie in [0, 0.5], got {a}")
        if self.check_samples < 1:
            raise ValueError("check_samples must be >= 1")


NoiseSchedule = NoNoise | PowerLawNoise | AdaptiveNoise


@dataclass(frozen=True)
class DescentConfig:
    """Run parameters for :func:`run_descent`.

    ``stop_residual`` takes precedence over the step budget when set; it is
    checked at the logging cadence.  ``assumption_check_every`` enables the
    noise-condition checker at that cadence with
    ``assumption_check_samples`` fresh noise draws per check.
    """

    gamma: float
    steps: int
    schedule: NoiseSchedule = field(default_factory=NoNoise)
    seed: int = 0
    log_every: int = 100
    stop_residual: float | None = None
    assumption_check_every: int | None = None
    assumption_check_samples: int = 100

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.stop_residual is not None and not self.stop_residual >= 0:
            raise ValueError("stop_residual must be >= 0 when set")
        if self.assumption_check_every is not None and self.assumption_check_every < 1:
            raise ValueError("assumption_check_every must be >= 1 when set")
        if self.assumption_check_samples < 1:
            raise ValueError("assumption_check_samples must be >= 1")


@dataclass
class TrajectoryRecord:
    """One logged iteration; the noise-check fields stay None off-cadence."""

    t: int
    mmd: float
    residual: float
    beta: float
    a5_lhs: float | None = None
    a5_rhs: float | None = None
    a5_satisfied: bool | None = None


@dataclass
class DescentResult:
    final: np.ndarray
    trajectory: list
    steps_run: int
    stopped_on_residual: bool
    config: DescentConfig


@dataclass(frozen=True)
class NoiseCheck:
    """Outcome of the noise-condition check.

    ``rhs``/``satisfied`` use the kernel's full derivative bound
    (``kappa_bound``); ``rhs_first_order``/``satisfied_first_order`` repeat
    the comparison with the first-derivative bound (``grad_bound``), the
    loosest reading of the constant.  Both are reported because the two
    bounds differ by orders of magnitude and only the constant's role, not
    its value, is fixed by the theory.
    """

    lhs: float
    rhs: float
    satisfied: bool
    rhs_first_order: float
    satisfied_first_order: bool


@dataclass(frozen=True)
class StepSizeCheck:
    ok: bool
    bound: float


def beta_at(schedule, t, *, kernel=None, points=None, target=None, rng=None):
    """Noise level used at iteration t (t >= 1).

    Adaptive schedules need the run state (kernel, points, target, rng) to
    evaluate the noise-condition check; without it the fallback branch (the
    largest candidate level) is returned, which is also what a run uses when
    no candidate passes.
    """
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    if isinstance(schedule, NoNoise):
        return 0.0
    if isinstance(schedule, PowerLawNoise):
        return schedule.beta0 * float(t) ** -schedule.alpha
    levels = sorted(float(t) ** -a for a in schedule.candidates)
    if kernel is None or points is None or target is None or rng is None:
        return levels[-1]
    for beta in levels:
        check = check_noise_level(
            kernel, points, target, beta, schedule.check_samples, rng
        )
        if check.satisfied:
            return beta
    return levels[-1]


def _step(X, kernel, target, gamma, beta, rng):
    at = X + beta * rng.standard_normal(X.shape) if beta > 0 else None
    with np.errstate(over="ignore", invalid="ignore"):
        moved = X - gamma * gradient_field(kernel, X, target, at=at)
    if not np.isfinite(moved).all():
        bad = int(np.flatnonzero(~np.isfinite(moved).all(axis=1))[0])
        raise NonFiniteUpdateError(bad)
    return moved


def descent_step(points, kernel, target, gamma, beta, rng):
    """One simultaneous update of all particles from the pre-step state.

    With beta > 0 one standard-normal (n, d) block is drawn from ``rng``;
    with beta = 0 the generator is left untouched.
    """
    X = as_point_set(points)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    return _step(X, kernel, target, gamma, beta, np.random.default_rng(rng))


def run_descent(x0, kernel, target, config):
    """Iterate descent steps with logging, stopping and divergence guards.

    Returns the final point set plus the trajectory of logged records.  MMD
    and the stationarity residual are evaluated fresh at every logged
    iteration; a run aborts with :class:`DivergenceError` if MMD exceeds
    ``DIVERGENCE_FACTOR`` times its initial value.
    """
    X = as_point_set(x0).copy()
    rng = np.random.default_rng(config.seed)
    noise_rng, check_rng = rng.spawn(2)
    initial_mmd = mmd_squared(kernel, X, target).mmd
    adaptive = isinstance(config.schedule, AdaptiveNoise)
    trajectory = []
    stopped = False
    steps_run = 0
    for t in range(1, config.steps + 1):
        if adaptive:
            beta = beta_at(
                config.schedule, t, kernel=kernel, points=X, target=target, rng=check_rng
            )
        else:
            beta = beta_at(config.schedule, t)
        X = _step(X, kernel, target, config.gamma, beta, noise_rng)
        steps_run = t
        cadence = config.assumption_check_every
        check_now = cadence is not None and t % cadence == 0
        log_now = t % config.log_every == 0 or t == config.steps or check_now
        if not log_now:
            continue
        report = mmd_squared(kernel, X, target)
        residual = stationarity_residual(kernel, X, target)
        record = TrajectoryRecord(t=t, mmd=report.mmd, residual=residual, beta=beta)
        if check_now and beta > 0:
            check = check_noise_level(
                kernel, X, target, beta, config.assumption_check_samples, check_rng
            )
            record.a5_lhs = check.lhs
            record.a5_rhs = check.rhs
            record.a5_satisfied = check.satisfied
        trajectory.append(record)
        if initial_mmd > 0 and report.mmd > DIVERGENCE_FACTOR * initial_mmd:
            raise DivergenceError(
                f"MMD {report.mmd:.3e} exceeded {DIVERGENCE_FACTOR:g} x initial "
                f"{initial_mmd:.3e} at iteration {t}",
                trajectory,
            )
        if config.stop_residual is not None and residual <= config.stop_residual:
            stopped = True
            break
    return DescentResult(
        final=X,
        trajectory=trajectory,
        steps_run=steps_run,
        stopped_on_residual=stopped,
        config=config,
    )


def check_noise_level(kernel, points, target, beta, draws, rng):
    """Empirical check of the gradient-dominance noise condition.

    lhs: (1/n) sum_i E_u |(1/n) sum_j Phi(x_i + beta u_i, x_j)|^2, estimated
    with ``draws`` fresh noise blocks; rhs: 4 beta^2 d^2 kappa^2 MMD^2 with
    kappa the kernel's uniform derivative bound.  Both values are reported
    so near-stationary degenerate comparisons stay visible to the caller.
    """
    X = as_point_set(points)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    n, d = X.shape
    rng = np.random.default_rng(rng)
    u = rng.standard_normal((draws, n, d))
    at = (X[None, :, :] + beta * u).reshape(draws * n, d)
    F = gradient_field(kernel, X, target, at=at)
    lhs = float(np.einsum("nd,nd->n", F, F).mean())
    m2 = max(mmd_squared(kernel, X, target).mmd_squared, 0.0)
    scale = 4.0 * beta**2 * d**2 * m2
    rhs = scale * kernel.kappa_bound() ** 2
    rhs_first = scale * kernel.grad_bound() ** 2
    return NoiseCheck(
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs >= rhs,
        rhs_first_order=rhs_first,
        satisfied_first_order=lhs >= rhs_first,
    )


def check_step_size(gamma, dim, kappa):
    """Admissibility of the step size: 256 gamma^2 d^2 kappa^2 <= 1.

    Returns the verdict together with the admissible maximum
    1 / (16 d kappa).  Callers should treat a failing check as a warning,
    not a hard error: much larger steps are routinely stable in practice.
    """
    if not (gamma > 0 and dim > 0 and kappa > 0):
        raise ValueError("gamma, dim and kappa must all be positive")
    return StepSizeCheck(
        ok=256.0 * gamma**2 * dim**2 * kappa**2 <= 1.0,
        bound=1.0 / (16.0 * dim * kappa),
    )


def origin_init(n, dim, jitter=0.0, rng=None):
    """All particles at the origin, optionally with tiny Gaussian jitter.

    Jitter exists only to break exact coincidence for kernels whose Gram
    matrix would otherwise be singular; it is off by default.
    """
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be >= 1")
    X = np.zeros((n, dim))
    if jitter > 0:
        X += jitter * np.random.default_rng(rng).standard_normal((n, dim))
    return X
