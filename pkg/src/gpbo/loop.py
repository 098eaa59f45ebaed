"""The sequential optimization loop: experiments, trials, and optimize().

One experiment owns one search space and an ordered list of trials, each
evaluating a single arm.  Generation is Sobol for the first ``init_arms``
completed trials and GP-EI afterwards: fit the surrogate on the completed
history (encoded inputs, standardized outputs, always minimizing
internally), take the smallest posterior mean at an observed point as the
incumbent, and propose the EI maximizer.  Degenerate proposals and fit
failures fall back to the next Sobol point rather than aborting.

Maximization is handled entirely at this boundary by negating objectives
on the way in and back out, so every inner computation minimizes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .acqopt import AcqOptConfig, maximize_acquisition
from .acquisition import EI, AcquisitionSpec, incumbent_value
from .errors import EvaluatorFault, NumericalError, UsageError
from .gp import GpModel, fit as fit_gp, posterior
from .sobol import SobolEngine
from .space import (
    Arm,
    Observation,
    SearchSpace,
    Standardizer,
    decode,
    encode,
    fit_standardizer,
    validate_space,
)
from .version import __version__

logger = logging.getLogger("gpbo.loop")

DUPLICATE_TOLERANCE = 1e-9


class NoCompletedTrialsError(UsageError):
    """Every trial failed; carries the experiment for post-mortem logging."""

    def __init__(self, experiment: "Experiment"):
        super().__init__("no completed trials")
        self.experiment = experiment


class TrialStatus(str, Enum):
    CANDIDATE = "CANDIDATE"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


class GeneratorKind(str, Enum):
    SOBOL = "SOBOL"
    GPEI = "GPEI"
    MANUAL = "MANUAL"


@dataclass(frozen=True)
class GenerationStrategy:
    """Sobol-then-GPEI schedule; one arm per trial."""

    init_arms: int = 5
    total_trials: int = 20
    arms_per_trial: int = 1

    def __post_init__(self):
        if self.total_trials < 1:
            raise UsageError("total_trials must be >= 1")
        if self.init_arms < 0 or self.init_arms > self.total_trials:
            raise UsageError("init_arms must be in [0, total_trials]")
        if self.arms_per_trial != 1:
            raise UsageError("only one arm per trial is supported")


@dataclass
class Trial:
    index: int
    arm: Arm
    status: TrialStatus
    generator: GeneratorKind
    observation: Observation | None = None
    elapsed_ms: int = 0
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BestResult:
    """The winning arm with its raw observation and model prediction."""

    arm: Arm
    observed_objective: float
    predicted_mean: float
    predicted_sd: float


@dataclass
class Experiment:
    """Bookkeeping for one optimization run; single-writer, sequential."""

    space: SearchSpace
    minimize: bool
    seed: int
    trials: list[Trial] = field(default_factory=list)
    standardizer: Standardizer | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self._sobol = SobolEngine(self.space.d)

    def completed(self) -> list[Trial]:
        return [t for t in self.trials if t.status == TrialStatus.COMPLETED]

    def to_dict(self) -> dict:
        """JSON-ready snapshot of the experiment state."""
        params = []
        for p in self.space.params:
            params.append(
                {
                    "name": p.name,
                    "kind": p.kind,
                    "lower": p.lower,
                    "upper": p.upper,
                    "options": list(p.options) if p.options is not None else None,
                    "value": p.value,
                    "log_scale": p.log_scale,
                }
            )
        trials = []
        for t in self.trials:
            trials.append(
                {
                    "index": t.index,
                    "arm": {"name": t.arm.name, "values": dict(t.arm.values)},
                    "status": t.status.value,
                    "generator": t.generator.value,
                    "objective": None if t.observation is None else t.observation.objective,
                    "sem": None if t.observation is None else t.observation.sem,
                    "elapsed_ms": t.elapsed_ms,
                    "metadata": dict(t.metadata),
                }
            )
        return {
            "space": params,
            "minimize": self.minimize,
            "seed": self.seed,
            "metadata": dict(self.metadata),
            "trials": trials,
        }


def _derive_seed(base: int, stream: str, k: int) -> int:
    digest = hashlib.blake2b(f"{base}/{stream}/{k}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") % (1 << 31)


def new_experiment(space: SearchSpace, minimize: bool = True, seed: int = 0) -> Experiment:
    """Validate the space and open an empty experiment."""
    report = validate_space(space)
    if not report.ok:
        details = "; ".join(f"{v.param}: {v.message}" for v in report.violations)
        raise UsageError(f"invalid search space: {details}")
    for warning in report.warnings:
        logger.warning("%s", warning)
    return Experiment(
        space=space,
        minimize=minimize,
        seed=seed,
        metadata={"engine_version": __version__, "seed": str(seed)},
    )


def _get_trial(experiment: Experiment, index: int) -> Trial:
    if not 0 <= index < len(experiment.trials):
        raise UsageError(f"no trial with index {index}")
    return experiment.trials[index]


def _encoded_arms(experiment: Experiment) -> np.ndarray:
    return np.array(
        [encode(t.arm, experiment.space) for t in experiment.trials]
    ).reshape(len(experiment.trials), experiment.space.d)


def _near_existing(u: np.ndarray, experiment: Experiment) -> bool:
    if not experiment.trials:
        return False
    gaps = np.abs(_encoded_arms(experiment) - u).max(axis=1)
    return bool(gaps.min() <= DUPLICATE_TOLERANCE)


def _next_sobol_arm(experiment: Experiment, index: int) -> Arm:
    # The engine only moves forward, so repeated fallbacks cannot loop on
    # the same point; the retry guards against collisions with manual arms.
    for _ in range(100):
        u = experiment._sobol.next(1)[0]
        if not _near_existing(u, experiment):
            break
    return decode(u, experiment.space, name=f"trial_{index}")


def _history_model(
    experiment: Experiment, completed: list[Trial], stream: str, k: int
) -> tuple[GpModel, Standardizer]:
    """Fit the surrogate on completed trials, minimizing internally."""
    space = experiment.space
    X = np.stack([encode(t.arm, space) for t in completed])
    y_raw = np.array([t.observation.objective for t in completed])
    y_internal = y_raw if experiment.minimize else -y_raw
    standardizer = fit_standardizer(y_internal)
    experiment.standardizer = standardizer
    y_std = standardizer.apply(y_internal)
    sems = [t.observation.sem for t in completed]
    if all(s is not None for s in sems):
        noise_diag = (np.asarray(sems, dtype=float) / standardizer.scale) ** 2
    else:
        # A partially-noisy history has no fixed-noise representation;
        # fall back to fitting one homoscedastic noise level.
        noise_diag = None
    model = fit_gp(
        X,
        y_std,
        restarts=10,
        seed=_derive_seed(experiment.seed, stream, k),
        noise_diag=noise_diag,
    )
    return model, standardizer


def suggest(experiment: Experiment, strategy: GenerationStrategy | None = None) -> Trial:
    """Propose the next trial: Sobol while initializing, then GP-EI.

    A GP-EI proposal landing within 1e-9 (max norm, encoded) of an
    existing arm, or a failed GP fit, falls back to the next Sobol point.
    """
    strategy = strategy if strategy is not None else GenerationStrategy()
    if any(t.status in (TrialStatus.CANDIDATE, TrialStatus.RUNNING) for t in experiment.trials):
        raise UsageError("an open trial exists; complete or fail it before suggesting")
    started = sum(1 for t in experiment.trials if t.status != TrialStatus.FAILED)
    if started >= strategy.total_trials:
        raise UsageError(f"trial budget of {strategy.total_trials} exhausted")
    index = len(experiment.trials)
    completed = experiment.completed()
    generator = GeneratorKind.SOBOL
    metadata: dict = {}
    if len(completed) < strategy.init_arms or not completed:
        arm = _next_sobol_arm(experiment, index)
    else:
        try:
            model, _ = _history_model(experiment, completed, "fit", index)
            spec = AcquisitionSpec(kind=EI, incumbent=incumbent_value(model))
            cfg = AcqOptConfig(seed=_derive_seed(experiment.seed, "acqopt", index))
            u, _ = maximize_acquisition(model, spec, experiment.space.d, cfg)
            if _near_existing(u, experiment):
                arm = _next_sobol_arm(experiment, index)
                metadata["fallback"] = "duplicate-proposal"
            else:
                arm = decode(u, experiment.space, name=f"trial_{index}")
                generator = GeneratorKind.GPEI
        except NumericalError as exc:
            logger.warning("GP fit failed (%s); falling back to Sobol", exc)
            arm = _next_sobol_arm(experiment, index)
            metadata["fallback"] = "gp-fit-failure"
    trial = Trial(
        index=index,
        arm=arm,
        status=TrialStatus.CANDIDATE,
        generator=generator,
        metadata=metadata,
    )
    experiment.trials.append(trial)
    return trial


def attach_arm(experiment: Experiment, arm: Arm) -> Trial:
    """Insert a user-chosen arm as a MANUAL candidate trial."""
    if any(t.status in (TrialStatus.CANDIDATE, TrialStatus.RUNNING) for t in experiment.trials):
        raise UsageError("an open trial exists; complete or fail it before attaching")
    encode(arm, experiment.space)  # validates the arm against the space
    trial = Trial(
        index=len(experiment.trials),
        arm=arm,
        status=TrialStatus.CANDIDATE,
        generator=GeneratorKind.MANUAL,
    )
    experiment.trials.append(trial)
    return trial


def start_trial(experiment: Experiment, index: int) -> Trial:
    trial = _get_trial(experiment, index)
    if trial.status != TrialStatus.CANDIDATE:
        raise UsageError(f"trial {index} is {trial.status.value}; cannot start")
    trial.status = TrialStatus.RUNNING
    return trial


def complete_trial(
    experiment: Experiment, index: int, observation: Observation, elapsed_ms: int = 0
) -> Trial:
    """Store an observation; a non-finite objective fails the trial instead."""
    trial = _get_trial(experiment, index)
    if trial.status == TrialStatus.CANDIDATE:
        trial.status = TrialStatus.RUNNING
    if trial.status != TrialStatus.RUNNING:
        raise UsageError(f"trial {index} is {trial.status.value}; cannot complete")
    if isinstance(observation, (int, float)) and not isinstance(observation, bool):
        observation = Observation(float(observation))
    trial.elapsed_ms = int(elapsed_ms)
    if not observation.is_finite:
        trial.status = TrialStatus.FAILED
        trial.metadata["fault"] = "non-finite-objective"
        trial.metadata["detail"] = f"objective={observation.objective!r}"
    else:
        trial.status = TrialStatus.COMPLETED
        trial.observation = observation
    return trial


def fail_trial(
    experiment: Experiment, index: int, kind: str, detail: str = "", elapsed_ms: int = 0
) -> Trial:
    """Mark an open trial FAILED, recording the fault kind."""
    trial = _get_trial(experiment, index)
    if trial.status not in (TrialStatus.CANDIDATE, TrialStatus.RUNNING):
        raise UsageError(f"trial {index} is {trial.status.value}; cannot fail")
    trial.status = TrialStatus.FAILED
    trial.elapsed_ms = int(elapsed_ms)
    trial.metadata["fault"] = kind
    if detail:
        trial.metadata["detail"] = detail
    return trial


def best_result(experiment: Experiment) -> BestResult:
    """Pick the winner among completed trials.

    With a noise-free history (no sem anywhere, or all zero) the best raw
    observation wins; under noise the completed arm with the best
    posterior mean under a freshly fitted model wins.  Predictions are
    reported in raw objective units either way.
    """
    completed = experiment.completed()
    if not completed:
        raise UsageError("no completed trials")
    model, standardizer = _history_model(
        experiment, completed, "final", len(experiment.trials)
    )
    experiment.metadata["final_hyperparams"] = json.dumps(
        {
            "family": model.theta.kernel.family,
            "lengthscales": list(model.theta.kernel.lengthscales),
            "signal_variance": model.theta.kernel.signal_variance,
            "noise_variance": model.theta.noise_variance,
            "mean": model.theta.mean.constant,
            "jitter": model.jitter_used,
        }
    )
    X = np.stack([encode(t.arm, experiment.space) for t in completed])
    summary = posterior(model, X)
    noise_free = all(t.observation.sem in (None, 0, 0.0) for t in completed)
    if noise_free:
        objectives = np.array([t.observation.objective for t in completed])
        best = int(np.argmin(objectives) if experiment.minimize else np.argmax(objectives))
    else:
        best = int(np.argmin(summary.means))
    mean_internal = float(standardizer.invert(summary.means[best]))
    predicted_mean = mean_internal if experiment.minimize else -mean_internal
    predicted_sd = float(np.sqrt(summary.variances[best]) * standardizer.scale)
    winner = completed[best]
    return BestResult(
        arm=winner.arm,
        observed_objective=winner.observation.objective,
        predicted_mean=predicted_mean,
        predicted_sd=predicted_sd,
    )


def optimize(
    space: SearchSpace,
    evaluate,
    minimize: bool = True,
    total_trials: int = 20,
    seed: int = 0,
    init_arms: int = 5,
) -> tuple[BestResult, Experiment]:
    """Run the full loop and return the best configuration found.

    Parameters
    ----------
    space : the feasible set; must validate cleanly
    evaluate : callable(Arm) -> Observation (a bare float also works)
    minimize : direction of optimization
    total_trials : evaluation budget; failed trials consume it
    seed : master seed for every stochastic component of the run

    Evaluator exceptions and non-finite objectives become FAILED trials;
    the loop only errors out if nothing completes at all.
    """
    experiment = new_experiment(space, minimize=minimize, seed=seed)
    strategy = GenerationStrategy(
        init_arms=min(init_arms, total_trials), total_trials=total_trials
    )
    for _ in range(total_trials):
        trial = suggest(experiment, strategy)
        start_trial(experiment, trial.index)
        began = time.perf_counter()
        try:
            observation = evaluate(trial.arm)
        except EvaluatorFault as fault:
            elapsed = int((time.perf_counter() - began) * 1000)
            fail_trial(experiment, trial.index, fault.kind, fault.detail, elapsed)
            continue
        except Exception as exc:  # evaluator bugs are data, not loop aborts
            elapsed = int((time.perf_counter() - began) * 1000)
            fail_trial(experiment, trial.index, "evaluator-exception", repr(exc), elapsed)
            continue
        elapsed = int((time.perf_counter() - began) * 1000)
        complete_trial(experiment, trial.index, observation, elapsed_ms=elapsed)
    if not experiment.completed():
        raise NoCompletedTrialsError(experiment)
    return best_result(experiment), experiment
