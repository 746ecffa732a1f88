"""Correction-pulse environment.

A fixed pulse P (Gaussian Rabi profile of area π/2 over 500 ns, detuning
ramp −20 → 20 rad/μs) acts on one atom. The agent shapes a second pulse P′ of
the same length, appended after P, through its Rabi area ``a`` and detuning
endpoints ``delta_i``/``delta_f``. Observations are noisy |ψ(t)|² traces over
P + P′. The noisy outcome scored by the reward and the KL monitor is what a
detector would report: the final trace entry passed through the readout
confusion (ε, ε′). The reward is 1 when that outcome moved closer (ℓ1) to the
noiseless outcome of P alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from ..evolution import DEFAULT_DT_NS
from ..noise import NoiseParams, make_rng, readout_distribution
from ..register import AtomRegister
from ..simulator import ideal_probabilities, probability_trace
from ..waveforms import PulseSequence, gaussian_ramp_pulse
from .kl import KL_FLOOR, kl_divergence, l1_distance

_BOUND_TOL = 1e-9

# action index -> (parameter, direction)
ACTIONS = (
    ("area", +1),
    ("area", -1),
    ("delta_i", +1),
    ("delta_i", -1),
    ("delta_f", +1),
    ("delta_f", -1),
)


@dataclass(frozen=True)
class CorrectionParams:
    area: float
    delta_i: float
    delta_f: float


@dataclass(frozen=True)
class EnvConfig:
    duration: float = 500.0
    base_area: float = math.pi / 2
    base_delta_start: float = -20.0
    base_delta_stop: float = 20.0
    initial: CorrectionParams = CorrectionParams(math.pi / 20, 0.0, 0.0)
    area_bounds: tuple[float, float] = (0.0, math.pi / 2)
    delta_bounds: tuple[float, float] = (-20.0, 20.0)
    area_step: float = math.pi / 200
    delta_step: float = 0.2
    max_steps: int = 100
    n_sims: int = 10
    n_samples: int = 25
    noise: NoiseParams = field(default_factory=NoiseParams.device_estimate)
    dt: float = DEFAULT_DT_NS
    register: AtomRegister = AtomRegister(((0.0, 0.0),))
    readout_errors: bool = True

    def in_bounds(self, p: CorrectionParams) -> bool:
        lo, hi = self.area_bounds
        dlo, dhi = self.delta_bounds
        return (
            lo - _BOUND_TOL <= p.area <= hi + _BOUND_TOL
            and dlo - _BOUND_TOL <= p.delta_i <= dhi + _BOUND_TOL
            and dlo - _BOUND_TOL <= p.delta_f <= dhi + _BOUND_TOL
        )

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "base_area": self.base_area,
            "base_delta_start": self.base_delta_start,
            "base_delta_stop": self.base_delta_stop,
            "initial": [self.initial.area, self.initial.delta_i, self.initial.delta_f],
            "area_bounds": list(self.area_bounds),
            "delta_bounds": list(self.delta_bounds),
            "area_step": self.area_step,
            "delta_step": self.delta_step,
            "max_steps": self.max_steps,
            "n_sims": self.n_sims,
            "n_samples": self.n_samples,
            "noise": self.noise.to_dict(),
            "dt": self.dt,
            "register": self.register.to_dict(),
            "readout_errors": self.readout_errors,
        }

    def measured(self, probs) -> np.ndarray:
        """The outcome distribution a detector reports for true probabilities ``probs``."""
        p = np.asarray(getattr(probs, "values", probs), dtype=float)
        if not self.readout_errors:
            return p
        return readout_distribution(p, self.noise.eps, self.noise.eps_prime)


@dataclass
class EnvState:
    trace: np.ndarray
    params: CorrectionParams
    step: int
    distance: float
    final_probs: np.ndarray
    kl: float | None
    done: bool = False

    @property
    def observation(self) -> np.ndarray:
        return self.trace


class CorrectionEnv:
    n_actions = len(ACTIONS)

    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        c = self.config
        self.base_pulse = gaussian_ramp_pulse(c.duration, c.base_area, c.base_delta_start, c.base_delta_stop)
        self.ideal = ideal_probabilities(c.register, self.base_pulse, c.dt).values
        self.observation_size = c.n_samples * 2**c.register.n_atoms
        self.state: EnvState | None = None
        self.rng: np.random.Generator | None = None

    def correction_pulse(self, p: CorrectionParams) -> PulseSequence:
        return gaussian_ramp_pulse(self.config.duration, p.area, p.delta_i, p.delta_f)

    def full_pulse(self, p: CorrectionParams) -> PulseSequence:
        return self.base_pulse + self.correction_pulse(p)

    def measure(self, p: CorrectionParams) -> tuple[np.ndarray, np.ndarray]:
        """Noisy trace over P + P′ (flattened) and the measured final distribution."""
        c = self.config
        trace = probability_trace(
            c.register, self.full_pulse(p), c.noise, c.n_sims, c.n_samples, self.rng, c.dt
        )
        flat = np.concatenate([v.values for v in trace])
        return flat, c.measured(trace[-1])

    def reset(self, seed=0) -> EnvState:
        self.rng = make_rng(seed)
        p = self.config.initial
        trace, final = self.measure(p)
        self.state = EnvState(
            trace, p, 0, l1_distance(final, self.ideal), final,
            kl_divergence(final, self.ideal, KL_FLOOR),
        )
        return self.state

    def apply_action(self, p: CorrectionParams, action: int) -> CorrectionParams:
        if not 0 <= action < self.n_actions:
            raise ConfigurationError(f"action must be in 0..{self.n_actions - 1}, got {action}")
        name, sign = ACTIONS[action]
        step = self.config.area_step if name == "area" else self.config.delta_step
        return replace(p, **{name: getattr(p, name) + sign * step})

    def step(self, action: int) -> tuple[EnvState, int, bool]:
        s = self.state
        if s is None or s.done:
            raise ConfigurationError("call reset() before stepping a finished episode")
        proposed = self.apply_action(s.params, action)
        t = s.step + 1
        if not self.config.in_bounds(proposed):
            self.state = replace(s, step=t, done=True, kl=None)
            return self.state, 0, True
        trace, final = self.measure(proposed)
        dist = l1_distance(final, self.ideal)
        reward = int(dist < s.distance)
        done = t >= self.config.max_steps
        self.state = EnvState(
            trace, proposed, t, dist, final, kl_divergence(final, self.ideal, KL_FLOOR), done
        )
        return self.state, reward, done


def uncorrected_baseline(config: EnvConfig | None = None, n_runs: int = 100, seed=0) -> float:
    """Mean KL between noisy and ideal outcomes of P alone over ``n_runs`` runs.

    Each run estimates the noisy outcome the same way the environment does
    (average of ``n_sims`` noisy simulations, then the readout confusion).
    """
    env = CorrectionEnv(config)
    c = env.config
    rng = make_rng(seed)
    kls = []
    for _ in range(n_runs):
        trace = probability_trace(c.register, env.base_pulse, c.noise, c.n_sims, c.n_samples, rng, c.dt)
        kls.append(kl_divergence(c.measured(trace[-1]), env.ideal, KL_FLOOR))
    return float(np.mean(kls))
