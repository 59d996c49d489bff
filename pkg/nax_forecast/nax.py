"""
The recurrent density network:

    a_t = w X_t + f P_{t-1} + w0,   H_t = H(a_t),   z_t = l H_t + l0
    μ_t = z_t[0],   σ_t = softplus(z_t[1]) + SIGMA_FLOOR,   P_t = (μ_t, σ_t)

trained by maximising the Gaussian likelihood of the GLM residuals, with gradients by backpropagation through time
and Adam updates. Everything here works in min-max normalised space.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from nax_forecast.core.exceptions import CacheMismatchError, NonFiniteError
from nax_forecast.core.models import FULL_SERIES, SIGMA_FLOOR, Activation
from nax_forecast.core.models.nax import FEEDBACK_SIZE, NaxConfig, NaxParams

APP_LOGGER = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass(frozen=True, eq=False)
class DensityParams:
    """Per-step Gaussian parameters of the residual, in normalised space"""

    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True, eq=False)
class ForwardCache:
    """
    Everything the backward pass needs from a forward pass. Arrays are kept with an explicit batch axis:
    inputs (T, B, I), pre/hidden (T, B, N), raw (T, B, 2), feedback (T + 1, B, 2) where feedback[0] = P_0 and
    feedback[t + 1] = (μ_t, σ_t).
    """

    inputs: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray
    raw: np.ndarray
    feedback: np.ndarray
    activation: Activation
    params_fingerprint: str
    batched: bool

    def _unbatch(self, arr: np.ndarray) -> np.ndarray:
        return arr if self.batched else arr[:, 0]

    @property
    def mu(self) -> np.ndarray:
        return self._unbatch(self.feedback[1:, :, 0])

    @property
    def sigma(self) -> np.ndarray:
        return self._unbatch(self.feedback[1:, :, 1])

    @property
    def density(self) -> DensityParams:
        return DensityParams(self.mu, self.sigma)

    @property
    def hidden_activations(self) -> np.ndarray:
        return self._unbatch(self.hidden)

    @property
    def last_feedback(self) -> np.ndarray:
        """P_T, the state to carry into the next step"""
        return self._unbatch(self.feedback[-1:])[0]


def activate(a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.SIGMOID:
        return expit(a)
    return softmax(a, axis=-1)


def activation_backward(h: np.ndarray, dh: np.ndarray, activation: Activation) -> np.ndarray:
    """dL/da given the activations h = H(a) and dL/dh"""
    if activation is Activation.SIGMOID:
        return dh * h * (1.0 - h)
    return h * (dh - np.sum(h * dh, axis=-1, keepdims=True))


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def forward(
        params: NaxParams, inputs: np.ndarray, p0: Optional[np.ndarray] = None,
        activation: Activation = Activation.SOFTMAX) -> ForwardCache:
    """
    Run the recurrence left to right over `inputs`, shaped (T, I) or (T, B, I) for B independent sequences.
    `p0` is the initial feedback (μ, σ), (0, 0) when not given; it may be (2,) or (B, 2).
    """
    x = np.asarray(inputs, dtype=float)
    batched = x.ndim == 3
    if not batched:
        x = x[:, None, :]
    steps, batch, n_inputs = x.shape
    if n_inputs != params.inputs:
        raise ValueError(f"Network expects {params.inputs} inputs, got {n_inputs}")

    feedback = np.empty((steps + 1, batch, FEEDBACK_SIZE))
    feedback[0] = np.zeros(FEEDBACK_SIZE) if p0 is None else np.broadcast_to(p0, (batch, FEEDBACK_SIZE))
    pre = np.empty((steps, batch, params.neurons))
    hidden = np.empty_like(pre)
    raw = np.empty((steps, batch, FEEDBACK_SIZE))

    with np.errstate(over="ignore", invalid="ignore"):
        xw = x @ params.w.T + params.w0
        for t in range(steps):
            pre[t] = xw[t] + feedback[t] @ params.f.T
            hidden[t] = activate(pre[t], activation)
            raw[t] = hidden[t] @ params.l.T + params.l0
            feedback[t + 1, :, 0] = raw[t, :, 0]
            feedback[t + 1, :, 1] = softplus(raw[t, :, 1]) + SIGMA_FLOOR

    finite = (np.isfinite(pre).all(axis=(1, 2)) & np.isfinite(hidden).all(axis=(1, 2))
              & np.isfinite(raw).all(axis=(1, 2)) & np.isfinite(feedback[1:]).all(axis=(1, 2)))
    if not finite.all():
        raise NonFiniteError("Non-finite value in the forward recurrence", step=int(np.argmin(finite)))

    return ForwardCache(x, pre, hidden, raw, feedback, activation, params.fingerprint(), batched)


def gaussian_nll(mu, sigma, residual) -> np.ndarray:
    """Elementwise -ln N(residual; mu, sigma^2) = ½ ln(2πσ²) + (R - μ)² / (2σ²)"""
    mu, sigma, residual = (np.asarray(a, dtype=float) for a in (mu, sigma, residual))
    if not (sigma > 0).all():
        raise ValueError("sigma must be positive")
    return 0.5 * np.log(2 * np.pi * sigma ** 2) + (residual - mu) ** 2 / (2 * sigma ** 2)


def batch_loss(params: NaxParams, cache: ForwardCache, targets: np.ndarray, l2: float = 0.0) -> float:
    """Mean NLL over every step (and sequence) plus l2 * (|w|² + |f|² + |l|²)"""
    targets = _check_targets(cache, targets)
    nll = gaussian_nll(cache.feedback[1:, :, 0], cache.feedback[1:, :, 1], targets)
    return float(np.mean(nll) + l2 * params.weight_norm())


def _check_targets(cache: ForwardCache, targets: np.ndarray) -> np.ndarray:
    targets = np.asarray(targets, dtype=float)
    expected = cache.feedback.shape[:2]
    expected = (expected[0] - 1, expected[1])
    if not cache.batched:
        targets = targets.reshape(-1, 1)
    if targets.shape != expected:
        raise CacheMismatchError(f"Targets have shape {targets.shape} but the forward pass covered {expected}")
    return targets


def backward(
        params: NaxParams, cache: ForwardCache, targets: np.ndarray, l2: float = 0.0) -> Tuple[float, NaxParams]:
    """
    The batch loss and its exact gradient with respect to every parameter array, back through the whole recurrence
    (including the feedback of μ and σ and the softplus link on σ).
    """
    if cache.params_fingerprint != params.fingerprint():
        raise CacheMismatchError("The forward cache was computed with different parameters")
    targets = _check_targets(cache, targets)

    mu, sigma = cache.feedback[1:, :, 0], cache.feedback[1:, :, 1]
    count = targets.size
    error = targets - mu
    loss = float(np.mean(gaussian_nll(mu, sigma, targets)) + l2 * params.weight_norm())

    # Direct contributions of each step's NLL
    d_mu = -error / sigma ** 2 / count
    d_sigma = (1.0 / sigma - error ** 2 / sigma ** 3) / count

    steps = targets.shape[0]
    d_raw = np.empty_like(cache.raw)
    d_pre = np.empty_like(cache.pre)
    d_feedback = np.zeros(cache.feedback.shape[1:])
    link_slope = expit(cache.raw[:, :, 1])
    for t in range(steps - 1, -1, -1):
        d_raw[t, :, 0] = d_mu[t] + d_feedback[:, 0]
        d_raw[t, :, 1] = (d_sigma[t] + d_feedback[:, 1]) * link_slope[t]
        d_hidden = d_raw[t] @ params.l
        d_pre[t] = activation_backward(cache.hidden[t], d_hidden, cache.activation)
        d_feedback = d_pre[t] @ params.f

    grads = NaxParams(
        w=np.einsum("tbn,tbi->ni", d_pre, cache.inputs) + 2 * l2 * params.w,
        w0=d_pre.sum(axis=(0, 1)),
        f=np.einsum("tbn,tbk->nk", d_pre, cache.feedback[:-1]) + 2 * l2 * params.f,
        l=np.einsum("tbk,tbn->kn", d_raw, cache.hidden) + 2 * l2 * params.l,
        l0=d_raw.sum(axis=(0, 1)),
    )
    return loss, grads


@dataclass(frozen=True)
class AdamState:
    m: NaxParams
    v: NaxParams
    step: int = 0

    @staticmethod
    def fresh(params: NaxParams) -> "AdamState":
        zeros = NaxParams.zeros(params.neurons, params.inputs)
        return AdamState(zeros, zeros, 0)


def adam_step(
        params: NaxParams, grads: NaxParams, state: AdamState, learning_rate: float) -> Tuple[NaxParams, AdamState]:
    step = state.step + 1
    m = state.m.map(lambda m_, g: ADAM_BETA1 * m_ + (1 - ADAM_BETA1) * g, grads)
    v = state.v.map(lambda v_, g: ADAM_BETA2 * v_ + (1 - ADAM_BETA2) * g ** 2, grads)
    m_correction = 1 - ADAM_BETA1 ** step
    v_correction = 1 - ADAM_BETA2 ** step
    updated = params.map(
        lambda p, m_, v_: p - learning_rate * (m_ / m_correction) / (np.sqrt(v_ / v_correction) + ADAM_EPSILON), m, v)
    return updated, AdamState(m, v, step)


def contiguous_windows(length: int, batch_size) -> List[slice]:
    """
    Cut [0, length) into consecutive windows of `batch_size` days; a trailing window shorter than 2 days is merged into
    the previous one. `FULL_SERIES` gives a single window.
    """
    if batch_size == FULL_SERIES or batch_size >= length:
        return [slice(0, length)]
    starts = list(range(0, length, batch_size))
    if length - starts[-1] < 2 and len(starts) > 1:
        starts.pop()
    ends = starts[1:] + [length]
    return [slice(s, e) for s, e in zip(starts, ends)]


@dataclass(frozen=True)
class TrainingResult:
    params: NaxParams
    loss_history: List[float]
    validation_history: List[float] = field(default_factory=list)
    best_epoch: Optional[int] = None


def validation_nll(params: NaxParams, inputs: np.ndarray, targets: np.ndarray,
                   validation: Tuple[np.ndarray, np.ndarray], activation: Activation) -> float:
    """
    Mean NLL of the validation window, with the recurrence run through the training window first so the validation
    days start from the feedback the network carries into them.
    """
    val_inputs, val_targets = validation
    cache = forward(params, np.vstack([inputs, val_inputs]), activation=activation)
    start = len(inputs)
    return float(np.mean(gaussian_nll(cache.mu[start:], cache.sigma[start:], val_targets)))


def _check_validation(inputs: np.ndarray, validation: Tuple[np.ndarray, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    val_inputs, val_targets = (np.asarray(a, dtype=float) for a in validation)
    if len(val_inputs) == 0 or len(val_inputs) != len(val_targets):
        raise ValueError(f"Need a nonempty validation window with matching targets, got {len(val_inputs)} and "
                         f"{len(val_targets)} rows")
    if val_inputs.ndim != 2 or val_inputs.shape[1] != inputs.shape[1]:
        raise ValueError(f"Validation inputs have shape {val_inputs.shape}, expected (*, {inputs.shape[1]})")
    return val_inputs, val_targets


def train(
        config: NaxConfig, inputs: np.ndarray, targets: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        validation: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> TrainingResult:
    """
    Fit the network to normalised residual `targets` given normalised `inputs` (T, I).

    The series is cut into contiguous windows of `config.batch_size` days, each starting from P_0 = (0, 0); windows
    are visited in a shuffled order each epoch, with one Adam step per window. With a `validation` window of
    (inputs, targets) following the training window, its NLL is tracked after every epoch; training stops after
    `config.patience` epochs without improvement and the weights of the best epoch are kept. Without one, all
    `config.epochs` are run.
    `loss_history[0]` is the loss before any update, followed by one mean training loss per epoch.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(inputs) == 0 or len(inputs) != len(targets):
        raise ValueError(f"Need a nonempty training window with matching targets, got {len(inputs)} and "
                         f"{len(targets)} rows")
    if validation is not None:
        validation = _check_validation(inputs, validation)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    windows = contiguous_windows(len(inputs), config.batch_size)
    params = NaxParams.initialise(config.neurons, inputs.shape[1], rng)
    state = AdamState.fresh(params)

    def window_loss(p: NaxParams, window: slice) -> float:
        return batch_loss(p, forward(p, inputs[window], activation=config.activation), targets[window], config.l2)

    loss_history = [float(np.mean([window_loss(params, w) for w in windows]))]
    validation_history = []
    best_params, best_nll, best_epoch, since_best = params, np.inf, None, 0

    for epoch in range(1, config.epochs + 1):
        losses = []
        for index in rng.permutation(len(windows)):
            window = windows[index]
            try:
                cache = forward(params, inputs[window], activation=config.activation)
            except NonFiniteError as err:
                raise NonFiniteError(f"Training diverged in epoch {epoch}: {err}", step=state.step + 1)
            loss, grads = backward(params, cache, targets[window], config.l2)
            if not math.isfinite(loss):
                raise NonFiniteError(f"Training loss became non-finite in epoch {epoch}", step=state.step + 1)
            params, state = adam_step(params, grads, state, config.learning_rate)
            losses.append(loss)
        loss_history.append(float(np.mean(losses)))
        APP_LOGGER.debug(f"epoch {epoch}: training loss {loss_history[-1]:.6f}")

        if validation is not None:
            try:
                nll = validation_nll(params, inputs, targets, validation, config.activation)
            except NonFiniteError as err:
                raise NonFiniteError(f"Validation pass diverged in epoch {epoch}: {err}", step=state.step)
            validation_history.append(nll)
            if nll < best_nll:
                best_params, best_nll, best_epoch, since_best = params, nll, epoch, 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    APP_LOGGER.debug(f"Early stop at epoch {epoch}; keeping the weights of epoch {best_epoch}")
                    break

    if validation is None:
        return TrainingResult(params, loss_history, best_epoch=config.epochs)
    if best_epoch is not None:
        if best_epoch == config.epochs:
            APP_LOGGER.warning(f"Validation NLL was still improving at the epoch budget ({config.epochs})")
        params = best_params
    return TrainingResult(params, loss_history, validation_history, best_epoch)
