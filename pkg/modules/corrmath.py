"""Closed-form interference and link-success correlation results for K-tier HCNs.

Every function is pure: no settings, no I/O, no shared state. Tier indices
are 1-based, all numeric parameters linear.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from modules.data import FadingMoments, NetworkModel, TierParams
from modules.entities import Direction, MonotonicityVerdict
from modules.errors import ModeConflictError, ModelError, QuadratureError

QUADRATURE_TOLERANCE = 1e-9
QUADRATURE_RELATIVE_TOLERANCE = 1e-10
CAMPBELL_RELATIVE_TOLERANCE = 1e-11
FLAT_TOLERANCE = 1e-12
DELTA_MARGIN = 1e-6

_UNIT_BALL_VOLUMES = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def _checkCount(name: str, value: int, minimum: int) -> None:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ModelError(f"{name} must be an integer, got {value!r}.")
    if value < minimum:
        raise ModelError(f"{name} must be >= {minimum}, got {value}.")


def _checkDelta(delta_value: float) -> None:
    if not DELTA_MARGIN <= delta_value <= 1 - DELTA_MARGIN:
        raise ModelError(
            f"delta must lie in [{DELTA_MARGIN}, {1 - DELTA_MARGIN}], got {delta_value}."
        )


def _checkDistance(distance: float) -> None:
    if not math.isfinite(distance) or distance < 0:
        raise ModelError(f"Distance must be finite and >= 0, got {distance}.")


def _requireBounded(model: NetworkModel) -> None:
    if not model.is_bounded:
        raise ModeConflictError(
            "Interference moments and correlation coefficients are infinite "
            "under the singular path loss; use epsilon > 0."
        )


def _asProbability(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def unitBallVolume(dimension: int) -> float:
    """Volume c_d of the d-dimensional unit ball.

    Args:
        dimension (int): 1, 2 or 3

    Returns:
        float
    """
    try:
        return _UNIT_BALL_VOLUMES[dimension]
    except KeyError:
        raise ModelError(f"Unsupported dimension: {dimension}.") from None


def delta(model: NetworkModel) -> float:
    """Return d / alpha, rejecting alpha <= d.

    Args:
        model (NetworkModel)

    Returns:
        float: value in (0, 1)
    """
    if model.alpha <= model.dimension:
        raise ModelError(
            f"Path loss exponent {model.alpha} must exceed the dimension "
            f"{model.dimension}."
        )
    return model.dimension / model.alpha


def sincFactor(delta_value: float) -> float:
    """Return pi delta / sin(pi delta), equal to Gamma(1 - delta) Gamma(1 + delta).

    Args:
        delta_value (float): value in [1e-6, 1 - 1e-6]

    Returns:
        float
    """
    _checkDelta(delta_value)
    x = math.pi * delta_value
    return x / math.sin(x)


def diversityPolynomial(n: int, delta_value: float) -> float:
    """Diversity polynomial D_n(delta) = Gamma(n + delta) / (Gamma(n) Gamma(1 + delta)).

    Evaluated in log-gamma space so that n in the millions does not overflow.

    Args:
        n (int): number of slots, >= 1
        delta_value (float): value in (0, 1)

    Returns:
        float
    """
    _checkCount("n", n, 1)
    _checkDelta(delta_value)
    log_value = (
        special.gammaln(n + delta_value)
        - special.gammaln(n)
        - special.gammaln(1 + delta_value)
    )
    return float(math.exp(log_value))


def _tierWeights(model: NetworkModel, delta_value: float) -> tuple[np.ndarray, np.ndarray]:
    """Return lambda_i P_i^delta and beta_i^-delta for every tier."""
    densities = np.array([t.density for t in model.tiers])
    powers = np.array([t.power for t in model.tiers])
    thresholds = np.array([t.threshold for t in model.tiers])
    return densities * powers**delta_value, thresholds ** (-delta_value)


def _singleSlotRatio(model: NetworkModel, delta_value: float) -> float:
    """Sum lambda P^delta beta^-delta over sum lambda P^delta."""
    weights, penalties = _tierWeights(model, delta_value)
    return float(np.sum(weights * penalties) / np.sum(weights))


def perBsJointSuccess(model: NetworkModel, tier_index: int, distance: float, n: int) -> float:
    """Probability that a given BS of a tier at a distance serves the user in n slots.

    Args:
        model (NetworkModel)
        tier_index (int): 1-based tier of the BS
        distance (float): distance of the BS from the typical user
        n (int): number of slots

    Returns:
        float: probability in (0, 1]
    """
    _checkDistance(distance)
    return math.exp(-_perBsDecay(model, tier_index, n) * distance**model.dimension)


def _perBsDecay(model: NetworkModel, tier_index: int, n: int) -> float:
    """Coefficient of ||x||^d in the exponent of the per-BS joint success."""
    tier = model.tier(tier_index)
    d = delta(model)
    weights, _ = _tierWeights(model, d)
    return (
        unitBallVolume(model.dimension)
        * sincFactor(d)
        * (tier.threshold / tier.power) ** d
        * float(np.sum(weights))
        * diversityPolynomial(n, d)
    )


def _jointSuccessRaw(model: NetworkModel, n: int) -> float:
    d = delta(model)
    return _singleSlotRatio(model, d) / (sincFactor(d) * diversityPolynomial(n, d))


def jointSuccess(model: NetworkModel, n: int) -> float:
    """Joint success probability p^(n) of the typical user over n slots.

    Exact when every threshold exceeds one; for thresholds at most one the
    value is an approximation (see NetworkModel.is_approximate) and is
    clamped into [0, 1].

    Args:
        model (NetworkModel)
        n (int): number of slots

    Returns:
        float
    """
    return _asProbability(_jointSuccessRaw(model, n))


def independentJointSuccess(model: NetworkModel, n: int) -> float:
    """Joint success over n slots if interference were independent across slots.

    Args:
        model (NetworkModel)
        n (int): number of slots

    Returns:
        float: (p^(1))^n
    """
    _checkCount("n", n, 1)
    return jointSuccess(model, 1) ** n


def tierJointSuccess(model: NetworkModel, tier_index: int, n: int) -> float:
    """Probability that the user is served by the given tier in all n slots.

    Summing over the tiers gives jointSuccess.

    Args:
        model (NetworkModel)
        tier_index (int): 1-based tier
        n (int): number of slots

    Returns:
        float
    """
    model.tier(tier_index)
    d = delta(model)
    weights, penalties = _tierWeights(model, d)
    share = weights[tier_index - 1] * penalties[tier_index - 1] / np.sum(weights)
    return _asProbability(float(share) / (sincFactor(d) * diversityPolynomial(n, d)))


def jointSuccessBounds(model: NetworkModel, n: int) -> tuple[float, float]:
    """Lower and upper bounds of the joint success probability.

    Both use n^delta in place of D_n(delta); the lower one carries the
    additional Gamma(1 + delta) factor.

    Args:
        model (NetworkModel)
        n (int): number of slots

    Returns:
        tuple[float, float]: lower and upper bound
    """
    _checkCount("n", n, 1)
    d = delta(model)
    upper = _singleSlotRatio(model, d) / (sincFactor(d) * n**d)
    lower = math.gamma(1 + d) * upper
    return _asProbability(lower), _asProbability(upper)


def conditionalSuccess(n: int, delta_value: float) -> float:
    """Probability that slot n succeeds given that slots 1..n-1 did.

    D_{n-1}(delta) / D_n(delta), evaluated through the recurrence as
    (n - 1) / (n - 1 + delta).

    Args:
        n (int): number of slots, >= 2
        delta_value (float): value in (0, 1)

    Returns:
        float
    """
    _checkCount("n", n, 2)
    _checkDelta(delta_value)
    return (n - 1) / (n - 1 + delta_value)


def monotonicityVerdict(model: NetworkModel, tier_m: int) -> MonotonicityVerdict:
    """Whether raising the density or power of a tier improves the joint success.

    Args:
        model (NetworkModel): model with at least two tiers
        tier_m (int): 1-based tier whose density or power changes

    Returns:
        MonotonicityVerdict
    """
    if model.tier_count < 2:
        raise ModelError("The monotonicity condition needs at least two tiers.")
    model.tier(tier_m)
    d = delta(model)
    weights, penalties = _tierWeights(model, d)
    others = np.arange(model.tier_count) != tier_m - 1
    reference = np.sum(weights[others] * penalties[others]) / np.sum(weights[others])
    own = penalties[tier_m - 1]
    margin = float(own - reference)

    if abs(margin) <= FLAT_TOLERANCE * own:
        direction = Direction.FLAT
    elif margin > 0:
        direction = Direction.INCREASING
    else:
        direction = Direction.DECREASING
    return MonotonicityVerdict(direction=direction, margin=margin, tier_index=tier_m)


def orthogonalTierJointSuccess(tier: TierParams, delta_value: float, n: int) -> float:
    """Joint success of a tier that owns a separate spectrum band.

    Args:
        tier (TierParams)
        delta_value (float): d / alpha
        n (int): number of slots

    Returns:
        float
    """
    value = tier.threshold ** (-delta_value) / (
        sincFactor(delta_value) * diversityPolynomial(n, delta_value)
    )
    return _asProbability(value)


def orthogonalPerBsJointSuccess(
    tier: TierParams, dimension: int, delta_value: float, distance: float, n: int
) -> float:
    """Per-BS joint success when only the serving tier interferes.

    Args:
        tier (TierParams)
        dimension (int): spatial dimension d
        delta_value (float): d / alpha
        distance (float): distance of the BS
        n (int): number of slots

    Returns:
        float
    """
    _checkDistance(distance)
    exponent = (
        unitBallVolume(dimension)
        * sincFactor(delta_value)
        * tier.density
        * tier.threshold**delta_value
        * diversityPolynomial(n, delta_value)
        * distance**dimension
    )
    return math.exp(-exponent)


def fixedLinkJointSuccess(
    density: float, threshold: float, distance: float, delta_value: float, n: int
) -> float:
    """Planar single-tier link with a fixed transmitter distance.

    Receiver with n antennas (or n slots) facing a unit-power PPP of
    interferers; with n = 2 it is the joint success of an ALOHA ad hoc
    network with transmit probability one.

    Args:
        density (float): interferer density
        threshold (float): SIR threshold
        distance (float): link distance
        delta_value (float): 2 / alpha
        n (int): number of antennas or slots

    Returns:
        float
    """
    _checkDistance(distance)
    _checkDelta(delta_value)
    gamma_product = math.gamma(1 - delta_value) * math.gamma(1 + delta_value)
    exponent = (
        math.pi
        * gamma_product
        * density
        * distance**2
        * threshold**delta_value
        * diversityPolynomial(n, delta_value)
    )
    return math.exp(-exponent)


def temporalCorrCoefficient(fading: FadingMoments) -> float:
    """Correlation of the interference at one location across two slots.

    Args:
        fading (FadingMoments)

    Returns:
        float: E[h]^2 / E[h^2], i.e. 1 / E[h^2] for unit-mean fading
    """
    return fading.mean**2 / fading.second_moment


def _pathLoss(distance: float, alpha: float, epsilon: float) -> float:
    try:
        return 1.0 / (distance**alpha + epsilon)
    except OverflowError:
        return 0.0
    except ZeroDivisionError:
        return math.inf


def _quad(
    integrand: Callable[[float], float],
    lower: float,
    upper: float,
    absolute: float = QUADRATURE_TOLERANCE,
    relative: float = QUADRATURE_RELATIVE_TOLERANCE,
    breakpoints: Sequence[float] = (),
) -> float:
    kwargs = {"points": list(breakpoints)} if breakpoints else {}
    result = integrate.quad(
        integrand,
        lower,
        upper,
        epsabs=absolute,
        epsrel=relative,
        limit=500,
        full_output=1,
        **kwargs,
    )
    if len(result) > 3:
        raise QuadratureError(f"Quadrature did not converge: {result[3]}")
    return float(result[0])


def _radialIntegral(
    integrand: Callable[[float], float],
    scale: float = 1.0,
    start: float = 0.0,
    absolute: float = QUADRATURE_TOLERANCE,
    relative: float = QUADRATURE_RELATIVE_TOLERANCE,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate over [start, inf) through r = start + scale t / (1 - t)."""

    def transformed(t: float) -> float:
        if t >= 1.0:
            return 0.0
        u = 1.0 - t
        return integrand(start + scale * t / u) * scale / (u * u)

    points = [(r - start) / (r - start + scale) for r in breakpoints if r > start]
    return _quad(transformed, 0.0, 1.0, absolute, relative, points)


def _characteristicRadius(model: NetworkModel) -> float:
    return model.epsilon ** (1.0 / model.alpha)


def _pathLossIntegral(model: NetworkModel, power: int, start: float = 0.0) -> float:
    """Integral of g^power over the region ||x|| >= start."""
    d, alpha, epsilon = model.dimension, model.alpha, model.epsilon
    surface = d * unitBallVolume(d)
    integral = _radialIntegral(
        lambda r: r ** (d - 1) * _pathLoss(r, alpha, epsilon) ** power,
        scale=_characteristicRadius(model),
        start=start,
    )
    return surface * integral


def _crossIntegral(model: NetworkModel, separation: float) -> float:
    """Integral of g(x) g(x - s e) over the whole space, with ||e|| = 1."""
    d, alpha, epsilon = model.dimension, model.alpha, model.epsilon
    scale = _characteristicRadius(model)

    def shifted(r: float, cos_angle: float) -> float:
        squared = max(r * r + separation * separation - 2 * r * separation * cos_angle, 0.0)
        return _pathLoss(math.sqrt(squared), alpha, epsilon)

    if d == 1:

        def radial(r: float) -> float:
            return _pathLoss(r, alpha, epsilon) * (shifted(r, 1.0) + shifted(r, -1.0))

    else:
        if d == 2:

            def weight(theta: float) -> float:
                return 2.0

        else:

            def weight(theta: float) -> float:
                return 2.0 * math.pi * math.sin(theta)

        def radial(r: float) -> float:
            own = _pathLoss(r, alpha, epsilon)
            if own == 0.0:
                return 0.0
            angular = _quad(
                lambda theta: weight(theta) * shifted(r, math.cos(theta)),
                0.0,
                math.pi,
                absolute=QUADRATURE_TOLERANCE * 1e-2,
            )
            return r ** (d - 1) * own * angular

    breakpoints = (separation,) if separation > 0 else ()
    return _radialIntegral(radial, scale=scale, breakpoints=breakpoints)


def _weightedPowerSum(model: NetworkModel, power: int) -> float:
    return sum(t.density * t.power**power for t in model.tiers)


def interferenceMean(model: NetworkModel, fading: FadingMoments) -> float:
    """Mean interference at a location under the bounded path loss.

    Args:
        model (NetworkModel): model with epsilon > 0
        fading (FadingMoments)

    Returns:
        float
    """
    _requireBounded(model)
    delta(model)
    return _weightedPowerSum(model, 1) * fading.mean * _pathLossIntegral(model, 1)


def interferenceMeanClosedForm(model: NetworkModel, fading: FadingMoments) -> float:
    """interferenceMean through the Beta-function identity, without quadrature."""
    _requireBounded(model)
    d = delta(model)
    radial = model.epsilon ** (d - 1) * math.pi / (model.alpha * math.sin(math.pi * d))
    surface = model.dimension * unitBallVolume(model.dimension)
    return _weightedPowerSum(model, 1) * fading.mean * surface * radial


def interferenceVariance(model: NetworkModel, fading: FadingMoments) -> float:
    """Variance of the interference at a location under the bounded path loss.

    Args:
        model (NetworkModel): model with epsilon > 0
        fading (FadingMoments)

    Returns:
        float
    """
    _requireBounded(model)
    delta(model)
    return _weightedPowerSum(model, 2) * fading.second_moment * _pathLossIntegral(model, 2)


def interferenceSecondMoment(model: NetworkModel, fading: FadingMoments) -> float:
    """Second moment E[I^2] of the interference at a location."""
    return interferenceVariance(model, fading) + interferenceMean(model, fading) ** 2


def interferenceCovariance(
    model: NetworkModel, separation: float, fading: FadingMoments
) -> float:
    """Covariance of the interference at two locations in two distinct slots.

    Args:
        model (NetworkModel): model with epsilon > 0
        separation (float): distance between the two locations
        fading (FadingMoments)

    Returns:
        float
    """
    _requireBounded(model)
    _checkDistance(separation)
    delta(model)
    return _weightedPowerSum(model, 2) * fading.mean**2 * _crossIntegral(model, separation)


def spatialCorrCoefficient(
    model: NetworkModel, separation: float, fading: FadingMoments
) -> float:
    """Correlation of the interference at two locations in two distinct slots.

    At zero separation it equals temporalCorrCoefficient; it decays with the
    separation and vanishes as epsilon goes to zero.

    Args:
        model (NetworkModel): model with epsilon > 0
        separation (float): distance between the two locations
        fading (FadingMoments)

    Returns:
        float
    """
    covariance = interferenceCovariance(model, separation, fading)
    return covariance / interferenceVariance(model, fading)


def truncatedInterferenceFraction(model: NetworkModel, radius: float) -> float:
    """Share of the mean interference generated beyond a radius.

    Args:
        model (NetworkModel): model with epsilon > 0
        radius (float): window radius

    Returns:
        float: value in (0, 1]
    """
    _requireBounded(model)
    _checkDistance(radius)
    delta(model)
    return _pathLossIntegral(model, 1, start=radius) / _pathLossIntegral(model, 1)


def farFieldInterference(
    model: NetworkModel, radius: float, fading_mean: float = 1.0
) -> np.ndarray:
    """Mean interference each tier generates beyond a radius (singular law).

    Args:
        model (NetworkModel)
        radius (float): window radius, > 0
        fading_mean (float, optional): E[h]

    Returns:
        np.ndarray: one value per tier
    """
    if not radius > 0:
        raise ModelError(f"Radius must be positive, got {radius}.")
    delta(model)
    d, alpha = model.dimension, model.alpha
    tail = d * unitBallVolume(d) * radius ** (d - alpha) / (alpha - d)
    return np.array([t.density * t.power * fading_mean * tail for t in model.tiers])


def campbellJointSuccess(model: NetworkModel, n: int) -> float:
    """Joint success obtained by integrating the per-BS probability over space.

    Independent numerical route to jointSuccess (before clamping).

    Args:
        model (NetworkModel)
        n (int): number of slots

    Returns:
        float
    """
    d = model.dimension
    surface = d * unitBallVolume(d)
    total = 0.0
    for index, tier in enumerate(model.tiers, start=1):
        decay = _perBsDecay(model, index, n)
        integral = _radialIntegral(
            lambda r: math.exp(-decay * r**d) * r ** (d - 1),
            scale=decay ** (-1.0 / d),
            absolute=0.0,
            relative=CAMPBELL_RELATIVE_TOLERANCE,
        )
        total += surface * tier.density * integral
    return total
