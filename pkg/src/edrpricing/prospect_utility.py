"""Loss-averse CARA value function and the solvers built on it.

The value function is ``1 - exp(-a w)`` for gains and
``-lam * (1 - exp(a w))`` for losses. After a prior loss ``x`` an investor
is risk-seeking in fair two-outcome gambles until the utility gain of the
upside equals the utility loss of the downside. The amplitude at which
that happens, as a function of the gamble's expected return, traces the
risk-neutral curve (RNC).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import CalibrationRangeError, DomainError, NoRealSolutionError, SingularSlopeError
from .rootfind import bisect_secant, expand_bracket

DEFAULT_LOSS_AVERSION = 2.25
# the rounded normal-EDR coefficient 0.8, squared, as used by the EDR-E(r) utility
EDR_COEF_SQ = 0.64
Y_TOL = 1e-8


@dataclass(frozen=True)
class KTUtilityParams:
    """CARA coefficient ``a``, loss aversion ``lam`` and reference return.

    A reference of ``-0.05`` means the investor is anchored after a 5% loss.
    """

    a: float
    lam: float = DEFAULT_LOSS_AVERSION
    reference: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("CARA coefficient a must be positive", a=self.a)
        if not self.lam >= 1:
            raise DomainError("loss aversion must be at least 1", lam=self.lam)

    @property
    def prior_loss(self) -> float:
        return -self.reference

    def after_loss(self, x: float) -> "KTUtilityParams":
        return KTUtilityParams(self.a, self.lam, -x)


def cara(a: float, w):
    """Gain-side CARA utility ``1 - exp(-a w)``; accepts scalars or arrays."""
    return -np.expm1(-a * np.asarray(w, dtype=float)) if np.ndim(w) else -math.expm1(-a * w)


def kt_value(params: KTUtilityParams, w):
    """Kahneman-Tversky style value of a wealth change ``w``."""
    a, lam = params.a, params.lam
    if np.ndim(w) == 0:
        w = float(w)
        return -math.expm1(-a * w) if w >= 0 else lam * math.expm1(a * w)
    w = np.asarray(w, dtype=float)
    return np.where(w >= 0, -np.expm1(-a * np.abs(w)), lam * np.expm1(-a * np.abs(w)))


def amplitude_residual(params: KTUtilityParams, loss: float, y: float) -> float:
    """``U(y) + 2 lam U(loss) - lam U(2 loss + y)``; zero at the risk-neutral ``y``.

    This is the value of a gain ``y`` less twice the value of the prior
    loss, plus the value of the gamble's full loss ``2 loss + y``.
    """
    v = lambda w: kt_value(params, w)
    return v(y) - 2.0 * v(-loss) + v(-(2.0 * loss + y))


def _check_reference(params: KTUtilityParams) -> float:
    x = params.prior_loss
    if x < 0:
        raise DomainError(
            "reference must be a prior loss (reference <= 0)", reference=params.reference
        )
    return x


def _solve_amplitude(params: KTUtilityParams, loss: float) -> float:
    if loss == 0.0:
        return 0.0
    a, lam = params.a, params.lam
    # residual is monotone in y and positive at y=0; a root needs a negative tail
    f = lambda y: amplitude_residual(params, loss, y)
    tail = 1.0 - lam + 2.0 * lam * cara(a, loss)
    if tail >= 0:
        raise NoRealSolutionError(
            "no risk-neutral amplitude exists for this loss and risk aversion",
            a=a,
            lam=lam,
            loss=loss,
        )
    lo, hi = expand_bracket(f, 0.0, 10.0, max_hi=1e4)
    return bisect_secant(f, lo, hi, xtol=Y_TOL * 1e-3)


def risk_neutral_amplitude(params: KTUtilityParams) -> float:
    """Extra gain ``y`` that makes the fair gamble ``+-(x+y)`` risk neutral.

    ``x`` is the prior loss given by ``params.reference = -x``. The full
    amplitude of the gamble around the reference point is ``x + y``.

    Raises:
        NoRealSolutionError: the balance equation has no positive root,
            which happens for large losses or high risk aversion.
    """
    x = _check_reference(params)
    return _solve_amplitude(params, x)


@dataclass(frozen=True)
class RiskNeutralPoint:
    """One point of the RNC.

    ``expected_return`` is the gamble's mean return ``c1`` and ``shrink``
    the matching reduction ``c2`` of the upside. The gamble pays
    ``c1 +- amplitude`` with equal probability, so its EDR coordinate is
    ``c1 - amplitude`` and its Prospect coordinate ``c1 + amplitude``.
    """

    expected_return: float
    shrink: float
    amplitude: float
    variance: float
    edr_coordinate: float
    prospect_coordinate: float

    @classmethod
    def build(cls, x: float, y: float, c1: float, c2: float) -> "RiskNeutralPoint":
        amp = x + y - c1 - c2
        amp = max(amp, 0.0)
        # symmetric two-outcome gamble: half the mass sits below the mean
        alpha = 0.5
        edr = c1 - amp
        pr = (c1 - alpha * edr) / (1.0 - alpha)
        return cls(c1, c2, amp, amp * amp, edr, pr)


@dataclass(frozen=True)
class RiskNeutralCurve:
    params: KTUtilityParams
    prior_loss: float
    y: float
    points: tuple[RiskNeutralPoint, ...]
    gaps: tuple[tuple[float, str], ...] = ()

    COLUMNS = ("c1", "c2", "amplitude", "variance", "edr", "prospect")

    def rows(self) -> list[dict]:
        return [
            {
                "c1": p.expected_return,
                "c2": p.shrink,
                "amplitude": p.amplitude,
                "variance": p.variance,
                "edr": p.edr_coordinate,
                "prospect": p.prospect_coordinate,
            }
            for p in self.points
        ]


def rnc_residual(params: KTUtilityParams, x: float, y: float, c1: float, c2: float) -> float:
    """Balance equation residual ``U(y-c2) - lam U(2x-2c1+y-c2) + 2 lam U(x-c1)``."""
    a, lam = params.a, params.lam
    return cara(a, y - c2) - lam * cara(a, 2 * x - 2 * c1 + y - c2) + 2 * lam * cara(a, x - c1)


def solve_shrink(params: KTUtilityParams, x: float, y: float, c1: float) -> float:
    """Solve the balance equation for ``c2`` at expected return ``c1``."""
    if c1 <= 0.0:
        return 0.0
    if c1 >= x:
        return y
    f = lambda c2: rnc_residual(params, x, y, c1, c2)
    lo, hi = 0.0, y
    if f(lo) * f(hi) > 0:
        # the root should sit inside [0, y]; widen once before giving up
        lo, hi = -y, 2 * y
    return bisect_secant(f, lo, hi, xtol=1e-15)


def trace_risk_neutral_curve(params: KTUtilityParams, n_points: int = 101) -> RiskNeutralCurve:
    """Trace the RNC on a uniform grid of expected returns over ``[0, x]``.

    Endpoints are pinned: ``c2 = 0`` at ``c1 = 0`` and ``c2 = y`` at
    ``c1 = x``. Interior points whose root search fails are recorded in
    ``gaps`` and left out of ``points``.
    """
    if n_points < 2:
        raise DomainError("n_points must be at least 2", n_points=n_points)
    x = _check_reference(params)
    y = risk_neutral_amplitude(params)
    points, gaps = [], []
    for c1 in np.linspace(0.0, x, n_points):
        c1 = float(c1)
        try:
            c2 = solve_shrink(params, x, y, c1)
        except NoRealSolutionError as exc:
            gaps.append((c1, str(exc)))
            continue
        points.append(RiskNeutralPoint.build(x, y, c1, c2))
    return RiskNeutralCurve(params, x, y, tuple(points), tuple(gaps))


def rnc_slope(params: KTUtilityParams, c: float, d: float, x: float, y: float) -> float:
    """Slope ``dc2/dc1`` of the RNC from implicit differentiation.

    ``c`` and ``d`` are the prior loss and its risk-neutral ``y``; ``x`` and
    ``y`` here are the running ``c1`` and ``c2``.
    """
    a, lam = params.a, params.lam
    e_loss = math.exp(-a * (2 * c + d - 2 * x - y))
    e_mid = math.exp(-a * (c - x))
    denom = math.exp(-a * (d - y)) - lam * e_loss
    if abs(denom) < 1e-14:
        raise SingularSlopeError("slope denominator vanishes", c=c, d=d, x=x, y=y)
    return 2 * lam * (e_loss - e_mid) / denom + 0.0  # no negative zero


class SlopeCase(str, Enum):
    STEEP = "steep"
    SINGULAR = "singular"
    NORMAL = "normal"


def _risk_gap_factor(a: float, e: float, edr: float) -> float:
    if e < edr:
        raise DomainError("expected return must not be below EDR", e=e, edr=edr)
    return a / EDR_COEF_SQ * (e - edr)


def iso_utility_slope(a: float, e: float, edr: float) -> tuple[float, SlopeCase]:
    """Slope ``dE/dEDR`` of the iso-utility curve through ``(edr, e)``.

    With ``k = (a/0.64)(e - edr)`` the slope is ``-k/(1-k)``: negative
    below ``k = 1``, above one beyond it, undefined at ``k = 1`` (returned
    as ``nan``).
    """
    k = _risk_gap_factor(a, e, edr)
    if abs(k - 1.0) <= 1e-12:
        return math.nan, SlopeCase.SINGULAR
    slope = -k / (1.0 - k)
    return slope, (SlopeCase.STEEP if k > 1 else SlopeCase.NORMAL)


def iso_utility_curvature(a: float, e: float, edr: float) -> float:
    """Second derivative ``(a/0.64)/(1-k)^2``; always positive.

    This differentiates the slope with ``e`` held fixed. Use
    :func:`iso_utility_path_curvature` for the curvature of the curve itself.
    """
    k = _risk_gap_factor(a, e, edr)
    if abs(k - 1.0) <= 1e-12:
        raise SingularSlopeError("iso-utility curve is not differentiable at k = 1", a=a, e=e, edr=edr)
    return (a / EDR_COEF_SQ) / (1.0 - k) ** 2


def iso_utility_path_curvature(a: float, e: float, edr: float) -> float:
    """``d2E/dEDR2`` along the iso-utility curve: ``(a/0.64)/(1-k)^3``.

    Positive on the normal branch ``k < 1`` and negative on the steep one.
    """
    k = _risk_gap_factor(a, e, edr)
    if abs(k - 1.0) <= 1e-12:
        raise SingularSlopeError("iso-utility curve is not differentiable at k = 1", a=a, e=e, edr=edr)
    return (a / EDR_COEF_SQ) / (1.0 - k) ** 3


def utility_score(a: float, e: float, edr: float) -> float:
    """Mean-EDR utility ``e - (0.5/0.64) a (e - edr)^2``."""
    if e < edr:
        raise DomainError("expected return must not be below EDR", e=e, edr=edr)
    return e - 0.5 / EDR_COEF_SQ * a * (e - edr) ** 2


CALIBRATION_FRACTIONS = (0.5, 0.667, 0.8, 0.9, 0.92, 0.95)
CALIBRATION_RETURNS = tuple(round(0.01 * i, 2) for i in range(1, 21))


def calibrate_risk_aversion(x: float, e: float) -> float:
    """CARA coefficient ``ln 1.25 + e - ln(exp(1 - x) - 1)``.

    ``x`` is the surviving wealth fraction of the bad outcome and ``e`` the
    expected return.
    """
    if not 0 < x < 1:
        raise DomainError("survival fraction must lie in (0, 1)", x=x)
    a = math.log(1.25) + e - math.log(math.expm1(1.0 - x))
    if not a > 0:
        raise CalibrationRangeError("calibrated risk aversion is not positive", x=x, e=e, a=a)
    return a


def risk_aversion_table(
    rows: tuple[float, ...] = CALIBRATION_RETURNS,
    columns: tuple[float, ...] = CALIBRATION_FRACTIONS,
) -> list[dict]:
    """Risk-aversion grid: one dict per expected return, keyed by survival fraction."""
    table = []
    for e in rows:
        row: dict[str, Optional[float]] = {"expected_return": e}
        for x in columns:
            row[f"{x:g}"] = calibrate_risk_aversion(x, e)
        table.append(row)
    return table
