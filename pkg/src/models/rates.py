"""Smoothness thresholds, rate sequences and regime reports.

All functions are pure calculators; nothing here touches data.
"""

from dataclasses import dataclass

import numpy as np

from ..utils.errors import ConfigError

_BOUNDARY_RTOL = 1e-9


def alpha_d(d: int) -> int:
    """Minimal smoothness α_d = max(4, 2⌊d/4 + 1/2⌋).

    Example:
        >>> alpha_d(1), alpha_d(8), alpha_d(12)
        (4, 4, 6)
    """
    if d < 1:
        raise ValueError(f"Dimension must be positive: {d}")
    return max(4, 2 * int(np.floor(d / 4 + 0.5)))


def _check_exponent(a: float) -> None:
    if not 0.5 < a < 1.0:
        raise ValueError(f"Sampling exponent a must lie in (1/2, 1): {a}")


def s_star_max_form(d: int, a: float) -> float:
    """max(4 + d/2, (2 − ad)/(2a − 1), d(1 + a)/(2(1 − a)))."""
    _check_exponent(a)
    return max(4 + d / 2, (2 - a * d) / (2 * a - 1), d * (1 + a) / (2 * (1 - a)))


def s_star(d: int, a: float) -> float:
    """Minimal smoothness s* in its piecewise form.

    For d ≥ 4 only d(1 + a)/(2(1 − a)) binds; for d = 3 with a ≥ 2/3 the
    middle term is non-positive and drops out.
    """
    _check_exponent(a)
    if d >= 4:
        return d * (1 + a) / (2 * (1 - a))
    if d == 3 and a >= 2.0 / 3.0:
        return max(4 + d / 2, d * (1 + a) / (2 * (1 - a)))
    return s_star_max_form(d, a)


@dataclass(frozen=True)
class RateParams:
    """d, a (D = N^{−a}), s and N."""

    d: int
    a: float
    s: float
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"Dimension must be positive: {self.d}")
        if not 0.5 < self.a < 1.0:
            raise ConfigError(f"Sampling exponent a must lie in (1/2, 1): {self.a}")
        if self.s <= 0:
            raise ConfigError(f"Smoothness must be positive: {self.s}")
        if self.N < 1:
            raise ConfigError(f"N must be at least 1: {self.N}")

    @property
    def D(self) -> float:
        return float(self.N) ** (-self.a)


@dataclass(frozen=True)
class SequenceBundle:
    """The rate sequences and contraction radius at one N."""

    N: int
    D: float
    eps_N: float
    eps_1N: float
    eps_2N: float
    eps_3N: float
    xi_N: float
    E_N: float
    V_N: float

    def __post_init__(self):
        ordered = (self.eps_N, self.eps_1N, self.eps_2N, self.eps_3N)
        if any(x <= 0 for x in ordered):
            raise ValueError(f"Sequences must be positive: {ordered}")
        if any(b < a * (1 - 1e-12) for a, b in zip(ordered, ordered[1:])):
            raise ValueError(f"Sequences must be ordered eps_N <= eps_1N <= ...: {ordered}")

    @property
    def en_ratio(self) -> float:
        """E_N / ε_N², bounded when the regime conditions hold."""
        return self.E_N / self.eps_N**2

    @property
    def vn_ratio(self) -> float:
        """V_N / (N² ε_N⁴), tending to zero when the regime conditions hold."""
        return self.V_N / (self.N**2 * self.eps_N**4)


def rate_sequences(rp: RateParams) -> SequenceBundle:
    """ε_N = N^{−s/(2s+d)}, ε_{k,N} = N^{−(s−k)/(2s+d)}, D = N^{−a}, E_N and V_N.

    E_N = ε² + ε_2 D + ε_3 D^{3/2}
    V_N = Nε² + Nε⁴/D + N²ε_2²D² + N²ε_3²D³ + N²D⁴

    Example:
        >>> round(rate_sequences(RateParams(d=1, a=0.6, s=2, N=10**4)).eps_N, 4)
        0.0251
    """
    N = float(rp.N)
    denom = 2 * rp.s + rp.d
    eps = [N ** (-(rp.s - k) / denom) for k in range(4)]
    D = rp.D
    E_N = eps[0] ** 2 + eps[2] * D + eps[3] * D**1.5
    V_N = (
        N * eps[0] ** 2
        + N * eps[0] ** 4 / D
        + N**2 * eps[2] ** 2 * D**2
        + N**2 * eps[3] ** 2 * D**3
        + N**2 * D**4
    )
    return SequenceBundle(
        N=rp.N,
        D=D,
        eps_N=eps[0],
        eps_1N=eps[1],
        eps_2N=eps[2],
        eps_3N=eps[3],
        xi_N=eps[0],
        E_N=E_N,
        V_N=V_N,
    )


@dataclass(frozen=True)
class RemarkReport:
    """Outcome of the smoothness condition under the usual sequence choices.

    Attributes:
        threshold: Piecewise threshold on s
        s: Smoothness tested
        satisfied: s strictly above the threshold
        boundary: s equals the threshold (to rounding)
        case: Which branch of the case table applied
    """

    threshold: float
    s: float
    satisfied: bool
    boundary: bool
    case: str

    @property
    def verdict(self) -> str:
        if self.boundary:
            return "boundary (s equals threshold)"
        return "satisfied" if self.satisfied else "violated"


def remark_threshold(d: int, a: float) -> float:
    """(2 − ad)/(2a − 1) for d ∈ {1, 2} or d = 3, a ≤ 2/3; otherwise 0."""
    _check_exponent(a)
    if d <= 2 or (d == 3 and a <= 2.0 / 3.0):
        return (2 - a * d) / (2 * a - 1)
    return 0.0


def check_remark_conditions(d: int, a: float, s: float) -> RemarkReport:
    """Evaluate whether s exceeds the piecewise threshold for (d, a).

    Example:
        >>> check_remark_conditions(1, 0.6, 8).satisfied
        True
    """
    threshold = remark_threshold(d, a)
    if d <= 2:
        case = "d<=2"
    elif d == 3:
        case = "d=3,a<=2/3" if a <= 2.0 / 3.0 else "d=3,a>=2/3"
    else:
        case = "d>=4"
    boundary = bool(np.isclose(s, threshold, rtol=_BOUNDARY_RTOL, atol=0.0)) and threshold > 0
    return RemarkReport(
        threshold=float(threshold),
        s=float(s),
        satisfied=bool(s > threshold and not boundary),
        boundary=boundary,
        case=case,
    )


def smoothness_verdict(d: int, a: float, s: float) -> str:
    """Compare s with s*: 'above', 'boundary' or 'below'."""
    threshold = s_star(d, a)
    if np.isclose(s, threshold, rtol=_BOUNDARY_RTOL, atol=0.0):
        return "boundary"
    return "above" if s > threshold else "below"


def level_for_rate(N: int, s: float, d: int, scale: float = 1.0) -> int:
    """J with 2^J = round(scale · N^{1/(2s+d)}) in the dyadic sense, at least 0."""
    return max(0, int(round(np.log2(scale * float(N) ** (1.0 / (2 * s + d))))))


@dataclass(frozen=True)
class ExpInequalityReport:
    """Numerical form of the regime assumptions behind the exponential inequality.

    Ratios that should stay small (or bounded) as N grows.
    """

    J: int
    dim_ratio: float
    approx_error: float
    bias_ratio: float
    variance_ratio: float
    en_ratio: float
    vn_ratio: float


def exp_inequality_report(rp: RateParams, J: int) -> ExpInequalityReport:
    """2^{Jd}/√(ND), R_J = 2^{−J(s−d/2)} and the contraction-radius conditions."""
    seq = rate_sequences(rp)
    N, d = float(rp.N), rp.d
    dim = 2.0 ** (J * d)
    R_J = 2.0 ** (-J * (rp.s - d / 2.0))
    bias = R_J**2 * seq.eps_N**2 / (seq.D * seq.xi_N**2)
    variance = (
        dim**1.5 / N + np.sqrt(dim) / np.sqrt(N) + np.sqrt(dim) * seq.eps_N**2 + seq.eps_N
    ) / seq.xi_N
    return ExpInequalityReport(
        J=J,
        dim_ratio=float(dim / np.sqrt(N * seq.D)),
        approx_error=float(R_J),
        bias_ratio=float(bias),
        variance_ratio=float(variance),
        en_ratio=seq.en_ratio,
        vn_ratio=seq.vn_ratio,
    )


def spectral_gap_diagnostic(r: float, D: float) -> float:
    """Reported lower-bound proxy r·D for the spectral gap over one sampling interval."""
    if r <= 0 or D <= 0:
        raise ValueError(f"r and D must be positive: r={r}, D={D}")
    return float(r * D)
