"""Full stationary solution of the threshold queue and its evaluators.

The pipeline follows the matrix representation of the distribution: the
sub-distribution vector F(x) = [P(0 < W <= x, state i)] solves a pair of
constant-coefficient second-order linear systems, one below and one above
the threshold, glued by continuity of F and F'.  Twenty auxiliary matrices
reduce the boundary conditions to a single scalar unknown, the tail constant
b_c, which the normalization fixes.  Boundary (W = 0) probabilities follow
from a backward recursion over occupancy levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergentIntegral, NegativeProbability
from .model import ModelMatrices, QueueParams, build_matrices, hat_i, tilde_q
from .numerics import (
    gauss_panels,
    i_kernel,
    inv,
    lu_solve,
    mat_func,
    solve_right,
)
from .spectral import SpectralData, build_spectral

__all__ = [
    "AuxChain",
    "StationarySolution",
    "MixtureTerm",
    "ScalarMixture",
    "ResidualReport",
    "particular_matrices",
    "h_chain",
    "solve",
    "eval_cdf",
    "eval_density",
    "mean_wait",
    "scalar_mixture",
    "verify_solution",
]


def particular_matrices(
    params: QueueParams, matrices: ModelMatrices, spectral: SpectralData
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three inverses behind the particular solutions.

    m0/m1 pin down the constant particular terms of the two branches (the
    rank-one diag corrections remove the null modes); m2 drives the memory
    term carried across the threshold by below-threshold jumps.
    """
    c, lam, mu1 = params.c, params.lam, params.mu1
    m0 = inv(lam * (matrices.b1 - matrices.d_tilde_1) + np.diag(spectral.phi_star))
    m1 = inv(lam * (matrices.b2 - matrices.d_tilde_2) + np.diag(spectral.psi_c))
    m2 = inv((c * mu1 + lam) * (c * mu1 * np.eye(c) - matrices.d_tilde_2)
             + lam * matrices.b2)
    return m0, m1, m2


@dataclass(frozen=True)
class AuxChain:
    """The twenty auxiliary matrices of the boundary-condition reduction.

    h1..h8 express F(k) and F'(k-) through F'(0); h9..h14 express F'(k+)
    through F(k), F'(0) and the tail constant; h15/h16 solve the glued system
    for F'(0); h17..h20 give the limit F(inf).
    """

    h1: np.ndarray; h2: np.ndarray; h3: np.ndarray; h4: np.ndarray
    h5: np.ndarray; h6: np.ndarray; h7: np.ndarray; h8: np.ndarray
    h9: np.ndarray; h10: np.ndarray; h11: np.ndarray; h12: np.ndarray
    h13: np.ndarray; h14: np.ndarray; h15: np.ndarray; h16: np.ndarray
    h17: np.ndarray; h18: np.ndarray; h19: np.ndarray; h20: np.ndarray


def _expm(sm, x: float) -> np.ndarray:
    return mat_func(sm.eig, lambda v: np.exp(v * x))


def h_chain(
    params: QueueParams,
    matrices: ModelMatrices,
    spectral: SpectralData,
    m0: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
) -> AuxChain:
    lam, k, c = params.lam, params.k, params.c
    b1, b2 = matrices.b1, matrices.b2
    d1, d2 = matrices.d_tilde_1, matrices.d_tilde_2
    u1m, u1p, u2m = spectral.u1_minus, spectral.u1_plus, spectral.u2_minus
    eye = np.eye(c)

    e_minus = _expm(u1m, k)
    e_plus = _expm(u1p, k)
    du = u1p.mat - u1m.mat

    h1 = lu_solve(du, e_plus - e_minus)
    h2 = m0 @ (eye - e_minus + u1m.mat @ h1)
    h3 = h1 + d1 @ h2
    h4 = -lam * b1 @ h2
    h5 = lu_solve(du, u1p.mat @ e_plus - u1m.mat @ e_minus)
    h6 = m0 @ (u1m.mat @ e_minus - u1m.mat @ h5)
    h7 = h5 - d1 @ h6
    h8 = lam * b1 @ h6

    d1_inv, d2_inv = inv(d1), inv(d2)
    dm2 = (d1 - d2) @ m2
    h9 = dm2 @ u2m.mat + d1 @ dm2
    h10 = u2m.mat - lam * (eye - b2 @ d2_inv) @ h9
    h11 = m1 @ u2m.mat + d2_inv @ h9
    bridge = b1 @ d1_inv @ d2          # recurring factor B1 D1^{-1} D2
    h12 = h10 + lam * (bridge - b2) @ h11
    h13 = d2 @ h11
    h14 = lam * bridge @ h11

    # Sign convention: h15 carries a leading minus (and h19 compensates), so
    # the level images psi_c @ h_hat_n come out nonpositive and the tail
    # constant b_c negative.  Only products of the pair are observable.
    core = h7 - h7 @ h9 - h3 @ h12 + h13
    h15 = -u2m.mat @ inv(core)
    h16 = (h14 + h4 @ h12 - h8 + h8 @ h9) @ lu_solve(u2m.mat, -h15)

    h17 = d2 @ m1 - lam * h3 @ (bridge - b2) @ m1
    h18 = lam * bridge @ m1 + lam * h4 @ (bridge - b2) @ m1
    h19 = -(eye + h15 @ h17)
    h20 = h16 @ h17 - h18

    return AuxChain(h1, h2, h3, h4, h5, h6, h7, h8, h9, h10,
                    h11, h12, h13, h14, h15, h16, h17, h18, h19, h20)


@dataclass(frozen=True)
class MixtureTerm:
    rate: float                 # exponent per unit x (offset by k on the tail)
    weights: np.ndarray         # row vector multiplying e^{rate * x}


@dataclass(frozen=True)
class ScalarMixture:
    """F(x) expanded into explicit exponential terms on both branches."""

    k: float
    lower_terms: tuple[MixtureTerm, ...]
    lower_constant: np.ndarray
    upper_terms: tuple[MixtureTerm, ...]   # rates apply to (x - k)
    upper_constant: np.ndarray

    def components(self, x: float) -> np.ndarray:
        if x <= self.k:
            acc = self.lower_constant.copy()
            for t in self.lower_terms:
                acc = acc + np.exp(t.rate * x) * t.weights
        else:
            acc = self.upper_constant.copy()
            for t in self.upper_terms:
                acc = acc + np.exp(t.rate * (x - self.k)) * t.weights
        return acc


@dataclass(frozen=True)
class StationarySolution:
    """Immutable stationary solution; all evaluators are pure."""

    params: QueueParams
    matrices: ModelMatrices
    spectral: SpectralData
    pi_levels: tuple[np.ndarray, ...]   # level n holds [pi(j, n-j) for j <= n]
    b_c: float
    f_prime_0: np.ndarray
    f_at_k: np.ndarray
    f_prime_at_k: np.ndarray
    alpha0: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    h: AuxChain
    h_hat: tuple[np.ndarray, ...]
    f_infinity: np.ndarray
    warnings: tuple[str, ...] = ()

    def pi(self, i: int, j: int) -> float:
        return float(self.pi_levels[i + j][i])

    @property
    def p_wait_zero(self) -> float:
        return float(sum(level.sum() for level in self.pi_levels))

    def cdf(self, x: float) -> tuple[np.ndarray, float]:
        return eval_cdf(self, x)

    def density(self, x: float) -> np.ndarray:
        return eval_density(self, x)

    def mean(self) -> float:
        return mean_wait(self)

    def mixture(self) -> ScalarMixture:
        return scalar_mixture(self)

    def verify(self, rng=None) -> "ResidualReport":
        return verify_solution(self, rng=rng)


def solve(params: QueueParams) -> StationarySolution:
    """Run the whole pipeline for validated, non-degenerate parameters."""
    matrices = build_matrices(params)
    spectral = build_spectral(params, matrices)
    m0, m1, m2 = particular_matrices(params, matrices, spectral)
    h = h_chain(params, matrices, spectral, m0, m1, m2)

    c, lam = params.c, params.lam
    psi_c = spectral.psi_c

    # Backward recursion pi_n = pi_{n+1} C_hat_n over boundary levels; the
    # top level couples to the continuous part through h15/h16.
    c_hat: list[np.ndarray | None] = [None] * c
    if c > 1:
        c_hat[0] = matrices.b_hat[0] / lam
        for n in range(1, c - 1):
            inner = lam * (np.eye(n + 1) - c_hat[n - 1] @ hat_i(n)) + matrices.delta[n]
            c_hat[n] = matrices.b_hat[n] @ inv(inner)
    inner_top = lam * np.eye(c) + matrices.delta[c - 1] - h.h16
    if c > 1:
        inner_top -= lam * c_hat[c - 2] @ hat_i(c - 1)
    c_hat[c - 1] = -h.h15 @ inv(inner_top)

    h_hat: list[np.ndarray | None] = [None] * c
    h_hat[c - 1] = c_hat[c - 1]
    for n in range(c - 2, -1, -1):
        h_hat[n] = h_hat[n + 1] @ c_hat[n]

    ones = np.ones(c)
    total = h.h19 @ ones + h_hat[c - 1] @ (h.h20 @ ones)
    for n in range(c):
        total = total + h_hat[n] @ np.ones(n + 1)
    b_c = 1.0 / float(psi_c @ total)

    pi_levels = tuple(b_c * (psi_c @ h_hat[n]) for n in range(c))
    floor = min(level.min() for level in pi_levels)
    if floor < -1e-8:
        raise NegativeProbability(f"pi entry {floor:.3e} below -1e-8")

    pi_top = pi_levels[c - 1]
    f_prime_0 = pi_top @ h.h16 - b_c * (psi_c @ h.h15)
    f_at_k = f_prime_0 @ h.h3 + pi_top @ h.h4
    f_prime_at_k = f_prime_0 @ h.h7 + pi_top @ h.h8
    f_infinity = pi_top @ h.h20 + b_c * (psi_c @ h.h19)

    d1, d2 = matrices.d_tilde_1, matrices.d_tilde_2
    alpha0 = f_prime_0 @ d1 - lam * pi_top @ matrices.b1
    bridge = solve_right(alpha0, d1) @ d2
    alpha1 = bridge - lam * f_at_k @ (matrices.b1 @ inv(d1) @ d2 - matrices.b2)
    alpha2 = solve_right(alpha1, d2) - f_prime_at_k \
        + lam * f_at_k @ (np.eye(c) - matrices.b2 @ inv(d2))

    return StationarySolution(
        params=params,
        matrices=matrices,
        spectral=spectral,
        pi_levels=pi_levels,
        b_c=b_c,
        f_prime_0=f_prime_0,
        f_at_k=f_at_k,
        f_prime_at_k=f_prime_at_k,
        alpha0=alpha0,
        alpha1=alpha1,
        alpha2=alpha2,
        m0=m0,
        m1=m1,
        m2=m2,
        h=h,
        h_hat=tuple(h_hat),
        f_infinity=f_infinity,
        warnings=spectral.warnings,
    )


def _lower_prefactors(sol: StationarySolution) -> tuple[np.ndarray, np.ndarray]:
    """(v (U1+ - U1-)^{-1}, alpha0 M0) with v = F'(0) + alpha0 M0 U1-."""
    sp = sol.spectral
    a0m0 = sol.alpha0 @ sol.m0
    v = sol.f_prime_0 + a0m0 @ sp.u1_minus.mat
    w = solve_right(v, sp.u1_plus.mat - sp.u1_minus.mat)
    return w, a0m0


def _tail_head(sol: StationarySolution) -> np.ndarray:
    """Coefficient row of e^{U2-(x-k)} on the tail branch.

    The tail constant is F(inf) itself (the b_c convention cancels there).
    """
    return (sol.f_at_k - sol.f_infinity
            - sol.alpha2 @ (sol.matrices.d_tilde_1 - sol.matrices.d_tilde_2) @ sol.m2)


def eval_cdf(sol: StationarySolution, x: float) -> tuple[np.ndarray, float]:
    """Component vector F(x) and the total P(W <= x)."""
    if x < 0:
        raise ValueError("x must be >= 0")
    sp, m = sol.spectral, sol.matrices
    if x <= sol.params.k:
        w, a0m0 = _lower_prefactors(sol)
        e_p = _expm(sp.u1_plus, x)
        e_m = _expm(sp.u1_minus, x)
        comps = w @ (e_p - e_m) + a0m0 @ (np.eye(sol.params.c) - e_m)
    else:
        y = x - sol.params.k
        e2 = _expm(sp.u2_minus, y)
        const = sol.f_infinity
        dm2 = (m.d_tilde_1 - m.d_tilde_2) @ sol.m2
        comps = (sol.f_at_k @ e2 + const @ (np.eye(sol.params.c) - e2)
                 - sol.alpha2 @ dm2 @ e2
                 + sol.alpha2 @ tilde_q(1, y, m) @ dm2)
    return comps, sol.p_wait_zero + float(comps.sum())


def eval_density(sol: StationarySolution, x: float) -> np.ndarray:
    """Component vector F'(x); at x = k both one-sided limits agree."""
    if x < 0:
        raise ValueError("x must be >= 0")
    sp, m = sol.spectral, sol.matrices
    if x <= sol.params.k:
        w, a0m0 = _lower_prefactors(sol)
        de_p = mat_func(sp.u1_plus.eig, lambda v: v * np.exp(v * x))
        de_m = mat_func(sp.u1_minus.eig, lambda v: v * np.exp(v * x))
        return w @ (de_p - de_m) - a0m0 @ de_m
    y = x - sol.params.k
    dm2 = (m.d_tilde_1 - m.d_tilde_2) @ sol.m2
    return (_tail_head(sol) @ mat_func(sp.u2_minus.eig, lambda v: v * np.exp(v * y))
            - sol.alpha2 @ m.d_tilde_1 @ tilde_q(1, y, m) @ dm2)


def mean_wait(sol: StationarySolution) -> float:
    """E[W]: moment kernel on [0, k], closed forms for the tail."""
    sp, m, k = sol.spectral, sol.matrices, sol.params.k
    if max(sp.u2_minus.eig.values) >= 0.0:
        raise DivergentIntegral("tail matrix has a nonnegative eigenvalue")
    ones = np.ones(sol.params.c)
    w, a0m0 = _lower_prefactors(sol)
    below = (w @ i_kernel(0.0, k, sp.u1_plus.eig) @ ones
             - (w + a0m0) @ i_kernel(0.0, k, sp.u1_minus.eig) @ ones)
    dm2 = (m.d_tilde_1 - m.d_tilde_2) @ sol.m2
    above = (_tail_head(sol) @ (inv(sp.u2_minus.mat) - k * np.eye(sol.params.c)) @ ones
             - sol.alpha2 @ (inv(m.d_tilde_1) + k * np.eye(sol.params.c)) @ dm2 @ ones)
    return float(below + above)


def scalar_mixture(sol: StationarySolution) -> ScalarMixture:
    """Expand both branches into explicit (rate, weight-vector) terms.

    Lower branch: one term per root of the below-threshold pencil plus the
    constant particular part.  Upper branch: the c decaying tail modes plus
    the threshold-memory modes (one per diagonal entry of D_tilde_1) and the
    constant F(inf).  Evaluating the expansion reproduces eval_cdf.
    """
    sp, m = sol.spectral, sol.matrices
    c = sol.params.c
    w, a0m0 = _lower_prefactors(sol)
    a_plus = w @ sp.u1_plus.eig.inverse_vectors
    a_minus = (-w - a0m0) @ sp.u1_minus.eig.inverse_vectors
    lower = [
        MixtureTerm(float(sp.theta[i]), a_minus[i] * sp.phi[i]) for i in range(c)
    ] + [
        MixtureTerm(float(sp.theta[i + c]), a_plus[i] * sp.phi[i + c]) for i in range(c)
    ]

    b_minus = _tail_head(sol) @ sp.u2_minus.eig.inverse_vectors
    upper = [
        MixtureTerm(float(sp.beta[i]), b_minus[i] * sp.psi[i]) for i in range(c)
    ]
    # Memory term alpha2 e^{-D1 y} (D1 - D2) M2: rows of B1 are exact left
    # eigenvectors of D_tilde_1 by its defining conjugation.
    dm2 = (m.d_tilde_1 - m.d_tilde_2) @ sol.m2
    rates = sol.params.mu1 + np.diag(m.delta[c - 1])
    coeff = sol.alpha2 @ m.b1_inv
    for j in range(c):
        upper.append(MixtureTerm(-float(rates[j]), coeff[j] * (m.b1[j] @ dm2)))

    return ScalarMixture(
        k=sol.params.k,
        lower_terms=tuple(lower),
        lower_constant=a0m0.copy(),
        upper_terms=tuple(upper),
        upper_constant=sol.f_infinity.copy(),
    )


@dataclass(frozen=True)
class ResidualReport:
    """Max-abs residuals of every structural identity the solution must obey."""

    residuals: dict[str, float]
    warnings: tuple[str, ...]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def __str__(self) -> str:
        lines = [f"{name:32s} {value:.3e}" for name, value in self.residuals.items()]
        lines += list(self.warnings)
        return "\n".join(lines)


def _balance_residual(sol: StationarySolution) -> float:
    p, worst = sol.params, 0.0
    for n in range(p.c - 1):           # interior levels i + j < c - 1
        for i in range(n + 1):
            j = n - i
            lhs = (p.lam + i * p.mu1 + j * p.mu2) * sol.pi(i, j)
            rhs = (i + 1) * p.mu1 * sol.pi(i + 1, j) + (j + 1) * p.mu2 * sol.pi(i, j + 1)
            if i > 0:
                rhs += p.lam * sol.pi(i - 1, j)
            worst = max(worst, abs(lhs - rhs))
    return worst


def _mixture_derivative(mix: ScalarMixture, x: float, branch: str) -> np.ndarray:
    terms = mix.lower_terms if branch == "lower" else mix.upper_terms
    shift = 0.0 if branch == "lower" else mix.k
    acc = np.zeros_like(mix.lower_constant)
    for t in terms:
        acc = acc + t.rate * np.exp(t.rate * (x - shift)) * t.weights
    return acc


def _integro_residual(sol: StationarySolution, xs: np.ndarray) -> float:
    # Residual of the renewal-style identity below the threshold:
    # F'(x) = lam F(x) - lam int_0^x F(y) B1 Q1(x-y) dy + F'(0)
    #         - lam pi_top B1 (I - Q1(x)) D1^{-1}.
    m, lam = sol.matrices, sol.params.lam
    pi_top = sol.pi_levels[-1]
    d1_inv = inv(m.d_tilde_1)
    worst = 0.0
    for x in xs:
        conv = gauss_panels(
            lambda y: eval_cdf(sol, y)[0] @ m.b1 @ tilde_q(1, x - y, m), 0.0, float(x)
        )
        rhs = (lam * eval_cdf(sol, x)[0] - lam * conv + sol.f_prime_0
               - lam * pi_top @ m.b1 @ (np.eye(sol.params.c) - tilde_q(1, x, m)) @ d1_inv)
        worst = max(worst, float(np.max(np.abs(eval_density(sol, x) - rhs))))
    return worst


def verify_solution(sol: StationarySolution, rng=None) -> ResidualReport:
    """Residual report over every identity the solution is supposed to satisfy.

    Covers the boundary conditions, branch matching at the threshold, the
    interior balance equations, normalization, the null-vector orthogonality
    of the particular terms, and the integro-differential equation below the
    threshold at random interior points.
    """
    rng = np.random.default_rng(rng)
    p, m, sp = sol.params, sol.matrices, sol.spectral
    mix = scalar_mixture(sol)
    res: dict[str, float] = {}

    res["con1_F0"] = float(np.max(np.abs(mix.components(0.0))))
    res["con2_value_at_k"] = float(np.max(np.abs(
        mix.components(p.k) - (mix.upper_constant
                               + sum(np.exp(0.0) * t.weights for t in mix.upper_terms))
    )))
    res["con3_slope_at_k"] = float(np.max(np.abs(
        _mixture_derivative(mix, p.k, "lower") - _mixture_derivative(mix, p.k, "upper")
    )))

    pi_top = sol.pi_levels[-1]
    slope0 = pi_top @ (p.lam * np.eye(p.c) + m.delta[p.c - 1])
    if p.c > 1:
        slope0 = slope0 - p.lam * sol.pi_levels[-2] @ m.i_hat
    res["con4_slope_at_0"] = float(np.max(np.abs(
        _mixture_derivative(mix, 0.0, "lower") - slope0
    )))

    res["con5_balance"] = _balance_residual(sol)
    # b_c enters with a flipped sign under the stored convention.
    res["con6_normalization"] = abs(
        -sol.b_c * float(sp.psi_c.sum()) + float((sol.alpha1 @ sol.m1).sum())
        + sol.p_wait_zero - 1.0
    )

    scale = max(np.abs(sol.alpha0).max(), np.abs(sol.alpha1).max(), 1.0)
    res["null_mode_alpha0"] = abs(float(sol.alpha0 @ sp.phi_star_right)) / scale
    res["null_mode_alpha1"] = abs(float(sol.alpha1 @ sp.psi_c_right)) / scale

    xs = rng.uniform(0.0, p.k, size=10)
    res["integro_differential"] = _integro_residual(sol, xs)

    return ResidualReport(residuals=res, warnings=sol.warnings)
