"""Matrix-valued ODE transport with scipy's DOP853 integrator."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp

from isolab.blocks import Matrix
from isolab.errors import IntegrationError

Coefficient = Callable[[complex], Matrix]


def integrate_matrix(
    rhs: Callable[[float, Matrix], Matrix],
    Y0: npt.ArrayLike,
    t_span: tuple[float, float],
    rtol: float = 1e-11,
    atol: float = 1e-13,
    t_eval: npt.ArrayLike | None = None,
    all_steps: bool = False,
) -> tuple[npt.NDArray[np.float64], list[Matrix]]:
    """Solve dY/dt = rhs(t, Y) for a complex matrix Y.

    Returns:
        tuple: The output times and the matrix at each of them: the
        ``t_eval`` points, every accepted step with ``all_steps``, otherwise
        only the endpoint.

    Raises:
        IntegrationError: If the solver fails or produces non-finite values.
    """
    Y0 = np.array(Y0, dtype=np.complex128)
    shape = Y0.shape

    def fun(t: float, y: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return np.asarray(rhs(t, y.reshape(shape)), dtype=np.complex128).ravel()

    sol = solve_ivp(
        fun,
        t_span,
        Y0.ravel(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=None if t_eval is None else np.asarray(t_eval, dtype=float),
    )
    if not sol.success:
        raise IntegrationError(f"integration over {t_span} failed: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError(f"integration over {t_span} produced non-finite values")
    if t_eval is None and not all_steps:
        return np.array([sol.t[-1]]), [sol.y[:, -1].reshape(shape)]
    return sol.t, [sol.y[:, i].reshape(shape) for i in range(sol.t.size)]


def transport_log(
    coef: Coefficient, Y0: npt.ArrayLike, w0: complex, w1: complex, rtol: float = 1e-11, atol: float = 1e-13
) -> Matrix:
    """Carry a solution of dY/dz = C(z)Y along the straight segment w0 → w1 in w = log z.

    Radial segments (equal imaginary parts) and circular arcs (equal real
    parts) are the two shapes callers use; the branch of z is the one the
    logarithms encode.
    """
    dw = w1 - w0

    def rhs(t: float, Y: Matrix) -> Matrix:
        z = np.exp(w0 + t * dw)
        return dw * z * (coef(z) @ Y)

    return integrate_matrix(rhs, Y0, (0.0, 1.0), rtol, atol)[1][-1]


def transport_line(
    coef: Coefficient, Y0: npt.ArrayLike, z0: complex, z1: complex, rtol: float = 1e-11, atol: float = 1e-13
) -> Matrix:
    """Carry a solution of dY/dz = C(z)Y along the straight segment z0 → z1."""
    dz = z1 - z0

    def rhs(t: float, Y: Matrix) -> Matrix:
        return dz * (coef(z0 + t * dz) @ Y)

    return integrate_matrix(rhs, Y0, (0.0, 1.0), rtol, atol)[1][-1]


def loop_around_origin(
    coef: Coefficient, Y0: npt.ArrayLike, w0: complex, turns: int = 1, rtol: float = 1e-11, atol: float = 1e-13
) -> Matrix:
    """Continue a solution counter-clockwise ``turns`` times around z = 0 on |z| = e^{Re w0}."""
    Y = np.array(Y0, dtype=np.complex128)
    for k in range(4 * turns):
        start = w0 + 0.5j * np.pi * k
        Y = transport_log(coef, Y, start, start + 0.5j * np.pi, rtol, atol)
    return Y
