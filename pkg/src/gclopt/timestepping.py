"""Embedded explicit Runge-Kutta pairs with a digital-filter step
controller (H211b).  The solution vector may have any shape; the rhs
callable receives ``(t, y)`` and returns ``dy/dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RkPair:
    name: str
    a: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray
    c: np.ndarray
    order: int
    embedded_order: int
    fsal: bool

    @property
    def stages(self) -> int:
        return self.b.size


def bogacki_shampine_32() -> RkPair:
    a = np.zeros((4, 4))
    a[1, 0] = 1.0 / 2.0
    a[2, 1] = 3.0 / 4.0
    a[3, :3] = [2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]
    b = np.array([2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0])
    b_hat = np.array([7.0 / 24.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 8.0])
    c = np.array([0.0, 1.0 / 2.0, 3.0 / 4.0, 1.0])
    return RkPair("BS3(2)", a, b, b_hat, c, 3, 2, True)


def dormand_prince_54() -> RkPair:
    a = np.zeros((7, 7))
    a[1, 0] = 1.0 / 5.0
    a[2, :2] = [3.0 / 40.0, 9.0 / 40.0]
    a[3, :3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]
    a[4, :4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0]
    a[5, :5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ]
    a[6, :6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0]
    b = a[6].copy()
    b_hat = np.array(
        [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ]
    )
    c = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
    return RkPair("DP5(4)", a, b, b_hat, c, 5, 4, True)


PAIRS = {"bs32": bogacki_shampine_32, "dp54": dormand_prince_54}


@dataclass
class StepController:
    """H211b digital filter on the scaled error ratio.

    On rejection the controller falls back to the classic integrating
    law and clears its memory, which avoids oscillating reject cycles.
    """

    rtol: float = 1e-7
    atol: float = 1e-9
    safety: float = 0.9
    fac_min: float = 0.2
    fac_max: float = 5.0
    _r_prev: float = field(default=1.0, repr=False)
    _h_prev: float = field(default=0.0, repr=False)

    def error_norm(self, delta: np.ndarray, y0: np.ndarray, y1: np.ndarray) -> float:
        scale = self.atol + self.rtol * np.maximum(np.abs(y0), np.abs(y1))
        return float(np.sqrt(np.mean((delta / scale) ** 2)))

    def propose(self, h: float, err: float, order: int) -> tuple[bool, float]:
        """Return (accept, next step size)."""
        k = order + 1
        if not np.isfinite(err):
            self._r_prev, self._h_prev = 1.0, 0.0
            return False, self.fac_min * h
        r = max(err, 1e-16)
        if r > 1.0:  # rejected: integrating controller, reset memory
            fac = self.safety * r ** (-1.0 / k)
            self._r_prev, self._h_prev = 1.0, 0.0
            return False, max(self.fac_min, fac) * h
        beta = 1.0 / (4.0 * k)
        fac = self.safety * r ** (-beta) * self._r_prev ** (-beta)
        if self._h_prev > 0.0:
            fac *= (h / self._h_prev) ** (-0.25)
        fac = min(self.fac_max, max(self.fac_min, fac))
        self._r_prev, self._h_prev = r, h
        return True, fac * h


@dataclass
class IntegrationStats:
    t: float
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0


def integrate(
    rhs,
    y0: np.ndarray,
    t_span: tuple[float, float],
    dt0: float,
    controller: StepController | None = None,
    pair: RkPair | None = None,
    callback=None,
    max_steps: int = 1_000_000,
) -> tuple[np.ndarray, IntegrationStats]:
    """Advance ``dy/dt = rhs(t, y)`` over ``t_span``; returns (y, stats).

    ``callback(t, y)`` runs after every accepted step.  The last step is
    shortened to land on the final time exactly.
    """
    pair = pair if pair is not None else bogacki_shampine_32()
    ctrl = controller if controller is not None else StepController()
    t, t_end = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    stats = IntegrationStats(t=t)
    if t_end <= t:
        return y, stats

    s = pair.stages
    k = [None] * s
    h = min(dt0, t_end - t)
    k[0] = rhs(t, y)
    stats.n_rhs += 1
    fsal_ready = True

    for _ in range(max_steps):
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            break
        h = min(h, t_end - t)
        if not fsal_ready:
            k[0] = rhs(t, y)
            stats.n_rhs += 1
            fsal_ready = True
        for i in range(1, s):
            yi = y + h * sum(pair.a[i, j] * k[j] for j in range(i) if pair.a[i, j] != 0.0)
            k[i] = rhs(t + pair.c[i] * h, yi)
            stats.n_rhs += 1
        y1 = y + h * sum(pair.b[j] * k[j] for j in range(s) if pair.b[j] != 0.0)
        delta = h * sum(
            (pair.b[j] - pair.b_hat[j]) * k[j]
            for j in range(s)
            if pair.b[j] != pair.b_hat[j]
        )
        err = ctrl.error_norm(delta, y, y1)
        accept, h_next = ctrl.propose(h, err, pair.embedded_order)
        if accept:
            t += h
            y = y1
            stats.n_accepted += 1
            if pair.fsal:
                k[0] = k[s - 1]
            else:
                fsal_ready = False
            if callback is not None:
                callback(t, y)
        else:
            stats.n_rejected += 1  # k[0] still belongs to the current y
        h = h_next
        if h <= 1e-15 * max(1.0, abs(t_end)):
            raise RuntimeError(f"step size collapsed at t={t:.6g}")
    else:
        raise RuntimeError(f"max_steps={max_steps} exceeded at t={t:.6g}")
    stats.t = t
    return y, stats
