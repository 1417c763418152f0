"""Dormand-Prince 5(4) stepping with dense output.

Written for small systems (three components here), so the state is a plain
tuple and the arithmetic is unrolled python.  That is several times faster
than numpy for n = 3.
"""

from __future__ import annotations

import math

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth minus fourth order weights
E1, E3, E4, E5, E6, E7 = -71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40

# dense output polynomial coefficients (Shampine)
P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


class StageOutOfDomain(Exception):
    """Raised by a right-hand side when a stage leaves its domain; the step is retried smaller."""


class Step:
    """One accepted step; holds what dense output needs."""

    __slots__ = ("t", "h", "y0", "y1", "k")

    def __init__(self, t, h, y0, y1, k):
        self.t, self.h, self.y0, self.y1, self.k = t, h, y0, y1, k

    def dense(self, theta: float):
        """State at ``t + theta * h`` for ``theta`` in ``[0, 1]``."""
        th = (theta, theta * theta, theta ** 3, theta ** 4)
        w = [sum(p[j] * th[j] for j in range(4)) for p in P]
        h = self.h
        return tuple(
            y + h * sum(wi * ki[c] for wi, ki in zip(w, self.k)) for c, y in enumerate(self.y0)
        )


def rk_step(f, t, y, h, k1=None):
    """Single Dormand-Prince step. Returns ``(y_new, err_vector, stages)``."""
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + C2 * h, tuple(a + h * A21 * b1 for a, b1 in zip(y, k1)))
    k3 = f(t + C3 * h, tuple(a + h * (A31 * b1 + A32 * b2) for a, b1, b2 in zip(y, k1, k2)))
    k4 = f(
        t + C4 * h,
        tuple(a + h * (A41 * b1 + A42 * b2 + A43 * b3) for a, b1, b2, b3 in zip(y, k1, k2, k3)),
    )
    k5 = f(
        t + C5 * h,
        tuple(
            a + h * (A51 * b1 + A52 * b2 + A53 * b3 + A54 * b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        ),
    )
    k6 = f(
        t + h,
        tuple(
            a + h * (A61 * b1 + A62 * b2 + A63 * b3 + A64 * b4 + A65 * b5)
            for a, b1, b2, b3, b4, b5 in zip(y, k1, k2, k3, k4, k5)
        ),
    )
    y1 = tuple(
        a + h * (B1 * b1 + B3 * b3 + B4 * b4 + B5 * b5 + B6 * b6)
        for a, b1, b3, b4, b5, b6 in zip(y, k1, k3, k4, k5, k6)
    )
    k7 = f(t + h, y1)
    err = tuple(
        h * (E1 * b1 + E3 * b3 + E4 * b4 + E5 * b5 + E6 * b6 + E7 * b7)
        for b1, b3, b4, b5, b6, b7 in zip(k1, k3, k4, k5, k6, k7)
    )
    return y1, err, (k1, k2, k3, k4, k5, k6, k7)


def error_norm(err, y0, y1, atol, rtol):
    s = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        s += (e / sc) ** 2
    return math.sqrt(s / len(err))


class DOPRI5:
    """Adaptive driver.

    ``max_step(t, y)`` optionally caps the step size from the current state;
    it is how the boundary-layer resolution rule enters.  Integration runs
    backward when ``t1 < t0``.
    """

    def __init__(self, f, atol=1e-10, rtol=1e-10, max_step=None, h0=None):
        self.f = f
        self.atol, self.rtol = atol, rtol
        self.max_step = max_step
        self.h0 = h0
        self.nfev = 0
        self.nrejected = 0

    def _f(self, t, y):
        self.nfev += 1
        return self.f(t, y)

    def steps(self, t0, y0, t1):
        """Yield accepted :class:`Step` objects covering ``[t0, t1]``."""
        direction = 1.0 if t1 >= t0 else -1.0
        t, y = t0, tuple(y0)
        k1 = self._f(t, y)
        h = self.h0 if self.h0 is not None else self._initial_step(t, y, k1, direction)
        h = abs(h)
        while direction * (t1 - t) > 0.0:
            if self.max_step is not None:
                h = min(h, self.max_step(t, y))
            last = h >= abs(t1 - t) * (1.0 - 1e-14)
            if last:
                h = abs(t1 - t)
            hs = direction * h
            try:
                y1, err, k = rk_step(self._f, t, y, hs, k1)
            except StageOutOfDomain:
                self.nrejected += 1
                h *= 0.25
                if h < 1e-300:
                    raise
                continue
            en = error_norm(err, y, y1, self.atol, self.rtol)
            if en <= 1.0:
                tn = t1 if last else t + hs
                yield Step(t, tn - t, y, y1, k)
                t, y, k1 = tn, y1, k[6]
                fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                h *= fac
            else:
                self.nrejected += 1
                h *= max(0.2, 0.9 * en ** -0.2)

    def _initial_step(self, t, y, f0, direction):
        d0 = math.sqrt(sum(v * v for v in y))
        d1 = math.sqrt(sum(v * v for v in f0))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        if self.max_step is not None:
            h = min(h, self.max_step(t, y))
        return h

    def integrate(self, t0, y0, t1):
        """Integrate and return ``(t_list, y_list)`` of accepted nodes."""
        ts, ys = [t0], [tuple(y0)]
        for st in self.steps(t0, y0, t1):
            ts.append(st.t + st.h)
            ys.append(st.y1)
        return ts, ys
