"""Convex functionals Phi on [0, 1] with one-sided derivatives.

``parse_phi`` understands ``power:<q>``, ``xlogx`` and
``pwl:t1,v1;t2,v2;...``.
"""

from __future__ import annotations

import numpy as np


class ConvexFunctional:
    """Base class. Subclasses implement the three vectorised maps on [0, 1]."""

    spec = ""
    strictly_convex = False

    def value(self, t):
        raise NotImplementedError

    def right_derivative(self, t):
        raise NotImplementedError

    def left_derivative(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.value(t)

    @property
    def kinks(self) -> tuple[float, ...]:
        """Interior points of [0, 1] where the derivative jumps."""
        return ()

    def __repr__(self):
        return f"<ConvexFunctional {self.spec}>"


class Power(ConvexFunctional):
    def __init__(self, q):
        q = float(q)
        if not q > 1:
            raise ValueError(f"power exponent must be > 1, got {q}")
        self.q = q
        self.spec = f"power:{_fmt(q)}"
        self.strictly_convex = True

    def value(self, t):
        return np.power(t, self.q)

    def right_derivative(self, t):
        return self.q * np.power(t, self.q - 1)

    left_derivative = right_derivative


class XLogX(ConvexFunctional):
    """t ln t with the continuous extension 0 at t = 0."""

    spec = "xlogx"
    strictly_convex = True

    def value(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)
        return out if out.ndim else float(out)

    def right_derivative(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.log(t) + 1.0
        return out if out.ndim else float(out)

    left_derivative = right_derivative


class PiecewiseLinear(ConvexFunctional):
    """Linear interpolation of a table (t_k, v_k) with t_0 = 0 and t_last = 1.

    Slopes must be non-decreasing. At a breakpoint the left derivative is the
    slope of the segment to its left; at t = 0 both one-sided derivatives are
    reported as the first slope.
    """

    def __init__(self, ts, vs):
        ts = np.asarray(ts, dtype=float)
        vs = np.asarray(vs, dtype=float)
        if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
            raise ValueError("need at least two (t, value) pairs")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        slopes = np.diff(vs) / np.diff(ts)
        if np.any(np.diff(slopes) < -1e-12 * max(1.0, np.abs(slopes).max())):
            raise ValueError("piecewise-linear table is not convex")
        self.ts, self.vs, self.slopes = ts, vs, slopes
        self.spec = "pwl:" + ";".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(ts, vs))
        self.strictly_convex = False

    @property
    def kinks(self):
        inner = self.ts[1:-1]
        jumps = np.diff(self.slopes) != 0
        return tuple(float(x) for x in inner[jumps])

    def value(self, t):
        return np.interp(t, self.ts, self.vs)

    def right_derivative(self, t):
        k = np.searchsorted(self.ts, t, side="right") - 1
        k = np.clip(k, 0, self.slopes.size - 1)
        return self.slopes[k]

    def left_derivative(self, t):
        k = np.searchsorted(self.ts, t, side="left") - 1
        k = np.clip(k, 0, self.slopes.size - 1)
        return self.slopes[k]


def _fmt(x):
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def parse_phi(spec: str) -> ConvexFunctional:
    """Build a functional from its spec string.

    >>> parse_phi("power:2").value(0.5)
    0.25
    """
    if not isinstance(spec, str):
        raise TypeError("phi spec must be a string")
    s = spec.strip()
    if s == "xlogx":
        return XLogX()
    kind, sep, rest = s.partition(":")
    if not sep:
        raise ValueError(f"unrecognised phi spec {spec!r}")
    if kind == "power":
        try:
            q = float(rest)
        except ValueError:
            raise ValueError(f"bad exponent in {spec!r}") from None
        return Power(q)
    if kind == "pwl":
        try:
            pairs = [tuple(float(x) for x in item.split(",")) for item in rest.split(";")]
        except ValueError:
            raise ValueError(f"bad table in {spec!r}") from None
        if any(len(p) != 2 for p in pairs):
            raise ValueError(f"table entries must be 't,v' pairs in {spec!r}")
        ts, vs = zip(*pairs)
        return PiecewiseLinear(ts, vs)
    raise ValueError(f"unrecognised phi kind {kind!r}")


# the functionals every bulk run sweeps over
CATALOGUE = ("power:2", "power:3", "xlogx", "pwl:0,0;0.5,0;1,0.5")
STRICT_CATALOGUE = ("power:2", "power:3", "xlogx")


def catalogue(strict=False):
    return [parse_phi(s) for s in (STRICT_CATALOGUE if strict else CATALOGUE)]
