"""Orthonormal function systems on an interval, plus quadrature machinery.

Two families are provided, each with a constant zeroth member equal to
``1/sqrt(len)`` of its interval:

* ``cosine``   -- ``1/sqrt(pi)``, ``sqrt(2/pi)*cos(s*x)`` on ``[0, pi]``
* ``legendre`` -- normalized Legendre polynomials on ``[-1, 1]``

A system on any other interval is obtained by the affine change of
variables that maps the target interval onto the native one; the
``sqrt(native_len/target_len)`` amplitude keeps the family orthonormal.

Integrals elsewhere in the package go through the Gauss-Legendre rules
built here.  For integrands containing a ``max(eps, .)`` cutoff there are
segmented rules that locate the kinks first (bisection on a uniform
pre-scan) and apply Gauss nodes per smooth piece.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

_NATIVE = {"cosine": (0.0, math.pi), "legendre": (-1.0, 1.0)}


class BasisSystem:
    """Orthonormal family ``phi_0..phi_max_order`` on ``interval``.

    ``phi_0`` is the constant ``1/sqrt(chi)`` with ``chi`` the interval
    length; the remaining members integrate to zero over the interval.
    """

    def __init__(self, kind, interval, max_order=16):
        if kind not in _NATIVE:
            raise ValueError(f"unknown basis kind {kind!r}")
        low, high = float(interval[0]), float(interval[1])
        if low >= high:
            raise ValueError(f"empty interval [{low}, {high}]")
        if max_order < 0:
            raise ValueError("max_order must be >= 0")
        self.kind = kind
        self.interval = (low, high)
        self.chi = high - low
        self.max_order = int(max_order)
        p, q = _NATIVE[kind]
        # affine map target -> native and the orthonormality-preserving amplitude
        self._a = (q - p) / self.chi
        self._b = (p * high - q * low) / self.chi
        self._amp = math.sqrt(self._a)

    def _check_domain(self, x):
        low, high = self.interval
        tol = 1e-9 * self.chi
        x = np.asarray(x, dtype=float)
        if np.any(x < low - tol) or np.any(x > high + tol):
            raise ValueError(f"argument outside basis interval [{low}, {high}]")
        return x

    def eval_orders(self, x, smax):
        """Evaluate ``phi_0..phi_smax`` at ``x``; returns shape ``x.shape + (smax+1,)``."""
        if smax > self.max_order:
            raise ValueError(f"order {smax} exceeds max_order {self.max_order}")
        x = self._check_domain(x)
        u = self._a * x + self._b
        out = np.empty(u.shape + (smax + 1,))
        out[..., 0] = 1.0 / math.sqrt(self.chi)
        if smax == 0:
            return out
        if self.kind == "cosine":
            amp = self._amp * math.sqrt(2.0 / math.pi)
            for s in range(1, smax + 1):
                out[..., s] = amp * np.cos(s * u)
        else:
            prev = np.full_like(u, 1.0 / math.sqrt(2.0))
            cur = math.sqrt(1.5) * u
            out[..., 1] = self._amp * cur
            for s in range(1, smax):
                nxt = (
                    (2 * s + 1) / (s + 1) * math.sqrt((2 * s + 3) / (2 * s + 1)) * u * cur
                    - s / (s + 1) * math.sqrt((2 * s + 3) / (2 * s - 1)) * prev
                )
                prev, cur = cur, nxt
                out[..., s + 1] = self._amp * cur
        return out

    def evaluate(self, s, x):
        """Evaluate the single member ``phi_s`` at ``x`` (scalar or array)."""
        if s < 0:
            raise ValueError("order must be >= 0")
        scalar = np.isscalar(x)
        vals = self.eval_orders(np.atleast_1d(np.asarray(x, dtype=float)), s)[..., s]
        return float(vals[0]) if scalar else vals

    def sup_norm(self, s):
        """Upper bound on ``|phi_s|`` over the interval."""
        if s == 0:
            return 1.0 / math.sqrt(self.chi)
        if self.kind == "cosine":
            return self._amp * math.sqrt(2.0 / math.pi)
        return self._amp * math.sqrt((2 * s + 1) / 2.0)

    def __repr__(self):
        return f"BasisSystem({self.kind!r}, interval={self.interval}, max_order={self.max_order})"


def make_basis(kind, interval, max_order=16):
    """Orthonormal system of the given kind on ``interval``."""
    return BasisSystem(kind, interval, max_order)


def transform_interval(basis, target):
    """The same family carried onto ``target`` by the affine change of variables."""
    low, high = float(target[0]), float(target[1])
    if low >= high:
        raise ValueError(f"empty interval [{low}, {high}]")
    return BasisSystem(basis.kind, (low, high), basis.max_order)


def legendre_explicit(s, x):
    """Closed-form normalized Legendre polynomial on ``[-1, 1]``.

    Binomial-sum form; slow, used as an independent oracle for the
    recursion in :class:`BasisSystem`.
    """
    if s < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k in range(s + 1):
        total = total + math.comb(s, k) ** 2 * (x - 1.0) ** (s - k) * (x + 1.0) ** k
    result = total / 2.0**s * math.sqrt((2 * s + 1) / 2.0)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integration over an interval."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f):
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))

    def apply(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))


def make_quadrature(interval, order):
    """Gauss-Legendre rule with ``order`` nodes mapped onto ``interval``."""
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    low, high = float(interval[0]), float(interval[1])
    t, w = np.polynomial.legendre.leggauss(int(order))
    half = 0.5 * (high - low)
    return QuadratureRule(nodes=low + half * (t + 1.0), weights=half * w)


DEFAULT_ORDER_1D = 64
DEFAULT_ORDER_2D = 48


def integrate_1d(f, interval, order=DEFAULT_ORDER_1D):
    return make_quadrature(interval, order).integrate(f)


def integrate_2d(f, interval, order=DEFAULT_ORDER_2D):
    """Tensor-product Gauss integral of ``f(x, y)`` over ``interval^2``."""
    rule = make_quadrature(interval, order)
    fxy = np.asarray(f(rule.nodes[:, None], rule.nodes[None, :]), dtype=float)
    return float(rule.weights @ fxy @ rule.weights)


def kink_points(g, interval, cells=256):
    """Zero crossings of ``g`` located by sign pre-scan plus bisection.

    ``g`` must accept scalars and 1D arrays.  Crossings are returned
    sorted, strictly inside the interval.
    """
    low, high = interval
    xs = np.linspace(low, high, cells + 1)
    gv = np.asarray(g(xs), dtype=float)
    cuts = []
    for k in range(cells):
        a, b = gv[k], gv[k + 1]
        if a == 0.0:
            cuts.append(xs[k])
        elif a * b < 0.0:
            cuts.append(brentq(lambda x: float(g(x)), xs[k], xs[k + 1], xtol=1e-14))
    return sorted(c for c in cuts if low < c < high)


def segmented_quadrature(interval, cuts, order=DEFAULT_ORDER_1D):
    """Concatenated Gauss rules on the pieces of ``interval`` split at ``cuts``."""
    points = [interval[0], *cuts, interval[1]]
    nodes, weights = [], []
    for a, b in zip(points[:-1], points[1:]):
        if b - a <= 0.0:
            continue
        rule = make_quadrature((a, b), order)
        nodes.append(rule.nodes)
        weights.append(rule.weights)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights))


def cutoff_quadrature_1d(g, interval, cells=256, order=DEFAULT_ORDER_1D):
    """Rule adapted to integrands smooth away from the zero set of ``g``."""
    return segmented_quadrature(interval, kink_points(g, interval, cells), order)


def cutoff_quadrature_2d(g, interval, cells=16, scan_per_cell=4,
                         smooth_order=8, kink_order=24):
    """Panel rule for 2D integrands with a kink along the zero set of ``g``.

    The square is pre-scanned on a ``cells x cells`` grid; panels whose
    scan samples change sign get a denser Gauss rule.  Returns flattened
    ``(x, y, w)`` arrays so one rule can serve many integrands.
    """
    low, high = interval
    edges = np.linspace(low, high, cells + 1)
    m = cells * scan_per_cell
    scan = np.linspace(low, high, m + 1)
    signs = np.sign(np.asarray(g(scan[:, None], scan[None, :]), dtype=float))

    if signs.min() > 0.0 or signs.max() < 0.0:
        # no crossing anywhere: one tensor rule over the whole square
        rule = make_quadrature(interval, DEFAULT_ORDER_2D)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        W = np.outer(rule.weights, rule.weights)
        return X.ravel(), Y.ravel(), W.ravel()

    base = np.polynomial.legendre.leggauss(smooth_order)
    fine = np.polynomial.legendre.leggauss(kink_order)
    xs, ys, ws = [], [], []
    for ix in range(cells):
        rows = slice(ix * scan_per_cell, (ix + 1) * scan_per_cell + 1)
        for iy in range(cells):
            cols = slice(iy * scan_per_cell, (iy + 1) * scan_per_cell + 1)
            block = signs[rows, cols]
            t, w = fine if (block.min() < 0.0 < block.max() or np.any(block == 0.0)) else base
            hx = 0.5 * (edges[ix + 1] - edges[ix])
            hy = 0.5 * (edges[iy + 1] - edges[iy])
            nx = edges[ix] + hx * (t + 1.0)
            ny = edges[iy] + hy * (t + 1.0)
            X, Y = np.meshgrid(nx, ny, indexing="ij")
            W = np.outer(hx * w, hy * w)
            xs.append(X.ravel())
            ys.append(Y.ravel())
            ws.append(W.ravel())
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)
