"""Adaptive composite Simpson quadrature against belief distributions.

The integrator is breadth-first and vectorized: every refinement sweep
evaluates the integrand once on all pending sub-panels, and integrands
may be vector valued (trailing axes), in which case the error test uses
the worst component.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-8
MAX_NODES = 2**16


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float, nodes: int):
        super().__init__(f"{message} (error estimate {estimate:.3g} after {nodes} nodes)")
        self.estimate = estimate
        self.nodes = nodes


def _panel_err(delta):
    delta = np.abs(delta)
    if delta.ndim > 1:
        delta = delta.reshape(delta.shape[0], -1).max(axis=1)
    return delta / 15.0


def adaptive_simpson(f, a: float, b: float, tol: float = DEFAULT_TOL,
                     breakpoints=None, max_nodes: int = MAX_NODES):
    """Integrate ``f`` over ``[a, b]``.

    ``f`` takes a 1-d array of abscissae and returns an array whose first
    axis matches it.  ``breakpoints`` inside ``(a, b)`` become panel edges,
    so known kinks never sit inside a panel.

    Returns ``(value, error_estimate, n_evaluations)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not b > a:
        raise ValueError("need a < b")
    edges = [a, b]
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        edges += list(bp[(bp > a) & (bp < b)])
    edges = np.unique(np.asarray(edges, dtype=float))

    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    fe = np.asarray(f(edges), dtype=float)
    fm = np.asarray(f(mid), dtype=float)
    fa, fb = fe[:-1], fe[1:]
    nodes = len(edges) + len(mid)
    span = b - a

    def w(x):
        return x.reshape((-1,) + (1,) * (fe.ndim - 1))

    whole = w(hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    total = np.zeros(fe.shape[1:])
    err_total = 0.0

    while len(lo):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        fx = np.asarray(f(np.concatenate([lm, rm])), dtype=float)
        flm, frm = fx[: len(lo)], fx[len(lo):]
        nodes += 2 * len(lo)
        left = w(mid - lo) / 6.0 * (fa + 4.0 * flm + fm)
        right = w(hi - mid) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        err = _panel_err(delta)
        ok = err <= tol * (hi - lo) / span
        # Richardson-corrected panel value
        total = total + (left[ok] + right[ok] + delta[ok] / 15.0).sum(axis=0)
        err_total += float(err[ok].sum())
        if ok.all():
            break
        keep = ~ok
        if nodes + 4 * int(keep.sum()) > max_nodes:
            raise QuadratureError(
                "adaptive Simpson did not converge within the node budget",
                err_total + float(err[keep].sum()),
                nodes,
            )
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        mid = np.concatenate([lm[keep], rm[keep]])
        fa = np.concatenate([fa[keep], fm[keep]])
        fb = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        whole = np.concatenate([left[keep], right[keep]])

    return total, err_total, nodes


def integrate_over_opponent(f, dist, tol: float = DEFAULT_TOL, breakpoints=None,
                            method: str = "auto", max_nodes: int = MAX_NODES,
                            full_output: bool = False):
    """Compute ``E[f(theta)]`` for ``theta ~ dist``.

    With ``method="cdf"`` (the default when an inverse cdf exists) the
    integral is taken over ``u in [0, 1]`` after substituting
    ``theta = F^{-1}(u)``; ``method="density"`` integrates ``f * pdf`` over
    the support instead.  Breakpoints are given in type space.
    """
    lo, hi = dist.support.lo, dist.support.hi
    if method == "auto":
        method = "cdf" if dist.has_ppf else "density"

    if method == "cdf":
        bps = None if breakpoints is None else dist.cdf(np.asarray(breakpoints, dtype=float))
        if dist.kind == "uniform":
            width = hi - lo

            def g(u):
                return f(lo + width * u)
        else:
            def g(u):
                return f(dist.ppf(u))
        val, err, n = adaptive_simpson(g, 0.0, 1.0, tol, bps, max_nodes)
    elif method == "density":
        def g(t):
            vals = np.asarray(f(t), dtype=float)
            dens = dist.pdf(t)
            return vals * dens.reshape((-1,) + (1,) * (vals.ndim - 1))
        val, err, n = adaptive_simpson(g, lo, hi, tol, breakpoints, max_nodes)
    else:
        raise ValueError(f"unknown method {method!r}")

    if np.ndim(val) == 0:
        val = float(val)
    if full_output:
        return val, err, n
    return val
