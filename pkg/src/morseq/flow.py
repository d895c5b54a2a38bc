"""Numerical check of the torus dataset by integrating the gradient flow.

The torus stands upright in the xz-plane:

    x = (R + r cos t) cos p,   y = r sin t,   z = (R + r cos t) sin p,

with height f = z and reflection y -> -y (t -> -t).  The fixed locus is the
outer circle t = 0 and the inner circle t = pi.  Side labels are the sign of
y, so the chosen normal at every fixed critical point is +y.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import Mismatch, NonConvergence
from .instance import MorseInstance

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusChart:
    R: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not (self.R > self.r > 0):
            raise ValueError("need R > r > 0")

    # name -> (theta, phi, index, stable)
    def critical_points(self) -> dict[str, tuple[float, float, int, bool]]:
        h = math.pi / 2
        return {
            "a": (0.0, h, 2, False),
            "b": (math.pi, h, 1, True),
            "c": (math.pi, -h, 1, False),
            "d": (0.0, -h, 0, True),
        }

    def embed(self, theta, phi):
        w = self.R + self.r * np.cos(theta)
        return np.stack([w * np.cos(phi), self.r * np.sin(theta), w * np.sin(phi)])

    def f(self, theta, phi):
        return (self.R + self.r * np.cos(theta)) * np.sin(phi)

    def metric(self, theta) -> tuple:
        return self.r ** 2, (self.R + self.r * np.cos(theta)) ** 2

    def gradient(self, theta, phi):
        """grad f = g^{-1} df in chart components (d/dtheta, d/dphi)."""
        gt, gp = _grad(self, np.asarray(theta, float), np.asarray(phi, float),
                       np.ones_like(np.asarray(theta, float)), np.ones_like(np.asarray(phi, float)))
        return np.stack([gt, gp])

    def hessian_diagonal(self, theta, phi) -> tuple[float, float]:
        """Second chart derivatives of f; the mixed term vanishes at critical points."""
        return (-self.r * math.cos(theta) * math.sin(phi),
                -(self.R + self.r * math.cos(theta)) * math.sin(phi))

    def normal_hessian(self, theta, phi):
        """a11 = <e1, nabla_{e1} grad f> with e1 = d/dtheta / r on the fixed locus."""
        return -np.cos(theta) * np.sin(phi) / self.r


def _grad(chart, theta, phi, off_t, off_p):
    # off_t / off_p are 0 for samples pinned on an invariant line
    gt = -np.sin(theta) * np.sin(phi) / chart.r * off_t
    gp = np.cos(phi) / (chart.R + chart.r * np.cos(theta)) * off_p
    return gt, gp


def _wrap(x):
    return (x + math.pi) % TWO_PI - math.pi


def _on_multiple(x: np.ndarray, period: float, shift: float = 0.0) -> np.ndarray:
    # exact-float test; only starts placed on an invariant line pass
    return np.mod(x - shift, period) == 0.0


@dataclass
class FlowRun:
    target: np.ndarray  # index into critical-point names, -1 if none
    depart_side: np.ndarray  # sign of y just after leaving the source, 0 on the locus
    arrive_side: np.ndarray  # sign of y at arrival, 0 on the locus
    on_locus: np.ndarray  # stayed on the fixed locus throughout
    xi_sign: np.ndarray  # sign of xi (in the e1 frame) at arrival
    steps: np.ndarray
    monotone: np.ndarray  # f strictly decreased at every step


def integrate(chart: TorusChart, theta0, phi0, source: str, step: float = 1e-3,
              arrival_eps: float = 1e-5, max_time: float = 200.0,
              xi0: Optional[np.ndarray] = None) -> FlowRun:
    """RK4 on the negative gradient flow, vectorized over samples."""
    names = list(chart.critical_points())
    crit = np.array([[v[0], v[1]] for v in chart.critical_points().values()])
    th = np.array(theta0, dtype=float)
    ph = np.array(phi0, dtype=float)
    n = th.size
    xi = np.ones(n) if xi0 is None else np.array(xi0, dtype=float)
    # samples starting exactly on an invariant line keep that coordinate frozen
    off_t = (~_on_multiple(th, math.pi)).astype(float)
    off_p = (~_on_multiple(ph, math.pi, math.pi / 2)).astype(float)
    src = names.index(source)

    target = np.full(n, -1)
    arrive = np.zeros(n, dtype=int)
    steps = np.zeros(n, dtype=int)
    monotone = np.ones(n, dtype=bool)
    depart = np.sign(np.sin(th) * off_t).astype(int)
    on_locus = off_t == 0.0

    active = np.arange(n)
    fval = chart.f(th, ph)
    max_steps = int(math.ceil(max_time / step))

    R, r = chart.R, chart.r

    def field(t, p, x, ot, op):
        st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
        return st * sp / r * ot, -cp / (R + r * ct) * op, -ct * sp / r * x

    # the flow speed is at least |x - crit| / 3 near every critical point, so
    # only slow samples need the exact distance test
    slow2 = (3.0 * arrival_eps) ** 2
    others = [i for i in range(len(names)) if i != src]
    for k in range(1, max_steps + 1):
        t, p, x = th[active], ph[active], xi[active]
        ot, op = off_t[active], off_p[active]
        k1 = field(t, p, x, ot, op)
        h2 = 0.5 * step
        k2 = field(t + h2 * k1[0], p + h2 * k1[1], x + h2 * k1[2], ot, op)
        k3 = field(t + h2 * k2[0], p + h2 * k2[1], x + h2 * k2[2], ot, op)
        k4 = field(t + step * k3[0], p + step * k3[1], x + step * k3[2], ot, op)
        h6 = step / 6.0
        t = t + h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p = p + h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        x = x + h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.isfinite(t).all() and np.isfinite(p).all()):
            raise NonConvergence(f"flow from {source} left the chart at step {k}; "
                                 "reduce the step size")
        th[active], ph[active], xi[active] = t, p, x
        fnew = (R + r * np.cos(t)) * np.sin(p)
        monotone[active] &= fnew < fval[active]
        fval[active] = fnew
        speed2 = (r * k1[0]) ** 2 + ((R + r * np.cos(t)) * k1[1]) ** 2
        cand = np.nonzero(speed2 < slow2)[0]
        if cand.size == 0:
            continue
        tc, pc = t[cand], p[cand]
        dist = np.full((cand.size, len(names)), np.inf)
        for j in others:
            dist[:, j] = np.hypot(_wrap(tc - crit[j, 0]), _wrap(pc - crit[j, 1]))
        hit_c = dist.min(axis=1) < arrival_eps
        if hit_c.any():
            rows = cand[hit_c]
            done = active[rows]
            target[done] = dist[hit_c].argmin(axis=1)
            arrive[done] = np.sign(np.sin(t[rows]) * off_t[done]).astype(int)
            steps[done] = k
            keep = np.ones(active.size, dtype=bool)
            keep[rows] = False
            active = active[keep]
            if active.size == 0:
                break
    if active.size:
        raise NonConvergence(f"{active.size} of {n} samples from {source} did not reach a "
                             f"critical point within {max_steps} steps of size {step}")
    return FlowRun(target, depart, arrive, on_locus, np.sign(xi).astype(int), steps, monotone)


def descending_starts(chart: TorusChart, source: str, samples: int, eps: float):
    """Points at chart distance ``eps`` along the descending directions of ``source``."""
    t0, p0, index, _ = chart.critical_points()[source]
    if index == 0:
        return np.zeros(0), np.zeros(0)
    if index == 2:
        if samples % 4:
            raise ValueError("sample count must be a multiple of 4")
        k = np.arange(samples)
        c, s = np.cos(TWO_PI * k / samples), np.sin(TWO_PI * k / samples)
        # exact axis directions so the invariant lines are hit exactly
        q = samples // 4
        c[k % (2 * q) == q] = 0.0
        s[k % (2 * q) == 0] = 0.0
        return t0 + eps * c, p0 + eps * s
    ht, hp = chart.hessian_diagonal(t0, p0)
    if ht < 0:
        return np.array([t0 + eps, t0 - eps]), np.array([p0, p0])
    return np.array([t0, t0]), np.array([p0 + eps, p0 - eps])


@dataclass(frozen=True)
class Trajectory:
    source: str
    target: str
    carrier: str
    depart: Optional[int]
    arrive: Optional[int]
    xi: Optional[str]
    samples: tuple[int, ...]


@dataclass
class FlowResult:
    trajectories: list[Trajectory] = field(default_factory=list)
    monotone: bool = True
    max_steps: int = 0

    def count(self, source: str, target: str) -> int:
        return sum(1 for t in self.trajectories if (t.source, t.target) == (source, target))

    def signature(self) -> Counter:
        return Counter((t.source, t.target, t.carrier, t.depart, t.arrive, t.xi)
                       for t in self.trajectories)


def _runs(indices: list[int], n: int) -> list[list[int]]:
    """Maximal runs of consecutive sample indices on a circle of n samples."""
    if not indices:
        return []
    idx = sorted(indices)
    runs = [[idx[0]]]
    for i in idx[1:]:
        if i == runs[-1][-1] + 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n - 1:
        runs[0] = runs.pop() + runs[0]
    return runs


def shoot(chart: TorusChart, source: str, samples: int = 720, step: float = 1e-3,
          arrival_eps: float = 1e-5, eps: float = 1e-2,
          target_orientation: int = 1) -> FlowResult:
    """Flow the descending sphere of ``source`` and cluster rigid trajectories.

    Results are cached per argument tuple; treat them as read-only.

    Ambient trajectories count toward index gap 1, fixed-locus ones toward
    boundary-index gap 1.  ``target_orientation`` flips the chosen normal at
    the targets (for the P/R definition check).
    """
    return _shoot(chart, source, samples, step, arrival_eps, eps, target_orientation)


@lru_cache(maxsize=32)
def _shoot(chart, source, samples, step, arrival_eps, eps, target_orientation) -> FlowResult:
    cps = chart.critical_points()
    names = list(cps)
    th, ph = descending_starts(chart, source, samples, eps)
    if th.size == 0:
        return FlowResult()
    xi0 = np.cos(th)  # +y expressed in the e1 = d/dtheta / r frame on the locus
    run = integrate(chart, th, ph, source, step, arrival_eps, xi0=xi0)
    bindex = {k: v[2] - (0 if v[3] else 1) for k, v in cps.items()}
    cells: dict[tuple, list[int]] = {}
    for i in range(th.size):
        tgt = names[run.target[i]]
        carrier = "fixed" if run.on_locus[i] else "ambient"
        if carrier == "ambient" and cps[source][2] - cps[tgt][2] != 1:
            continue
        if carrier == "fixed" and bindex[source] - bindex[tgt] != 1:
            continue
        depart = int(run.depart_side[i]) if carrier == "ambient" and not cps[source][3] else None
        arrive = int(run.arrive_side[i]) if carrier == "ambient" and cps[tgt][3] else None
        xi = None
        if carrier == "fixed" and not cps[tgt][3]:
            t_end = cps[tgt][0]
            side = int(np.sign(run.xi_sign[i] * math.cos(t_end)))
            xi = "P" if side == target_orientation else "R"
        cells.setdefault((tgt, carrier, depart, arrive, xi), []).append(i)
    out = FlowResult(monotone=bool(run.monotone.all()), max_steps=int(run.steps.max()))
    n = th.size
    for (tgt, carrier, depart, arrive, xi), idx in sorted(cells.items(), key=lambda kv: kv[1][0]):
        runs = _runs(idx, n) if cps[source][2] == 2 else [[i] for i in idx]
        for r in runs:
            out.trajectories.append(Trajectory(source, tgt, carrier, depart, arrive, xi, tuple(r)))
    return out


def count_trajectories(pair: tuple[str, str], chart: TorusChart = TorusChart(),
                       **kwargs) -> FlowResult:
    src, tgt = pair
    res = shoot(chart, src, **kwargs)
    return FlowResult([t for t in res.trajectories if t.target == tgt], res.monotone, res.max_steps)


def classify_xi(pair: tuple[str, str], chart: TorusChart = TorusChart(),
                target_orientation: int = 1, **kwargs) -> list[str]:
    """P/R class of every fixed-locus trajectory between the pair."""
    res = count_trajectories(pair, chart, target_orientation=target_orientation, **kwargs)
    return [t.xi for t in res.trajectories if t.carrier == "fixed"]


def flow_all(chart: TorusChart = TorusChart(), samples: int = 720, step: float = 1e-3,
             arrival_eps: float = 1e-5, eps: float = 1e-2,
             target_orientation: int = 1) -> FlowResult:
    """Trajectories out of every critical point."""
    total = FlowResult()
    for src in chart.critical_points():
        res = shoot(chart, src, samples=samples, step=step, arrival_eps=arrival_eps,
                    eps=eps, target_orientation=target_orientation)
        total.trajectories += res.trajectories
        total.monotone &= res.monotone
        total.max_steps = max(total.max_steps, res.max_steps)
    return total


@dataclass
class VerifyReport:
    recovered: FlowResult
    matched: bool
    diff: list[str]


def dataset_signature(inst: MorseInstance) -> Counter:
    return Counter((t.source, t.target, t.carrier, t.departure_side, t.arrival_side, t.xi_class)
                   for t in inst.trajectories)


def verify_against(inst: MorseInstance, chart: TorusChart = TorusChart(), **kwargs) -> VerifyReport:
    """Compare recovered counts, sides and xi classes with the dataset records."""
    res = flow_all(chart, **kwargs)
    got, want = res.signature(), dataset_signature(inst)
    diff = []
    for key in sorted(set(got) | set(want), key=repr):
        if got[key] != want[key]:
            src, tgt, carrier, dep, arr, xi = key
            diff.append(f"{src}->{tgt} {carrier} depart={dep} arrive={arr} xi={xi}: "
                        f"flow {got[key]}, dataset {want[key]}")
    if diff:
        raise Mismatch("flow data disagrees with the dataset:\n" + "\n".join(diff), diff)
    return VerifyReport(res, True, diff)
