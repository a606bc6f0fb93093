"""Per-energy certificates that no eigenfunction hides in the essential spectrum.

For each lambda with |lambda| >= mu the certificate builds the solution of
(H - lambda) w = 0 that decays at +infinity (normalized to unit leading
coefficient), forms u = f + g and v = f - g, and records two independent
witnesses that the solution cannot be square integrable:

* Parity witness. H commutes with reflection, so a nontrivial L^2
  eigenfunction could be chosen even or odd; even forces v'(0) = 0 and odd
  forces v(0) = 0. Since the decaying-at-+inf solution is unique up to
  scale, min(|v(0)|, |v'(0)|), suitably normalized, bounded away from zero
  rules both parities out at once. The sign pattern v(0) > 0, v'(0) < 0
  (for lambda >= mu, with positive normalization) and strict positivity of
  u, v on (0, R] are recorded as flags.

* Mode-matching witness. The same solution is expanded at the left end in
  the four free modes; the joint amplitude of the non-decaying modes
  (growing + oscillatory pair), measured at the near edge of the fit
  window and normalized by the solution scale near the origin, must vanish
  for an eigenfunction. Its distance from zero is the "mismatch".

Energies lambda <= -mu reduce to the positive branch through the exact
conjugation S H S = -H, S(f, g) = (g, f), which maps solutions at lambda
to solutions at -lambda with v -> -v. A direct negative-branch computation
is also available for cross-checks.

negative_control runs the same machinery on the decoupled operator
H0 + diag(V, -V) with a sech^2 well, which genuinely carries an embedded
eigenvalue: there the signed growing-mode coefficient changes sign and the
mismatch dips to numerical noise, demonstrating the detector is not vacuous.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import __version__ as _tool_version
from .errors import ConfigurationError, DomainError, SolispecError
from .ground_state import GroundState
from .jost import (CERT_SWEEP_RTOL, JostSolution, at_threshold, default_window,
                   expand_in_modes, _sweep_decaying)
from .linearized_operator import PotentialMatrix, decoupled_well_potential, potential_V
from .nonlinearity import Nonlinearity

VERDICT_NONE = "no-embedded-eigenvalue"
VERDICT_CANDIDATE = "embedded-candidate"
VERDICT_INCONCLUSIVE = "inconclusive"

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Thresholds:
    """Certificate decision levels (normalized quantities)."""

    theta_cert: float = 1e-3
    theta_mismatch: float = 1e-3
    threshold_relax: float = 0.1     # extra slack exactly at |lambda| = mu

    def to_dict(self) -> dict:
        return {"theta_cert": self.theta_cert, "theta_mismatch": self.theta_mismatch,
                "threshold_relax": self.threshold_relax}


@dataclass(frozen=True)
class CertificateRecord:
    lam: float
    v0: float
    v0p: float
    v0_norm: float
    v0p_norm: float
    u_positive: bool
    v_signed: bool
    mismatch: float
    c_grow_signed: float
    fit_residual: float
    verdict: str
    at_threshold: bool = False
    method: str = "reflect"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam, "v0": self.v0, "v0p": self.v0p,
            "v0_norm": self.v0_norm, "v0p_norm": self.v0p_norm,
            "u_positive": self.u_positive, "v_signed": self.v_signed,
            "mismatch": self.mismatch, "c_grow_signed": self.c_grow_signed,
            "fit_residual": self.fit_residual, "verdict": self.verdict,
            "at_threshold": self.at_threshold, "method": self.method,
            "error": self.error,
        }


def _error_record(lam: float, msg: str) -> CertificateRecord:
    return CertificateRecord(lam=float(lam), v0=float("nan"), v0p=float("nan"),
                             v0_norm=float("nan"), v0p_norm=float("nan"),
                             u_positive=False, v_signed=False, mismatch=float("nan"),
                             c_grow_signed=float("nan"), fit_residual=float("nan"),
                             verdict=VERDICT_INCONCLUSIVE, error=msg)


def _orientation(sol: JostSolution) -> float:
    """Sign of the leading decaying coefficient (flip to enforce c = +1)."""
    tail = sol.x >= sol.x_asym - 0.5 * (sol.x[1] - sol.x[0])
    lead = (sol.f if sol.mode.channel == 0 else sol.g)[tail][0]
    return 1.0 if lead >= 0 else -1.0


def _strictly_positive(y: np.ndarray) -> bool:
    return bool(np.all(y > 0.0))


def _derivative_5pt(arr: np.ndarray, i: int, h: float) -> float:
    return float((-arr[i + 2] + 8 * arr[i + 1] - 8 * arr[i - 1] + arr[i - 2]) / (12 * h))


def _score_solution(pm: PotentialMatrix, sol: JostSolution, lam: float,
                    th: Thresholds, flip: bool, method_name: str) -> CertificateRecord:
    """Turn a decaying solution into a certificate record (scale invariant)."""
    mu = pm.mu
    thr = at_threshold(lam, mu)
    relax = th.threshold_relax if thr else 1.0

    orient = _orientation(sol)
    if orient < 0:
        sol = sol.scaled(-1.0)

    sgn_v = 1.0 if lam >= 0 else -1.0
    u = sol.f + sol.g
    v = -(sol.f - sol.g) if flip else sol.f - sol.g
    vp = sol.gp - sol.fp if flip else sol.fp - sol.gp

    h = float(sol.x[1] - sol.x[0])
    i0 = int(np.argmin(np.abs(sol.x)))
    if abs(sol.x[i0]) > 1e-9:
        raise DomainError("grid does not contain the origin")

    pos_mask = sol.x > 0.5 * h
    u_positive = _strictly_positive(u[pos_mask])
    v_signed = _strictly_positive(sgn_v * v[pos_mask])

    v0 = float(v[i0])
    v0p = _derivative_5pt(v, i0, h)

    sq = math.sqrt(mu)
    near = (sol.x >= 0.0) & (sol.x <= 5.0 / sq)
    v_near_max = float(np.max(np.abs(v[near])))
    vp_near_max = float(np.max(np.abs(vp[near])))
    v0_norm = abs(v0) / v_near_max if v_near_max > 0 else 0.0
    v0p_norm = abs(v0p) / vp_near_max if vp_near_max > 0 else 0.0

    window = default_window(pm, abs(lam) if flip else lam, end=-1)
    exp = expand_in_modes(sol, end=-1, window=window)
    sup_mask = np.abs(sol.x) <= 5.0 / sq
    sup_mid = float(np.max(np.maximum(np.abs(sol.f[sup_mask]), np.abs(sol.g[sup_mask]))))
    nondecaying = exp.amplitudes[1:]
    mismatch = float(np.sqrt(np.sum(nondecaying**2)) / sup_mid)
    grow_mode_env = exp.amplitudes[1]
    c_grow_signed = float(math.copysign(grow_mode_env, exp.coeffs[1]) / sup_mid)

    pass_parity = min(v0_norm, v0p_norm) >= th.theta_cert * relax
    pass_mismatch = mismatch >= th.theta_mismatch * relax
    if pass_parity and pass_mismatch:
        verdict = VERDICT_NONE
    elif not pass_mismatch:
        verdict = VERDICT_CANDIDATE
    else:
        verdict = VERDICT_INCONCLUSIVE

    return CertificateRecord(lam=float(lam), v0=v0, v0p=v0p, v0_norm=v0_norm,
                             v0p_norm=v0p_norm, u_positive=u_positive,
                             v_signed=v_signed, mismatch=mismatch,
                             c_grow_signed=c_grow_signed, fit_residual=exp.residual,
                             verdict=verdict, at_threshold=thr, method=method_name)


def _certify_potential(pm: PotentialMatrix, lam: float,
                       thresholds: Thresholds | None = None,
                       method: str = "reflect") -> CertificateRecord:
    """Core certificate at one energy on a prebuilt potential."""
    th = thresholds or Thresholds()
    mu = pm.mu
    if abs(lam) < mu * (1.0 - 1e-12):
        raise DomainError(f"|lambda| = {abs(lam)} lies inside the spectral gap (-{mu}, {mu})")
    if lam >= 0 or method == "direct":
        sol = _sweep_decaying(pm, lam, rtol=CERT_SWEEP_RTOL)
        flip = False
    else:
        sol = _sweep_decaying(pm, -lam, rtol=CERT_SWEEP_RTOL)
        flip = True
    method_name = "direct" if (lam < 0 and method == "direct") else "reflect"
    return _score_solution(pm, sol, lam, th, flip, method_name)


def certify_lambda(gs: GroundState, nl: Nonlinearity, lam: float,
                   thresholds: Thresholds | None = None,
                   method: str = "reflect") -> CertificateRecord:
    """Certificate record at one energy of the essential spectrum."""
    return _certify_potential(potential_V(gs, nl), lam, thresholds, method)


def reflect_spectrum(obj):
    """Map objects at energy lambda to their counterparts at -lambda.

    Uses the exact conjugation S H S = -H with S(f, g) = (g, f): solutions
    get their components swapped; certificate records keep their witnesses
    with v -> -v.
    """
    if isinstance(obj, JostSolution):
        mode = replace(obj.mode, lam=-obj.mode.lam, channel=1 - obj.mode.channel)
        return replace(obj, lam=-obj.lam, f=obj.g, g=obj.f, fp=obj.gp, gp=obj.fp,
                       mode=mode)
    if isinstance(obj, CertificateRecord):
        return replace(obj, lam=-obj.lam, v0=-obj.v0, v0p=-obj.v0p)
    raise DomainError(f"cannot reflect object of type {type(obj).__name__}")


@dataclass
class ScanReport:
    """Certificates over an energy grid plus everything needed to rerun them."""

    mu: float
    lambdas: list[float]
    records: list[CertificateRecord]
    ground_meta: dict
    nonlinearity_meta: dict
    thresholds: Thresholds
    tool_version: str = _tool_version
    config_hash: str | None = None
    timestamp: str | None = field(default=None)

    def summary(self) -> dict:
        ok = [r for r in self.records if r.error is None]
        verdicts = {}
        for r in self.records:
            verdicts[r.verdict] = verdicts.get(r.verdict, 0) + 1
        return {
            "n_records": len(self.records),
            "verdict_counts": verdicts,
            "min_v0_norm": min((min(r.v0_norm, r.v0p_norm) for r in ok), default=float("nan")),
            "min_mismatch": min((r.mismatch for r in ok), default=float("nan")),
        }

    def to_json_dict(self, include_timestamp: bool = False) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "solispec", "version": self.tool_version},
            "config_hash": self.config_hash,
            "mu": self.mu,
            "ground_state": self.ground_meta,
            "nonlinearity": self.nonlinearity_meta,
            "thresholds": self.thresholds.to_dict(),
            "lambda_grid": {"values": list(self.lambdas)},
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary(),
            "timestamp": self.timestamp if include_timestamp else None,
        }

    def to_json(self, include_timestamp: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_timestamp), indent=2, sort_keys=True)

    def csv_rows(self):
        yield ("lambda", "v0", "v0p", "mismatch", "verdict")
        for r in self.records:
            yield (repr(r.lam), repr(r.v0), repr(r.v0p), repr(r.mismatch), r.verdict)


def _scan_one(args):
    pm, lam, th = args
    try:
        return _certify_potential(pm, lam, th)
    except SolispecError as exc:
        return _error_record(lam, f"{type(exc).__name__}: {exc}")


def _ground_meta(gs: GroundState) -> dict:
    return {"mu": gs.mu, "R": gs.R, "h": gs.h, "shoot_value": gs.shoot_value,
            "c0": gs.c0, "rate": gs.rate, "x_replace": gs.x_replace,
            "first_integral_max": gs.first_integral_max}


def scan_embedded(gs: GroundState, nl: Nonlinearity, lambdas,
                  thresholds: Thresholds | None = None,
                  workers: int = 1) -> ScanReport:
    """Certify every energy of a strictly increasing grid in the essential spectrum.

    Per-energy failures become inconclusive records instead of aborting the
    scan. Records come back sorted by energy regardless of worker count, so
    reports are deterministic.
    """
    th = thresholds or Thresholds()
    lams = [float(v) for v in np.asarray(lambdas, dtype=float)]
    if len(lams) == 0:
        raise ConfigurationError("empty lambda grid")
    if np.any(np.diff(lams) <= 0):
        raise ConfigurationError("lambda grid must be strictly increasing")
    mu = gs.mu
    for lam in lams:
        if abs(lam) < mu * (1.0 - 1e-12):
            raise ConfigurationError(
                f"lambda = {lam} lies inside the spectral gap (-{mu}, {mu})")
    pm = potential_V(gs, nl)
    jobs = [(pm, lam, th) for lam in lams]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_scan_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_scan_one(j) for j in jobs]
    return ScanReport(mu=mu, lambdas=lams, records=records,
                      ground_meta=_ground_meta(gs),
                      nonlinearity_meta=nl.to_config(), thresholds=th,
                      timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())


def sech_well_levels(mu: float, depth: float) -> list[float]:
    """Energies lambda of (d2/dx2 - mu + depth*sech^2) f = lambda f with lambda >= mu.

    The sech^2 well has the classical closed-form bound states
    E_n = -(s - n)^2 with s = (-1 + sqrt(1 + 4*depth)) / 2, so the embedded
    energies of the decoupled matrix operator are lambda_n = (s - n)^2 - mu.
    """
    if depth <= 0:
        return []
    s = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * depth))
    levels = []
    n = 0
    while s - n > 0:
        lam = (s - n) ** 2 - mu
        if lam >= mu:
            levels.append(lam)
        n += 1
    return sorted(levels, reverse=True)


def control_scan(mu: float, well_depth: float, lambdas,
                 R: float | None = None, h: float | None = None,
                 thresholds: Thresholds | None = None) -> ScanReport:
    """Run the certificate machinery on the decoupled sech^2-well operator."""
    th = thresholds or Thresholds()
    pm = decoupled_well_potential(mu, well_depth, R=R, h=h)
    lams = [float(v) for v in np.asarray(lambdas, dtype=float)]
    if len(lams) == 0:
        raise ConfigurationError("empty lambda grid")
    if np.any(np.diff(lams) <= 0):
        raise ConfigurationError("lambda grid must be strictly increasing")
    records = [_scan_one((pm, lam, th)) for lam in lams]
    return ScanReport(mu=mu, lambdas=lams, records=records,
                      ground_meta={"mu": mu, "R": pm.R, "h": pm.h,
                                   "potential": pm.provenance},
                      nonlinearity_meta={"family": "none (decoupled control)"},
                      thresholds=th,
                      timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())


def negative_control(mu: float, well_depth: float,
                     R: float | None = None, h: float | None = None,
                     thresholds: Thresholds | None = None) -> CertificateRecord:
    """Locate the genuine embedded eigenvalue of the decoupled control operator.

    Scans the predicted neighborhood for a sign change of the growing-mode
    coefficient, refines the root by bisection, and returns the certificate
    there; its verdict must be embedded-candidate. Raises ConfigurationError
    when the well is too shallow to push a bound state into the essential
    spectrum (the closed form requires depth >= sqrt(2 mu) (sqrt(2 mu)+1)).
    """
    th = thresholds or Thresholds()
    levels = sech_well_levels(mu, well_depth)
    if not levels:
        s2 = math.sqrt(2.0 * mu)
        raise ConfigurationError(
            f"well depth {well_depth} puts no bound state at or beyond lambda = mu; "
            f"need depth >= {s2 * (s2 + 1.0):.4f} for mu = {mu}")
    lam0 = levels[0]
    pm = decoupled_well_potential(mu, well_depth, R=R, h=h)

    def grow_coeff(lam: float) -> float:
        return _certify_potential(pm, lam, th).c_grow_signed

    lo = max(mu * (1.0 + 1e-9), lam0 - 0.4)
    hi = lam0 + 0.4
    grid = np.linspace(lo, hi, 17)
    vals = [grow_coeff(l) for l in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        raise ConfigurationError(
            f"no sign change of the growing-mode coefficient near the predicted "
            f"embedded energy {lam0:.4f}; control detection failed")
    lam_star = brentq(grow_coeff, *bracket, xtol=1e-10, rtol=1e-15)
    return _certify_potential(pm, float(lam_star), th)
