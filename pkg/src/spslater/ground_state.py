"""Radial ground state of -ΔU + U = U^p on R^3 and its linearization data.

The unique positive radial solution U satisfies

    U'' + (2/r) U' - U + U^p = 0,   U'(0) = 0,   U(r) -> 0,

and decays like U(r) ~ c e^{-r}/r.  We locate U(0) by bisection on a
shooting parameter (overshoot = sign change of U, undershoot = U' turning
positive below the plateau U = 1), integrate with a tight-tolerance
adaptive RK45, fit the decay constant on a trailing window, and replace
the unavoidable shooting contamination beyond the fit window with the
analytic tail.  All radial quadrature is composite Simpson with weight
4*pi*r^2 plus closed-form tail corrections beyond the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import (
    BracketNotFoundError,
    SpectralSolverFailureError,
    ToleranceNotReachedError,
    ValidationError,
    WindowNonconvergentError,
)

__all__ = [
    "RadialProfile",
    "RadialTestFunction",
    "NondegeneracyReport",
    "solve_ground_state",
    "fit_decay",
    "quadratic_form",
    "check_nondegeneracy",
    "default_radial_grid",
    "save_profile",
    "load_profile",
]

# Integrator tolerances.  The growing e^{+r} mode amplifies any local error
# by e^{2r} relative to the decaying solution, so the tail window near
# r ~ 13 is only clean if the integration is pushed close to machine
# precision (scipy's floor for rtol is 100*eps).
_IVP_RTOL = 3e-14
_IVP_ATOL = 1e-16

_TAIL_THRESHOLD = 1e-6   # tail replacement once U < threshold * U(0)
_FIT_WINDOW = 2.0        # width (in r) of the decay-fit window
_FIT_WINDOW_TOL = 0.01   # max relative variation of U*r*e^r across the window


def default_radial_grid(r_max: float, h0: float = 1e-3, h1: float = 1e-2) -> np.ndarray:
    """Graded grid: step h0 at the origin growing linearly to h1 at r_max."""
    rs = [0.0]
    r = 0.0
    while r < r_max:
        h = h0 + (h1 - h0) * (r / r_max)
        r = min(r + h, r_max)
        rs.append(r)
    return np.asarray(rs)


@dataclass
class RadialProfile:
    """The ground state U on a radial grid with an analytic exponential tail.

    Beyond ``r_match`` the stored values are the tail c e^{-r}/r (with the
    matching derivative), so evaluation and cross-correlation integrals at
    large radii never touch contaminated shooting data.
    """

    p: float
    r_grid: np.ndarray
    u_values: np.ndarray
    du_values: np.ndarray
    decay_constant: float
    r_match: float

    _u_spline: CubicSpline = field(init=False, repr=False, compare=False)
    _du_spline: CubicSpline = field(init=False, repr=False, compare=False)
    _dur_spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.u_values = np.asarray(self.u_values, dtype=float)
        self.du_values = np.asarray(self.du_values, dtype=float)
        self._u_spline = CubicSpline(self.r_grid, self.u_values)
        self._du_spline = CubicSpline(self.r_grid, self.du_values)
        # U'(r)/r extends smoothly to r=0 with value U''(0) = (U0 - U0^p)/3.
        u0 = self.u_values[0]
        g0 = (u0 - u0 ** self.p) / 3.0
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(self.r_grid > 0.0, self.du_values / np.where(self.r_grid > 0, self.r_grid, 1.0), g0)
        g[0] = g0
        self._dur_spline = CubicSpline(self.r_grid, g)

    # -- evaluation ---------------------------------------------------------

    def tail_u(self, r):
        r = np.asarray(r, dtype=float)
        return self.decay_constant * np.exp(-r) / np.maximum(r, 1e-300)

    def tail_du(self, r):
        r = np.asarray(r, dtype=float)
        rr = np.maximum(r, 1e-300)
        return -self.decay_constant * np.exp(-r) * (1.0 / rr + 1.0 / rr**2)

    def u(self, r):
        """U(|x|) for scalar or array radii (spline inside, tail outside)."""
        r = np.asarray(r, dtype=float)
        inside = r <= self.r_match
        out = np.empty_like(r)
        out[inside] = self._u_spline(r[inside])
        out[~inside] = self.tail_u(r[~inside])
        return out

    def du(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.r_match
        out = np.empty_like(r)
        out[inside] = self._du_spline(r[inside])
        out[~inside] = self.tail_du(r[~inside])
        return out

    def du_over_r(self, r):
        """U'(r)/r, finite at the origin; needed for Cartesian derivatives."""
        r = np.asarray(r, dtype=float)
        inside = r <= self.r_match
        out = np.empty_like(r)
        out[inside] = self._dur_spline(r[inside])
        rout = r[~inside]
        out[~inside] = self.tail_du(rout) / np.maximum(rout, 1e-300)
        return out

    @property
    def r_max(self) -> float:
        return float(self.r_grid[-1])

    @property
    def u0(self) -> float:
        return float(self.u_values[0])

    # -- radial quadrature ---------------------------------------------------

    def volume_integral(self, values: np.ndarray, tail) -> float:
        """∫ f dx = 4π ∫ f(r) r^2 dr for node values plus a tail integrand.

        ``tail`` is a callable f(r) valid for r >= r_max (or None to drop
        the tail correction).
        """
        core = 4.0 * np.pi * simpson(values * self.r_grid**2, x=self.r_grid)
        if tail is None:
            return core
        extra, _ = quad(lambda r: 4.0 * np.pi * r * r * tail(r), self.r_max, np.inf)
        return core + extra

    def power_mass(self, q: float) -> float:
        """∫ U^q dx."""
        return self.volume_integral(self.u_values**q, lambda r: self.tail_u(r) ** q)

    def mass(self) -> float:
        """∫ U^2 dx."""
        return self.power_mass(2.0)

    def grad_norm_sq(self) -> float:
        """∫ |∇U|^2 dx."""
        return self.volume_integral(self.du_values**2, lambda r: self.tail_du(r) ** 2)

    def h1_norm_sq(self) -> float:
        """∫ (|∇U|^2 + U^2) dx."""
        return self.grad_norm_sq() + self.mass()

    # -- diagnostics ---------------------------------------------------------

    def identity_residuals(self) -> dict:
        """Integral identities forced by the equation; solver-correctness oracles.

        Multiplying the equation by U and integrating by parts forces
        ∫(|∇U|^2 + U^2) = ∫U^{p+1}; the dilation (Pohozaev) identity forces
        (1/2)∫|∇U|^2 + (3/2)∫U^2 = (3/(p+1))∫U^{p+1}.
        """
        grad2 = self.grad_norm_sq()
        m = self.mass()
        pw = self.power_mass(self.p + 1.0)
        mult = (grad2 + m - pw) / pw
        poho = (0.5 * grad2 + 1.5 * m - 3.0 * pw / (self.p + 1.0)) / pw
        return {"multiplication": mult, "pohozaev": poho}

    def validate(self, ode_tol: float = 1e-5, tail_tol: float = 1e-2) -> None:
        """Check the structural invariants; raise ValidationError on failure.

        The ODE residual is measured with spline second derivatives, so the
        usable tolerance is spline-limited rather than integrator-limited.
        """
        u, du, r = self.u_values, self.du_values, self.r_grid
        if not (np.all(u > 0.0) and np.all(np.diff(u) < 0.0)):
            raise ValidationError("u_values must be positive and strictly decreasing")
        if not (du[0] == 0.0 and np.all(du[1:] < 0.0)):
            raise ValidationError("du_values must vanish at r=0 and be negative beyond")
        mask = (r > 0.05) & (r < self.r_match)
        d2 = self._du_spline.derivative()(r[mask])
        res = d2 + 2.0 * du[mask] / r[mask] - u[mask] + u[mask] ** self.p
        if np.max(np.abs(res)) > ode_tol * self.u0:
            raise ValidationError(f"ODE residual {np.max(np.abs(res)):.3e} above tolerance")
        um = float(self._u_spline(self.r_match))
        rel = abs(um - float(self.tail_u(self.r_match))) / um
        if rel > tail_tol:
            raise ValidationError(f"tail mismatch {rel:.3e} at r_match")


# -- shooting -----------------------------------------------------------------


def _rhs(p):
    def f(r, y):
        u, v = y
        return (v, u - np.sign(u) * np.abs(u) ** p - 2.0 * v / r)
    return f


def _classify(a: float, p: float, r_max: float):
    """Integrate from the origin; 'over' = U crosses zero, 'under' = U turns
    back up below the plateau, None = indistinguishable within r_max."""
    r0 = 1e-6
    u0 = a + (a - a**p) / 6.0 * r0**2
    v0 = (a - a**p) / 3.0 * r0

    def ev_cross(r, y):
        return y[0]

    ev_cross.terminal = True
    ev_cross.direction = -1.0

    def ev_turn(r, y):
        return y[1]

    ev_turn.terminal = True
    ev_turn.direction = 1.0

    sol = solve_ivp(_rhs(p), (r0, r_max), (u0, v0), method="RK45",
                    rtol=_IVP_RTOL, atol=_IVP_ATOL, events=(ev_cross, ev_turn),
                    dense_output=False)
    if sol.t_events[0].size:
        return "over"
    if sol.t_events[1].size:
        return "under"
    return None


def solve_ground_state(p: float, r_max: float = 25.0, tol: float = 1e-10,
                       bracket: tuple = (0.1, 50.0), grid: np.ndarray | None = None,
                       max_iter: int = 200) -> RadialProfile:
    """Shoot for the positive radial ground state and package it with its tail.

    ``tol`` is the relative bisection tolerance on U(0).  Short domains
    (r_max well below ~20) cannot pin the tail and raise
    WindowNonconvergentError from the decay fit.
    """
    if not 1.0 < p < 5.0:
        raise ValidationError(f"exponent p={p} outside (1, 5)")
    if r_max < 6.0:
        raise ValidationError("r_max too small to contain the bump core")
    if tol <= 0.0:
        raise ValidationError("tol must be positive")

    lo, hi = bracket
    c_lo = _classify(lo, p, r_max)
    c_hi = _classify(hi, p, r_max)
    if c_lo != "under" or c_hi != "over":
        raise BracketNotFoundError(
            f"bracket {bracket} does not straddle the ground state "
            f"(classified {c_lo!r}/{c_hi!r})")

    converged = False
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * mid:
            converged = True
            break
        c = _classify(mid, p, r_max)
        if c == "over":
            hi = mid
        elif c == "under":
            lo = mid
        else:
            # Indistinguishable within r_max: domain-limited resolution floor.
            converged = True
            break
    else:
        raise ToleranceNotReachedError(
            f"bisection did not reach tol={tol} in {max_iter} iterations")
    if not converged:  # pragma: no cover - loop above always breaks or raises
        raise ToleranceNotReachedError("bisection failed to converge")

    a = 0.5 * (lo + hi)
    if grid is None:
        grid = default_radial_grid(r_max)
    r0 = 1e-6
    u0 = a + (a - a**p) / 6.0 * r0**2
    v0 = (a - a**p) / 3.0 * r0

    def ev_cross(r, y):
        return y[0]

    ev_cross.terminal = True
    ev_cross.direction = -1.0

    def ev_turn(r, y):
        return y[1]

    ev_turn.terminal = True
    ev_turn.direction = 1.0

    interior = grid[(grid > r0) & (grid <= r_max)]
    sol = solve_ivp(_rhs(p), (r0, r_max), (u0, v0), method="RK45",
                    rtol=_IVP_RTOL, atol=_IVP_ATOL, t_eval=interior,
                    events=(ev_cross, ev_turn))
    n_ok = sol.t.size
    r_raw = np.concatenate(([0.0], sol.t))
    u_raw = np.concatenate(([a], sol.y[0]))
    du_raw = np.concatenate(([0.0], sol.y[1]))

    c_u, r_end = _fit_tail_window(r_raw, u_raw, r_raw[-1])

    u = np.empty_like(grid)
    du = np.empty_like(grid)
    u[: n_ok + 1] = u_raw
    du[: n_ok + 1] = du_raw
    profile = RadialProfile(p=p, r_grid=grid, u_values=u, du_values=du,
                            decay_constant=c_u, r_match=r_end)
    outside = grid > r_end
    u[outside] = profile.tail_u(grid[outside])
    du[outside] = profile.tail_du(grid[outside])
    # Rebuild splines over the tail-replaced data.
    return RadialProfile(p=p, r_grid=grid, u_values=u, du_values=du,
                         decay_constant=c_u, r_match=r_end)


def _fit_tail_window(r: np.ndarray, u: np.ndarray, r_cap: float,
                     window: float = _FIT_WINDOW, window_tol: float = _FIT_WINDOW_TOL):
    """Fit c in U ~ c e^{-r}/r on the trailing window ending at the tail
    threshold (or the data end).  Raises if the window is not asymptotic."""
    u0 = u[0]
    below = np.nonzero(u < _TAIL_THRESHOLD * u0)[0]
    r_end = min(float(r[below[0]]), r_cap) if below.size else r_cap
    mask = (r >= r_end - window) & (r <= r_end) & (r > 0)
    if np.count_nonzero(mask) < 8:
        raise WindowNonconvergentError("decay-fit window has too few nodes")
    y = u[mask] * r[mask] * np.exp(r[mask])
    variation = (y.max() - y.min()) / y.mean()
    if not np.isfinite(variation) or variation > window_tol:
        raise WindowNonconvergentError(
            f"U*r*e^r varies by {variation:.2%} over [{r_end - window:.1f}, {r_end:.1f}] "
            f"(limit {window_tol:.0%}); tail not asymptotic")
    return float(y.mean()), r_end


def fit_decay(profile: RadialProfile, window: float = _FIT_WINDOW,
              window_tol: float = _FIT_WINDOW_TOL) -> tuple:
    """Re-extract (decay constant, U'/U at the domain end) from stored data.

    The fit window ends at min(r_match, r_max) so it always sits on raw
    (non-tail-substituted) data.
    """
    r_cap = min(profile.r_match, profile.r_max)
    c_u, _ = _fit_tail_window(profile.r_grid, profile.u_values, r_cap,
                              window=window, window_tol=window_tol)
    slope = float(profile.du_values[-1] / profile.u_values[-1])
    return c_u, slope


# -- quadratic form of the linearization --------------------------------------


@dataclass
class RadialTestFunction:
    """Test function f(r) * Y(θ,φ) in one angular sector.

    ``angular_mass`` is ∫ Y^2 dΩ (4π for the radial sector with Y=1, 4π/3 for
    Y = x_j/r, ...).
    """

    values: np.ndarray
    ell: int = 0
    angular_mass: float = 4.0 * np.pi
    derivative: np.ndarray | None = None


def quadratic_form(profile: RadialProfile, nu) -> float:
    """Second variation ∫ |∇ν|^2 + ν^2 - p U^{p-1} ν^2 of the unperturbed energy.

    Accepts a RadialTestFunction (sector representation) or any object with
    ``grid``/``values`` attributes (3D box field; U is taken centered at the
    box center).
    """
    if isinstance(nu, RadialTestFunction):
        r = profile.r_grid
        f = np.asarray(nu.values, dtype=float)
        if nu.derivative is not None:
            fp = np.asarray(nu.derivative, dtype=float)
        else:
            fp = CubicSpline(r, f)(r, 1)
        w = profile.u_values ** (profile.p - 1.0)
        cent = np.zeros_like(r)
        if nu.ell:
            cent[1:] = nu.ell * (nu.ell + 1) * (f[1:] / r[1:]) ** 2
            # f must vanish at the origin for ell >= 1; drop the 0/0 node.
        integrand = fp**2 + cent + (1.0 - profile.p * w) * f**2
        return nu.angular_mass * simpson(integrand * r**2, x=r)

    grid = getattr(nu, "grid", None)
    values = getattr(nu, "values", None)
    if grid is None or values is None:
        raise TypeError("nu must be a RadialTestFunction or a grid field")
    radii = grid.radii_from(grid.center)
    w = profile.u(radii) ** (profile.p - 1.0)
    lap = grid.apply_laplacian(values)
    return float(grid.l2_inner(values, lap + values - profile.p * w * values))


# -- spectral signature --------------------------------------------------------


@dataclass
class NondegeneracyReport:
    sector_eigenvalues: dict
    negative_count: int
    translation_eigenvalue: float
    translation_match: float
    coercivity_constant: float

    def summary(self) -> str:
        lines = [
            f"negative eigenvalues (all sectors, no multiplicity): {self.negative_count}",
            f"translation-sector bottom eigenvalue: {self.translation_eigenvalue:+.3e}",
            f"translation eigenvector vs U'(r) L2 mismatch: {self.translation_match:.3e}",
            f"coercivity constant (deflated): {self.coercivity_constant:.6f}",
        ]
        for ell, eigs in sorted(self.sector_eigenvalues.items()):
            lines.append(f"  sector l={ell}: " + ", ".join(f"{e:+.4f}" for e in eigs[:4]))
        return "\n".join(lines)


def _sector_matrix(profile: RadialProfile, ell: int, n: int, R: float):
    """Dirichlet discretization of -v'' + [l(l+1)/r^2 + 1 - p U^{p-1}] v via the
    substitution v = r f, which symmetrizes the radial operator."""
    h = R / (n + 1)
    r = h * np.arange(1, n + 1)
    w = 1.0 - profile.p * profile.u(r) ** (profile.p - 1.0)
    diag = 2.0 / h**2 + ell * (ell + 1) / r**2 + w
    off = -np.ones(n - 1) / h**2
    return r, diag, off


def check_nondegeneracy(profile: RadialProfile, ells: tuple = (0, 1, 2),
                        n: int = 2400, R: float | None = None,
                        n_eigs: int = 6) -> NondegeneracyReport:
    """Spectral decomposition of -Δ + 1 - p U^{p-1} by angular sector.

    Expected signature: one negative eigenvalue (radial sector), a zero
    eigenvalue in the l=1 sector carried by U'(r) (translations), everything
    else positive.  The coercivity constant is the bottom of the spectrum
    after deflating the U direction (l=0) and the translation modes (l=1).
    """
    if R is None:
        R = profile.r_max
    sector = {}
    try:
        for ell in ells:
            r, diag, off = _sector_matrix(profile, ell, n, R)
            vals = eigh_tridiagonal(diag, off, select="i",
                                    select_range=(0, n_eigs - 1))[0]
            sector[ell] = vals
        # Translation mode: bottom of l=1 with eigenvector compared to r U'(r).
        r, diag, off = _sector_matrix(profile, 1, n, R)
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 1))
        v = vecs[:, 0]
        ref = r * profile.du(r)
        ref = ref / np.linalg.norm(ref)
        v = v / np.linalg.norm(v) * np.sign(v @ ref)
        translation_match = float(np.linalg.norm(v - ref))

        # Coercivity: deflate U out of the radial sector (dense, coarser grid).
        nd = min(n, 800)
        rd, diagd, offd = _sector_matrix(profile, 0, nd, R)
        T = np.diag(diagd) + np.diag(offd, 1) + np.diag(offd, -1)
        vu = rd * profile.u(rd)
        vu = vu / np.linalg.norm(vu)
        shift = 10.0 * abs(diagd).max()
        Tdef = T + shift * np.outer(vu, vu)
        l0_deflated = eigh(Tdef, eigvals_only=True, subset_by_index=(0, 0))[0]
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SpectralSolverFailureError(str(exc)) from exc

    negative = int(sum(int(np.sum(v < -10.0 / n)) for v in sector.values()))
    candidates = [float(l0_deflated)]
    if 1 in sector and len(sector[1]) > 1:
        candidates.append(float(sector[1][1]))
    if 2 in sector:
        candidates.append(float(sector[2][0]))
    return NondegeneracyReport(
        sector_eigenvalues=sector,
        negative_count=negative,
        translation_eigenvalue=float(sector[1][0]) if 1 in sector else np.nan,
        translation_match=translation_match,
        coercivity_constant=min(candidates),
    )


# -- serialization --------------------------------------------------------------


def save_profile(profile: RadialProfile, path) -> None:
    """Two-column text record (r, U) with the scalar metadata in the header."""
    header = (
        f"p = {profile.p!r}\n"
        f"decay_constant = {profile.decay_constant!r}\n"
        f"r_match = {profile.r_match!r}\n"
        "columns: r U"
    )
    np.savetxt(path, np.column_stack([profile.r_grid, profile.u_values]),
               header=header)


def load_profile(path) -> RadialProfile:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            parts = line[1:].strip().split("=")
            if len(parts) == 2:
                key = parts[0].strip()
                if key in ("p", "decay_constant", "r_match"):
                    meta[key] = float(parts[1])
    data = np.loadtxt(path)
    r, u = data[:, 0], data[:, 1]
    du = CubicSpline(r, u)(r, 1)
    du[0] = 0.0
    prof = RadialProfile(p=meta["p"], r_grid=r, u_values=u, du_values=du,
                         decay_constant=meta["decay_constant"],
                         r_match=meta["r_match"])
    outside = r > prof.r_match
    du[outside] = prof.tail_du(r[outside])
    return RadialProfile(p=meta["p"], r_grid=r, u_values=u, du_values=du,
                         decay_constant=meta["decay_constant"],
                         r_match=meta["r_match"])
