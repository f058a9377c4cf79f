"""Dressed thermodynamic observables on the Fermi segment [-q, q].

Everything is driven by one Nystrom discretization of the convolution
operator with kernel K(.|zeta); the dressed energy, momentum derivative,
charge and phases are different driving terms against the same LU-factored
matrix. Off-segment (including complex) values come from the defining
equations themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import cos, floor, pi, sin
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .cache import SolveCache
from .errors import (
    BracketError,
    ConsistencyError,
    InvalidStringError,
    PoleProximityError,
    SolverError,
    ValidationError,
)
from .kernels import (
    KernelParams,
    bare_phase_1,
    kernel_k,
    kernel_k_d1,
    kernel_k_d2,
    string_combinatorics,
    w_hat,
)
from .quadrature import DEFAULT_ORDER, GridFunction, find_root_bracketed, gauss_legendre

EXTENSION_POLE_GUARD = 1e-4


def h_critical(J: float, zeta: float) -> float:
    """Upper critical field of the massless phase."""
    return 8.0 * J * cos(zeta / 2) ** 2


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical inputs; exactly one of h or q must be given."""

    J: float
    zeta: float
    h: float | None = None
    q: float | None = None
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.J <= 0:
            raise ValidationError(f"J must be positive, got {self.J}")
        if not (0 < self.zeta < pi):
            raise ValidationError(f"zeta must lie in (0, pi), got {self.zeta}")
        if (self.h is None) == (self.q is None):
            raise ValidationError("exactly one of h or q must be specified")
        if self.h is not None and not (0 < self.h < h_critical(self.J, self.zeta)):
            raise ValidationError(
                f"h must lie in (0, h_c) with h_c = {h_critical(self.J, self.zeta)}"
            )
        if self.q is not None and self.q <= 0:
            raise ValidationError(f"q must be positive, got {self.q}")
        if self.order < 2:
            raise ValidationError("order must be >= 2")
        KernelParams(zeta=self.zeta)  # near-rational warning


def _im_dist_to_lines(im: float, etas) -> float:
    """Distance of an imaginary part to the lines {+-eta_hat + pi k}."""
    best = math.inf
    for eta in etas:
        ehat = eta - pi * floor(eta / pi)
        for s in (1.0, -1.0):
            d = im - s * ehat
            d = abs(d - pi * round(d / pi))
            best = min(best, d)
    return best


class _Discretization:
    """Shared Nystrom data at a given (zeta, q, order)."""

    def __init__(self, zeta: float, Q: float, order: int):
        self.zeta = zeta
        self.Q = Q
        self.quad = gauss_legendre(order, -Q, Q)
        x = self.quad.nodes
        kmat = kernel_k(x[:, None] - x[None, :], zeta)
        self.a_mat = np.eye(order) + kmat * self.quad.weights[None, :]
        cond = np.linalg.cond(self.a_mat, 1)
        if not np.isfinite(cond) or cond > 1e12:
            raise SolverError(f"dressed Nystrom matrix ill-conditioned: {cond:.3e}")
        self.lu = lu_factor(self.a_mat)

    def solve(self, g: np.ndarray) -> np.ndarray:
        f = lu_solve(self.lu, g)
        f = f + lu_solve(self.lu, g - self.a_mat @ f)
        resid = np.max(np.abs(self.a_mat @ f - g))
        if resid > 1e-10 * max(1.0, np.max(np.abs(g))):
            raise SolverError(f"Nystrom residual {resid:.3e} too large")
        return f

    def grid_function(self, values, driving: Callable, driving_id: str) -> GridFunction:
        zeta = self.zeta
        return GridFunction(
            quad=self.quad,
            values=values,
            driving=driving,
            kernel=lambda l, m: kernel_k(l - m, zeta),
            driving_id=driving_id,
            kernel_id=f"K(zeta={zeta:.17g})",
        )


def _solve_pair(zeta: float, Q: float, J: float, order: int):
    """Solve the unit-driving (charge-type) and K-driving equations at once."""
    disc = _Discretization(zeta, Q, order)
    x = disc.quad.nodes
    z_vals = disc.solve(np.ones(order))
    e_vals = disc.solve(np.asarray(kernel_k(x, zeta / 2), dtype=float))
    return disc, z_vals, e_vals


def _endpoint_value(disc: _Discretization, values, driving_at_q) -> float:
    """Natural Nystrom extension at lam = Q."""
    krow = kernel_k(disc.Q - disc.quad.nodes, disc.zeta)
    return float(driving_at_q - np.sum(disc.quad.weights * krow * values))


class DressedSet:
    """Solved dressed quantities at fixed (J, zeta, q, h, order)."""

    def __init__(self, params: ModelParams, cache: SolveCache | None = None):
        self.params = params
        self.cache = cache
        J, zeta, order = params.J, params.zeta, params.order
        c = 4 * pi * J * sin(zeta)

        if params.q is not None:
            q = float(params.q)
            disc, z_vals, e_vals = _solve_pair(zeta, q, J, order)
            zq = _endpoint_value(disc, z_vals, 1.0)
            eq = _endpoint_value(disc, e_vals, kernel_k(q, zeta / 2))
            h = c * eq / zq
            hc = h_critical(J, zeta)
            if not (0 < h < hc):
                raise ValidationError(
                    f"q={q} corresponds to h={h} outside (0, h_c={hc})"
                )
        else:
            h = float(params.h)
            q = self._find_q(J, zeta, h, order, c)
            disc, z_vals, e_vals = _solve_pair(zeta, q, J, order)

        self.J, self.zeta, self.q, self.h = J, zeta, q, h
        self.order = order
        self.disc = disc
        self.quad = disc.quad

        self.Z = disc.grid_function(z_vals, lambda l: np.ones_like(np.asarray(l)), "unit")
        eps_vals = h * z_vals - c * e_vals
        self.eps1 = disc.grid_function(
            eps_vals, lambda l: h - c * kernel_k(l, zeta / 2), "dressed-energy"
        )
        p1p_vals = 2 * pi * e_vals
        self.p1prime = disc.grid_function(
            p1p_vals, lambda l: 2 * pi * kernel_k(l, zeta / 2), "momentum-derivative"
        )

        self._phase_cache: dict = {}
        self._theta_seg1_cache: dict = {}
        self.p_F = self._compute_p1(q)

        # positivity checks demanded of every solved set
        nodes = self.quad.nodes
        if np.any(p1p_vals <= 0):
            raise ConsistencyError("p'_1 not positive on the Fermi segment")
        end_eps = abs(self.eps1(q))
        if end_eps > 1e-8 * max(h, 1.0):
            raise ConsistencyError(f"eps_1(q) = {end_eps:.3e} not zero within tolerance")
        interior = nodes[np.abs(nodes) < q * 0.995]
        if np.any(self.eps1.values[np.abs(nodes) < q * 0.995] >= 0) and len(interior):
            raise ConsistencyError("eps_1 not negative inside the Fermi zone")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _find_q(J, zeta, h, order, c) -> float:
        hc = h_critical(J, zeta)
        if h >= hc:
            raise BracketError(f"h={h} >= h_c={hc}: no Fermi endpoint exists")

        def endpoint(Q):
            disc, z_vals, e_vals = _solve_pair(zeta, Q, J, order)
            zq = _endpoint_value(disc, z_vals, 1.0)
            eq = _endpoint_value(disc, e_vals, kernel_k(Q, zeta / 2))
            return h * zq - c * eq

        lo = 1e-6
        if endpoint(lo) >= 0:
            raise BracketError("endpoint dressed energy not negative at q -> 0")
        hi = 1.0
        while endpoint(hi) < 0:
            hi *= 2.0
            if hi > 64.0:
                raise BracketError(
                    f"no sign change of eps(Q|Q) up to Q=64 (h={h}, h_c={hc})"
                )
        return find_root_bracketed(endpoint, lo, hi, tol=1e-12)

    # -- pole guard ----------------------------------------------------------

    def _guard(self, lam, etas):
        # an eta with sin(2 eta) = 0 makes the kernel vanish identically: no pole
        etas = [e for e in etas if abs(sin(2 * e)) > 1e-15]
        if not etas:
            return
        ims = np.unique(np.imag(np.atleast_1d(np.asarray(lam, dtype=complex))))
        for im in ims:
            if _im_dist_to_lines(float(im), etas) < EXTENSION_POLE_GUARD:
                raise PoleProximityError(
                    f"evaluation at Im(lam)={im} within {EXTENSION_POLE_GUARD} "
                    "of a kernel pole line"
                )

    # -- dressed energies ----------------------------------------------------

    def eps_r(self, lam, r: int = 1):
        """Dressed energy of the r-string, evaluable on and off its carrier line."""
        lam = np.asarray(lam, dtype=complex)
        if r == 1:
            self._guard(lam, [self.zeta])
            return self.eps1(lam)
        etas = [self.zeta * (r + 1) / 2, self.zeta * (r - 1) / 2]
        self._guard(lam, etas)
        c = 4 * pi * self.J * sin(self.zeta)
        conv = self._convolve_kernel_r(lam, r, kernel_k, self.eps1.values)
        return r * self.h - c * kernel_k(lam, r * self.zeta / 2) - conv

    def eps_r_d1(self, lam, r: int = 1):
        c = 4 * pi * self.J * sin(self.zeta)
        if r == 1:
            self._guard(lam, [self.zeta])
            return self.eps1.derivative(
                lam,
                kernel_dx=lambda l, m: kernel_k_d1(l - m, self.zeta),
                driving_dx=lambda l: -c * kernel_k_d1(l, self.zeta / 2),
            )
        self._guard(lam, [self.zeta * (r + 1) / 2, self.zeta * (r - 1) / 2])
        conv = self._convolve_kernel_r(lam, r, kernel_k_d1, self.eps1.values)
        return -c * kernel_k_d1(lam, r * self.zeta / 2) - conv

    def eps_r_d2(self, lam, r: int = 1):
        c = 4 * pi * self.J * sin(self.zeta)
        if r == 1:
            self._guard(lam, [self.zeta])
            return self.eps1.derivative(
                lam,
                kernel_dx=lambda l, m: kernel_k_d2(l - m, self.zeta),
                driving_dx=lambda l: -c * kernel_k_d2(l, self.zeta / 2),
            )
        self._guard(lam, [self.zeta * (r + 1) / 2, self.zeta * (r - 1) / 2])
        conv = self._convolve_kernel_r(lam, r, kernel_k_d2, self.eps1.values)
        return -c * kernel_k_d2(lam, r * self.zeta / 2) - conv

    def _convolve_kernel_r(self, lam, r, kfun, values):
        """sum_j w_j K_r(lam - x_j) values_j with the requested kernel derivative."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        diff = lam[:, None] - self.quad.nodes[None, :]
        kmat = kfun(diff, self.zeta * (r + 1) / 2) + kfun(diff, self.zeta * (r - 1) / 2)
        out = kmat @ (self.quad.weights * values)
        return out if out.shape != (1,) else out[0]

    # -- dressed momenta -----------------------------------------------------

    def p_r_d1(self, lam, r: int = 1):
        """d/dlam of the dressed momentum p_r."""
        if r == 1:
            self._guard(lam, [self.zeta])
            return self.p1prime(lam)
        self._guard(lam, [self.zeta * (r + 1) / 2, self.zeta * (r - 1) / 2])
        conv = self._convolve_kernel_r(lam, r, kernel_k, self.p1prime.values)
        return 2 * pi * kernel_k(lam, r * self.zeta / 2) - conv

    def p_r_d2(self, lam, r: int = 1):
        if r == 1:
            self._guard(lam, [self.zeta])
            return self.p1prime.derivative(
                lam,
                kernel_dx=lambda l, m: kernel_k_d1(l - m, self.zeta),
                driving_dx=lambda l: 2 * pi * kernel_k_d1(l, self.zeta / 2),
            )
        self._guard(lam, [self.zeta * (r + 1) / 2, self.zeta * (r - 1) / 2])
        conv = self._convolve_kernel_r(lam, r, kernel_k_d1, self.p1prime.values)
        return 2 * pi * kernel_k_d1(lam, r * self.zeta / 2) - conv

    @staticmethod
    def _reduce_periodic(lam: complex) -> complex:
        """Shift Im(lam) into (-pi/2, pi/2] by the i pi periodicity."""
        k = math.ceil((lam.imag - pi / 2) / pi - 1e-15)
        return complex(lam.real, lam.imag - k * pi)

    def _theta_complex(self, z: complex, eta: float) -> complex:
        """theta(z|eta) with the vertical-segment value cached per (Im z, eta)."""
        if abs(z.imag) < 1e-14:
            return complex(bare_phase_1(z.real, eta))
        key = (round(z.imag, 13), round(eta, 13))
        seg1 = self._theta_seg1_cache.get(key)
        if seg1 is None:
            seg1 = bare_phase_1(1j * z.imag, eta, order=96, richardson=True)
            self._theta_seg1_cache[key] = seg1
        if abs(z.real) < 1e-14:
            return complex(seg1)
        from .kernels import _phase_segment  # same pole-aware segment rule

        horiz = _phase_segment(1j * z.imag, z, eta, 96, 1e-6)
        horiz2 = _phase_segment(1j * z.imag, z, eta, 96, 2e-6)
        return complex(seg1) + (2 * horiz - horiz2)

    def _theta_r(self, z: complex, r: int) -> complex:
        val = self._theta_complex(z, self.zeta * (r + 1) / 2)
        if r >= 2:
            val = val + self._theta_complex(z, self.zeta * (r - 1) / 2)
        return val

    def _compute_p1(self, lam_real: float) -> float:
        diffs = lam_real - self.quad.nodes
        theta_vals = 2 * np.arctan(
            np.tanh(diffs) / math.tan(w_hat(self.zeta))
        )  # theta(.|zeta) on the real line
        conv = np.sum(self.quad.weights * theta_vals * self.p1prime.values) / (2 * pi)
        return float(bare_phase_1(lam_real, self.zeta / 2)) - conv

    def p_r(self, lam, r: int = 1):
        """Dressed momentum p_r on (a neighbourhood of) the carrier lines."""
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
        out = np.empty(lam_arr.shape, dtype=complex)
        for i, z in enumerate(lam_arr):
            out[i] = self._p_r_scalar(complex(z), r)
        if np.asarray(lam).ndim == 0:
            val = complex(out[0])
            return val.real if val.imag == 0 else val
        return out

    def _p_r_scalar(self, lam: complex, r: int) -> complex:
        z = self._reduce_periodic(lam)
        sc = string_combinatorics(r, self.zeta)
        if abs(z.imag) < 1e-14 and r == 1:
            return complex(self._compute_p1(z.real))

        if abs(z.imag) < 1e-14:
            x = z.real - self.quad.nodes
            ehat_hi = w_hat(self.zeta * (r + 1) / 2)
            ehat_lo = w_hat(self.zeta * (r - 1) / 2)
            theta_vals = np.zeros(len(x))
            for ehat in (ehat_hi, ehat_lo):
                if ehat > 1e-12 and pi - ehat > 1e-12:
                    theta_vals = theta_vals + 2 * np.arctan(np.tanh(x) / math.tan(ehat))
        else:
            theta_vals = np.array(
                [self._theta_r(complex(z - mu), r) for mu in self.quad.nodes]
            )
        conv = np.sum(self.quad.weights * theta_vals * self.p1prime.values) / (2 * pi)
        lead = self._theta_complex(z, r * self.zeta / 2)

        corr = pi * sc.ell_r - self.p_F * sc.m_r
        for sigma in (1, -1):
            if sigma == -1 and r == 1:
                continue
            what = w_hat((r + sigma) * self.zeta / 2)
            if abs(what - pi / 2) < 1e-10:
                raise ValidationError(
                    f"hat reduction of (r+sigma) zeta / 2 equals pi/2 exactly "
                    f"(r={r}, sigma={sigma}); the momentum display is ambiguous here"
                )
            indicator = pi / 2 >= abs(z.imag) >= min(what, pi - what)
            if indicator:
                corr -= 2 * self.p_F * math.copysign(1.0, 1 - (2 / pi) * what)
        return lead - conv + corr

    # -- dressed phase and charge -------------------------------------------

    def dressed_phase(self, r: int, mu: complex) -> GridFunction:
        """phi_r(., mu) as a GridFunction on [-q, q] (complex extension valid)."""
        key = (r, round(complex(mu).real, 12), round(complex(mu).imag, 12))
        gf = self._phase_cache.get(key)
        if gf is not None:
            return gf
        sc = string_combinatorics(r, self.zeta)
        mu = complex(mu)

        nodes = self.quad.nodes
        if abs(mu.imag) < 1e-14:
            x = nodes - mu.real
            driving_vals = np.zeros(len(x))
            for sgn_r in (r + 1, r - 1):
                ehat = w_hat(self.zeta * sgn_r / 2)
                if ehat > 1e-12 and pi - ehat > 1e-12:
                    driving_vals = driving_vals + 2 * np.arctan(
                        np.tanh(x) / math.tan(ehat)
                    )
            driving_vals = driving_vals / (2 * pi) + sc.m_r / 2
        else:
            driving_vals = (
                np.array([self._theta_r(complex(x - mu), r) for x in nodes]) / (2 * pi)
                + sc.m_r / 2
            )

        ckey = None
        if self.cache is not None:
            ckey = SolveCache.key(
                "dressed-phase",
                zeta=self.zeta,
                q=self.q,
                J=self.J,
                order=self.order,
                r=r,
                mu=mu,
            )
            hit = self.cache.load(ckey)
            if hit is not None:
                _, _, _, values = hit
                gf = self._phase_grid_function(values, r, mu)
                self._phase_cache[key] = gf
                return gf

        if np.iscomplexobj(driving_vals) and np.max(np.abs(driving_vals.imag)) > 0:
            values = self.disc.solve(driving_vals.real) + 1j * self.disc.solve(
                driving_vals.imag
            )
        else:
            values = self.disc.solve(np.asarray(driving_vals, dtype=float))

        gf = self._phase_grid_function(values, r, mu)
        self._phase_cache[key] = gf
        if self.cache is not None:
            self.cache.store(
                ckey,
                {"kind": "dressed-phase", "r": r, "order": self.order},
                self.quad.nodes,
                self.quad.weights,
                values,
            )
        return gf

    def _phase_grid_function(self, values, r, mu) -> GridFunction:
        sc = string_combinatorics(r, self.zeta)
        ds = self

        def driving(lam):
            lam = np.atleast_1d(np.asarray(lam, dtype=complex))
            vals = np.array([ds._theta_r(complex(x - mu), r) for x in lam]) / (
                2 * pi
            ) + sc.m_r / 2
            return vals if vals.shape != (1,) else vals[0]

        return self.disc.grid_function(values, driving, f"phi_{r}(mu={mu})")

    def phi(self, r: int, lam, mu) -> complex:
        """phi_r(lam, mu) through the cached grid function."""
        gf = self.dressed_phase(r, mu)
        val = gf(lam)
        return val

    def dressed_charge(self) -> GridFunction:
        return self.Z

    def magnetization_density(self) -> float:
        """D = p_F / pi, cross-checked against the root-density integral."""
        d1 = self.p_F / pi
        d2 = float(np.sum(self.quad.weights * self.p1prime.values)) / (2 * pi)
        if abs(d1 - d2) > 1e-10:
            raise ConsistencyError(
                f"magnetization routes disagree: p_F/pi={d1!r}, int rho={d2!r}"
            )
        return d1


def solve_dressed_set(params: ModelParams, cache: SolveCache | None = None) -> DressedSet:
    return DressedSet(params, cache=cache)


def solve_dressed_energy(params: ModelParams, Q: float) -> GridFunction:
    """Solve the energy equation on [-Q, Q] at the given field (h mode only)."""
    if params.h is None:
        raise ValidationError("solve_dressed_energy requires the field h")
    if Q <= 0:
        raise ValidationError(f"Q must be positive, got {Q}")
    h, J, zeta = params.h, params.J, params.zeta
    c = 4 * pi * J * sin(zeta)
    disc = _Discretization(zeta, Q, params.order)
    driving = lambda l: h - c * kernel_k(l, zeta / 2)
    vals = disc.solve(np.asarray(driving(disc.quad.nodes), dtype=float))
    return disc.grid_function(vals, driving, "dressed-energy")


def find_fermi_endpoint(params: ModelParams, cache: SolveCache | None = None) -> DressedSet:
    """Resolve the Fermi endpoint (either input mode) and return the solved set."""
    return DressedSet(params, cache=cache)


def _require_string(ds: DressedSet, r: int):
    if r >= 2:
        from .strings import string_exists

        spec = string_exists(r, ds.zeta)
        if not spec.exists:
            raise InvalidStringError(f"no {r}-string exists at zeta = {ds.zeta}")


def dressed_energy_r(ds: DressedSet, r: int) -> Callable:
    _require_string(ds, r)
    return lambda lam: ds.eps_r(lam, r)


def dressed_momentum(ds: DressedSet, r: int) -> tuple[Callable, float]:
    _require_string(ds, r)
    return (lambda lam: ds.p_r(lam, r)), ds.p_F


def dressed_phase(ds: DressedSet, r: int, mu) -> GridFunction:
    return ds.dressed_phase(r, mu)


def dressed_charge(ds: DressedSet) -> GridFunction:
    return ds.dressed_charge()


def magnetization_density(ds: DressedSet) -> float:
    return ds.magnetization_density()
