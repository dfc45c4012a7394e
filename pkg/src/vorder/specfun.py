"""Gamma and Bessel J for complex arguments, principal branches throughout."""

from __future__ import annotations

import cmath
import math

from .errors import BranchError, DomainError, PrecisionError

SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 500
# |z| above this goes to the Hankel expansion instead of the power series
ASYMPTOTIC_SWITCH = 60.0
# below ASYMPTOTIC_SWITCH the series is still replaced when its cancellation
# loss exp(|z| - |Im z|) is large and the expansion is already exact
HANKEL_MIN = 15.0
CANCEL_LIMIT = 5.0


def gamma(x: float) -> float:
    """Gamma function for real ``x``; poles at non-positive integers raise."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    return math.gamma(x)


def _on_cut(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0


def principal_power(z: complex, a: float) -> complex:
    """``exp(a log z)`` with the principal logarithm.

    Raises BranchError for ``z`` on the closed negative real axis.
    """
    z = complex(z)
    if _on_cut(z):
        raise BranchError(f"{z} lies on the cut (-inf, 0]")
    if a == 0:
        return 1.0 + 0j
    if float(a).is_integer() and abs(a) <= 64:
        return z ** int(a)
    return cmath.exp(a * cmath.log(z))


def _is_integer(nu: float) -> bool:
    return float(nu).is_integer()


def _half_power(z: complex, nu: float) -> complex:
    # (z/2)^nu with the principal branch; integer orders need no cut
    w = z / 2
    if _is_integer(nu):
        return w ** int(nu)
    if w == 0:
        return 0j
    if _on_cut(w):
        raise BranchError(f"J_{nu} is undefined on the cut, z={z}")
    return cmath.exp(nu * cmath.log(w))


def bessel_j_series(nu: float, z: complex, tol: float = SERIES_TOL,
                    max_terms: int = SERIES_MAX_TERMS) -> complex:
    """Power series of J_nu(z), truncated at ``|term| <= tol * |sum|``."""
    if nu < 0:
        raise DomainError("order must be non-negative")
    z = complex(z)
    lead = _half_power(z, nu)
    if z == 0:
        return complex(1.0 if nu == 0 else 0.0)
    term = lead / math.gamma(nu + 1)
    total = term
    q = -(z / 2) ** 2
    for n in range(1, max_terms):
        term = term * q / (n * (n + nu))
        total += term
        if abs(term) <= tol * abs(total):
            return total
    raise PrecisionError(
        f"J_{nu} series did not converge in {max_terms} terms at |z|={abs(z):.3g}")


def _hankel_coeffs(nu: float, kmax: int):
    mu = 4 * nu * nu
    a = [1.0]
    for k in range(1, kmax + 1):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (k * 8))
    return a


def _hankel(nu: float, z: complex, n_terms: int | None) -> complex:
    # J_nu(z) = sqrt(2/(pi z)) * (P cos chi - Q sin chi), |arg z| < pi
    chi = z - (nu / 2 + 0.25) * math.pi
    if n_terms is None:
        a = _hankel_coeffs(nu, 80)
        p = q = 0j
        prev = math.inf
        zk = 1.0 + 0j
        for k, ak in enumerate(a):
            t = ak / zk
            if abs(t) > prev:  # asymptotic series started to diverge
                break
            sign = (-1) ** (k // 2)
            if k % 2 == 0:
                p += sign * t
            else:
                q += sign * t
            prev = abs(t)
            if prev < 1e-17 * max(abs(p), 1e-300):
                break
            zk = zk * z
    else:
        p, q = 1.0 + 0j, 0j
    ep = cmath.exp(1j * chi)
    em = cmath.exp(-1j * chi)
    val = 0.5 * (ep * (p + 1j * q) + em * (p - 1j * q))
    return cmath.sqrt(2 / (math.pi * z)) * val


def bessel_j_asymptotic(nu: float, z: complex) -> complex:
    """Leading two-exponential asymptotic form of J_nu(z).

    Written in the rotated variable ``w = i z``:
    ``e^{i nu pi/2} J_nu(z) ~ (2 pi w)^{-1/2} (e^{w} + e^{-w + (nu+1/2) pi i})``
    with ``arg w`` in ``(-pi/2, 3pi/2)``.
    """
    z = complex(z)
    if abs(z) < 10 * (1 - 1e-12):
        raise PrecisionError("asymptotic form needs |z| >= 10")
    if _on_cut(z):
        raise BranchError("rotated argument leaves the sector (-pi/2, 3pi/2)")
    w = 1j * z
    argw = cmath.phase(z) + math.pi / 2
    pref = (2 * math.pi * abs(w)) ** -0.5 * cmath.exp(-0.5j * argw)
    val = pref * (cmath.exp(w) + cmath.exp(-w + (nu + 0.5) * math.pi * 1j))
    return cmath.exp(-0.5j * nu * math.pi) * val


def bessel_j(nu: float, z: complex, tol: float = SERIES_TOL) -> complex:
    """J_nu(z) on the cut plane.

    Power series for ``|z| <= 60``; beyond that the full Hankel expansion,
    whose leading term is :func:`bessel_j_asymptotic`.
    """
    if nu < 0:
        raise DomainError("order must be non-negative")
    z = complex(z)
    if not _is_integer(nu) and _on_cut(z) and z != 0:
        raise BranchError(f"J_{nu} is undefined on the cut, z={z}")
    r = abs(z)
    use_series = r <= ASYMPTOTIC_SWITCH and (
        r < HANKEL_MIN or r - abs(z.imag) <= CANCEL_LIMIT)
    if use_series:
        return bessel_j_series(nu, z, tol)
    if z.real < 0:
        # integer order: reflect into the right half plane
        if _is_integer(nu):
            return (-1) ** int(nu) * _hankel(nu, -z, None)
        # J_nu(z) = e^{+-i nu pi} J_nu(-z) with the sign matching arg z
        s = 1 if z.imag >= 0 else -1
        return cmath.exp(s * 1j * nu * math.pi) * _hankel(nu, -z, None)
    return _hankel(nu, z, None)
