import math
from functools import lru_cache

from scipy import integrate, optimize, special

from logic.errors import EmptyRegionError, ParameterError
from logic.notions import (Kind, Modifier, area_factor, compile_region,
                           format_number, to_fraction)

BISECTION_XTOL = 1e-12
BISECTION_MAXITER = 200


def _nonempty_region(spec, x):
    region = compile_region(spec, x)
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')
    return region


def _has_closed_form(region):
    return (region.spec.modifier is Modifier.NONE
            and region.spec.kind in (Kind.DM, Kind.FIX, Kind.ALG, Kind.ALGVAR))


def _solve_log_linear(a, b, k, increasing):
    # Solve a*ln t - b*t = k for t > 0 via Lambert W
    argument = -(b / a) * math.exp(k / a)
    argument = max(argument, -1 / math.e)
    branch = 0 if increasing else -1
    return -(a / b) * special.lambertw(argument, branch).real


class _FixPieces:
    # FIX[r, sigma] in w = y/sqrt(x): constant width, then x/y - sqrt(x/r)
    def __init__(self, region):
        r = float(region.spec.r)
        sigma = float(region.spec.sigma)
        self.floor = r ** -0.5
        self.bend = r ** (-sigma / 2)
        self.ceiling = r ** (sigma / 2)
        self.total = area_factor(region.spec, region.x)
        self.flat_width = self.ceiling - self.floor
        self.flat_mass = (self.bend - self.floor) * self.flat_width

    def density(self, w):
        if w <= self.bend:
            return self.flat_width / self.total
        return (1 / w - self.floor) / self.total

    def cdf(self, w):
        if w <= self.bend:
            return (w - self.floor) * self.flat_width / self.total
        tail = math.log(w / self.bend) - self.floor * (w - self.bend)
        return (self.flat_mass + tail) / self.total

    def inverse(self, u):
        target = u * self.total
        if target <= self.flat_mass:
            return self.floor + target / self.flat_width
        k = target - self.flat_mass + math.log(self.bend) - self.floor * self.bend
        return _solve_log_linear(1.0, self.floor, k, increasing=True)


class _DmPieces:
    # Symmetric DM in w: three pieces split at 1/sqrt(r) and 1
    def __init__(self, region):
        self.r = r = float(region.spec.r)
        self.log_r = region.log_r
        self.second = r ** -0.5
        self.total = area_factor(region.spec, region.x)
        self.mass_one = 0.5 * (1 - 1 / r) - self.log_r / (2 * r)
        self.mass_two = (1 - 1 / r) * self.log_r / 2

    def density(self, w):
        r = self.r
        if w <= self.second:
            width = r * w - 1 / (r * w)
        elif w <= 1:
            width = (1 - 1 / r) / w
        else:
            width = 1 / w - w / r
        return width / self.total

    def cdf(self, w):
        r = self.r
        if w <= self.second:
            mass = (r / 2) * (w * w - 1 / r ** 2) - math.log(r * w) / r
        elif w <= 1:
            mass = self.mass_one + (1 - 1 / r) * math.log(w / self.second)
        else:
            mass = (self.mass_one + self.mass_two
                    + math.log(w) - (w * w - 1) / (2 * r))
        return mass / self.total

    def inverse(self, u):
        r = self.r
        target = u * self.total
        if target <= self.mass_one:
            k = -(target + 1 / (2 * r) + self.log_r / r)
            return math.sqrt(_solve_log_linear(1 / (2 * r), r / 2, k, increasing=False))
        if target <= self.mass_one + self.mass_two:
            return self.second * math.exp((target - self.mass_one) / (1 - 1 / r))
        k = target - self.mass_one - self.mass_two - 1 / (2 * r)
        return math.sqrt(_solve_log_linear(0.5, 1 / (2 * r), k, increasing=True))


class _AlgPieces:
    # ALG / ALGVAR: density 1/(y ln r) on (sqrt(x) r^(sigma-1), sqrt(x) r^sigma]
    def __init__(self, region):
        self.log_r = region.log_r
        self.start = region.u_min

    def density(self, w):
        return 1 / (w * self.log_r)

    def cdf(self, w):
        return (math.log(w) - self.start) / self.log_r

    def inverse(self, u):
        return math.exp(self.start + u * self.log_r)


def _pieces(region):
    if region.spec.kind is Kind.FIX:
        return _FixPieces(region)
    if region.spec.kind is Kind.DM:
        return _DmPieces(region)
    return _AlgPieces(region)


def _mass_between(region, lo, hi):
    value, _ = integrate.quad(lambda t: math.exp(t) * region.width(t), lo, hi,
                              epsrel=1e-12, epsabs=1e-15, limit=200)
    return value


@lru_cache(maxsize=64)
def _numeric_total(region):
    return sum(_mass_between(region, lo, hi)
               for lo, hi in zip(region.breaks, region.breaks[1:]))


def _numeric_cdf(region, u):
    mass = 0.0
    for lo, hi in zip(region.breaks, region.breaks[1:]):
        if lo >= u:
            break
        mass += _mass_between(region, lo, min(hi, u))
    return min(1.0, max(0.0, mass / _numeric_total(region)))


def density(spec, x, y):
    region = compile_region(spec, x)
    if region.empty:
        return 0.0
    u = region.log_coordinate(to_fraction(y))
    if not region.u_min < u <= region.u_max:
        return 0.0
    if _has_closed_form(region):
        return _pieces(region).density(math.exp(u)) / region.sqrt_x
    return region.width(u) / (area_factor(region.spec, region.x) * region.sqrt_x)


def cdf(spec, x, y):
    region = _nonempty_region(spec, x)
    u = region.log_coordinate(to_fraction(y))
    if u <= region.u_min:
        return 0.0
    if u >= region.u_max:
        return 1.0
    if _has_closed_form(region):
        return min(1.0, max(0.0, _pieces(region).cdf(math.exp(u))))
    return _numeric_cdf(region, u)


def log_inverse(spec, x, u):
    # F^-1(u) as t = ln(y / sqrt(x)), finite for every x
    if not 0 <= u <= 1:
        raise ParameterError(f'probability must lie in [0, 1], got {u}')
    region = _nonempty_region(spec, x)
    if u == 0:
        return region.u_min
    if u == 1:
        return region.u_max
    if _has_closed_form(region):
        return min(region.u_max, max(region.u_min, math.log(_pieces(region).inverse(u))))
    return optimize.bisect(lambda t: _numeric_cdf(region, t) - u, region.u_min, region.u_max,
                           xtol=BISECTION_XTOL * (region.u_max - region.u_min),
                           maxiter=BISECTION_MAXITER)


def cdf_inverse(spec, x, u):
    region = _nonempty_region(spec, x)
    return region.sqrt_x * math.exp(log_inverse(region.spec, region.x, u))
