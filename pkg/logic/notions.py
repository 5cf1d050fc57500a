# Built-in kinds are convex polygons in u = ln y - ln(x)/2, v = ln z - ln(x)/2.
# Membership at integer points is exact; everything else stays in log space.
import logging
import math
import numbers
import operator
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple, Optional

from scipy import integrate

from logic.errors import EmptyRegionError, ParameterError

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
QUAD_EPSREL = 1e-10


class Kind(Enum):
    DM = 'dm'
    FIX = 'fix'
    ALG = 'alg'
    ALGVAR = 'algvar'
    MAX = 'max'


class Modifier(Enum):
    NONE = ''
    SYMMETRIZED = 'sym'
    TOP_HALF = 'top'


class Symmetry(Enum):
    SYMMETRIC = 'symmetric'
    ANTISYMMETRIC = 'antisymmetric'
    NEITHER = 'neither'


_PARAMETERS = {Kind.DM: ('r',),
               Kind.FIX: ('r', 'sigma'),
               Kind.ALG: ('r',),
               Kind.ALGVAR: ('r', 'sigma'),
               Kind.MAX: ('r', 'c1')}


def to_fraction(value):
    # Exact rational from int, Fraction, float or a decimal / 'b^e' string
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError(f'not a number: {value!r}')
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParameterError(f'not a finite number: {value!r}')
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        text = value.strip()
        try:
            if '^' in text:
                base, _, exponent = text.partition('^')
                return to_fraction(base) ** int(exponent)
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as error:
            raise ParameterError(f'not a number: {value!r}') from error
    raise ParameterError(f'not a number: {value!r}')


def format_number(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return repr(float(value))


def log_of(value):
    # Natural log of a positive int / Fraction / float, big ints included
    if isinstance(value, Fraction):
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


def scale_by_x(factor, log_x):
    # factor * x as a float, inf once it leaves the float range
    if factor <= 0:
        return 0.0
    exponent = math.log(factor) + log_x
    return math.exp(exponent) if exponent < 709.0 else math.inf


@dataclass(frozen=True)
class NotionSpec:
    kind: Kind
    r: Fraction
    sigma: Optional[Fraction] = None
    c1: Optional[Fraction] = None
    modifier: Modifier = Modifier.NONE

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, Kind):
            try:
                kind = Kind(str(kind).lower())
            except ValueError as error:
                raise ParameterError(f'unknown notion kind {self.kind!r}') from error
        object.__setattr__(self, 'kind', kind)
        if not isinstance(self.modifier, Modifier):
            try:
                object.__setattr__(self, 'modifier', Modifier(self.modifier))
            except ValueError as error:
                raise ParameterError(f'unknown modifier {self.modifier!r}') from error

        object.__setattr__(self, 'r', to_fraction(self.r))
        if self.r <= 1:
            raise ParameterError(f'tolerance r must exceed 1, got {format_number(self.r)}')

        needs_sigma = kind in (Kind.FIX, Kind.ALGVAR)
        if needs_sigma != (self.sigma is not None):
            raise ParameterError(f'sigma is {"required" if needs_sigma else "not allowed"} '
                                 f'for {kind.value}')
        if self.sigma is not None:
            object.__setattr__(self, 'sigma', to_fraction(self.sigma))
            if not 0 <= self.sigma <= 1:
                raise ParameterError(f'sigma must lie in [0, 1], got {format_number(self.sigma)}')

        needs_c1 = kind is Kind.MAX
        if needs_c1 != (self.c1 is not None):
            raise ParameterError(f'c1 is {"required" if needs_c1 else "not allowed"} '
                                 f'for {kind.value}')
        if self.c1 is not None:
            object.__setattr__(self, 'c1', to_fraction(self.c1))
            if not 0 < self.c1 <= HALF:
                raise ParameterError(f'c1 must lie in (0, 1/2], got {format_number(self.c1)}')

    def __str__(self):
        values = [f'{name}={format_number(getattr(self, name))}'
                  for name in _PARAMETERS[self.kind]]
        text = f'{self.kind.value}:{",".join(values)}'
        if self.modifier is not Modifier.NONE:
            text += f'+{self.modifier.value}'
        return text

    @property
    def label(self):
        values = ','.join(format_number(getattr(self, name))
                          for name in _PARAMETERS[self.kind])
        text = f'{self.kind.name}[{values}]'
        if self.modifier is Modifier.SYMMETRIZED:
            return f'sym({text})'
        if self.modifier is Modifier.TOP_HALF:
            return f'top({text})'
        return text

    def with_modifier(self, modifier):
        return replace(self, modifier=modifier)

    def symmetrized(self):
        return self.with_modifier(Modifier.SYMMETRIZED)

    def top_half(self):
        return self.with_modifier(Modifier.TOP_HALF)

    def base(self):
        return self.with_modifier(Modifier.NONE)


def parse_notion(text):
    # kind:name=value,...[+sym|+top]
    if isinstance(text, NotionSpec):
        return text
    body = str(text).strip().lower()
    modifier = Modifier.NONE
    head, plus, suffix = body.rpartition('+')
    if plus and suffix in ('sym', 'top'):
        body, modifier = head, Modifier(suffix)

    kind_text, _, parameter_text = body.partition(':')
    try:
        kind = Kind(kind_text.strip())
    except ValueError as error:
        raise ParameterError(f'unknown notion kind {kind_text!r} in {text!r}') from error

    values = {}
    for item in parameter_text.split(','):
        if not item.strip():
            continue
        name, equals, value = item.partition('=')
        name = name.strip()
        if not equals or name in values:
            raise ParameterError(f'malformed parameter {item!r} in {text!r}')
        values[name] = to_fraction(value)

    expected = set(_PARAMETERS[kind])
    if set(values) != expected:
        raise ParameterError(f'{kind.value} takes parameters {sorted(expected)}, '
                             f'got {sorted(values)}')
    return NotionSpec(kind=kind, modifier=modifier, **values)


_RELATIONS = {'<': operator.lt, '<=': operator.le,
              '>': operator.gt, '>=': operator.ge}


@dataclass(frozen=True)
class HalfPlane:
    # alpha*u + beta*v REL gamma_r*ln r + gamma_l*ln x
    alpha: Fraction
    beta: Fraction
    relation: str
    gamma_r: Fraction = Fraction(0)
    gamma_l: Fraction = Fraction(0)

    def transposed(self):
        return replace(self, alpha=self.beta, beta=self.alpha)

    def holds_exactly(self, r, x, y, z):
        # y^alpha z^beta REL r^gamma_r x^gamma_x, with integer exponents after scaling
        gamma_x = self.gamma_l + (self.alpha + self.beta) / 2
        exponents = (self.alpha, self.beta, self.gamma_r, gamma_x)
        scale = math.lcm(*(exponent.denominator for exponent in exponents))
        left, right = Fraction(1), Fraction(1)
        for value, exponent, on_left in ((y, self.alpha, True), (z, self.beta, True),
                                         (r, self.gamma_r, False), (x, gamma_x, False)):
            power = int(exponent * scale)
            if power == 0:
                continue
            term = Fraction(value) ** abs(power)
            if (power > 0) == on_left:
                left *= term
            else:
                right *= term
        return _RELATIONS[self.relation](left, right)


def _half_plane(alpha, beta, relation, gamma_r=0, gamma_l=0):
    return HalfPlane(Fraction(alpha), Fraction(beta), relation,
                     Fraction(gamma_r), Fraction(gamma_l))


_DIAGONAL = _half_plane(-1, 1, '>=')


def _base_polygon(spec):
    if spec.kind is Kind.DM:
        return (_half_plane(-1, 1, '>', -1), _half_plane(-1, 1, '<', 1),
                _half_plane(1, 1, '>', -1), _half_plane(1, 1, '<=', 0))
    if spec.kind is Kind.FIX:
        top = spec.sigma * HALF
        return (_half_plane(1, 0, '>', -HALF), _half_plane(0, 1, '>', -HALF),
                _half_plane(1, 0, '<=', top), _half_plane(0, 1, '<=', top),
                _half_plane(1, 1, '<=', 0))
    if spec.kind is Kind.ALG:
        return (_half_plane(1, 0, '>', -1), _half_plane(1, 0, '<=', 0),
                _half_plane(1, 1, '>', -1), _half_plane(1, 1, '<=', 0))
    if spec.kind is Kind.ALGVAR:
        return (_half_plane(1, 0, '>', spec.sigma - 1), _half_plane(1, 0, '<=', spec.sigma),
                _half_plane(1, 1, '>', -1), _half_plane(1, 1, '<=', 0))
    edge = spec.c1 - HALF
    return (_half_plane(1, 0, '>', 0, edge), _half_plane(0, 1, '>', 0, edge),
            _half_plane(1, 0, '<=', 0, -edge), _half_plane(0, 1, '<=', 0, -edge),
            _half_plane(1, 1, '>', -1), _half_plane(1, 1, '<=', 0))


def polygons(spec):
    base = _base_polygon(spec)
    if spec.modifier is Modifier.NONE:
        return (base,)
    mirrored = tuple(plane.transposed() for plane in base)
    if spec.modifier is Modifier.SYMMETRIZED:
        return (base, mirrored)
    return (base + (_DIAGONAL,), mirrored + (_DIAGONAL,))


class Interval(NamedTuple):
    lo: float
    hi: float
    lo_open: bool
    hi_closed: bool


@dataclass(frozen=True)
class _Line:
    a: float
    b: float
    c: float
    relation: str
    plane: HalfPlane

    def residual(self, u, v):
        return self.a * u + self.b * v - self.c

    def tolerance(self, u, v):
        return 1e-9 * (1.0 + abs(self.c) + abs(self.a * u) + abs(self.b * v))


class Region:
    """A notion at a fixed x: compiled half-planes, vertices and slices."""

    def __init__(self, spec, x):
        self.spec = spec
        self.x = x
        self.log_x = log_of(x)
        self.log_r = log_of(spec.r)
        self.half_log_x = self.log_x / 2
        try:
            self.sqrt_x = math.exp(self.half_log_x)
        except OverflowError:
            self.sqrt_x = math.inf

        self.polygons = [self._compile(polygon) for polygon in polygons(spec)]
        vertex_sets = [self._vertices(lines) for lines in self.polygons]
        live = [(lines, vertices) for lines, vertices in zip(self.polygons, vertex_sets)
                if _polygon_area(vertices) > 1e-14]
        self.empty = not live
        self._live = [lines for lines, _ in live]
        # Same polygons with u and v exchanged, for slicing along the other axis
        self._mirror = [tuple(_Line(line.b, line.a, line.c, line.relation,
                                    line.plane.transposed()) for line in lines)
                        for lines in self._live]
        if self.empty:
            self.u_min = self.u_max = self.v_min = self.v_max = math.nan
            self.breaks = self.mirror_breaks = ()
            return

        points = [point for _, vertices in live for point in vertices]
        self.u_min = min(u for u, _ in points)
        self.u_max = max(u for u, _ in points)
        self.v_min = min(v for _, v in points)
        self.v_max = max(v for _, v in points)
        self.breaks = self._breakpoints(self._live, self.u_min, self.u_max)
        self.mirror_breaks = self._breakpoints(self._mirror, self.v_min, self.v_max)

    def _compile(self, polygon):
        return tuple(_Line(float(plane.alpha), float(plane.beta),
                           float(plane.gamma_r) * self.log_r
                           + float(plane.gamma_l) * self.log_x,
                           plane.relation, plane)
                     for plane in polygon)

    @staticmethod
    def _intersection(first, second):
        determinant = first.a * second.b - second.a * first.b
        if abs(determinant) < 1e-15:
            return None
        u = (first.c * second.b - second.c * first.b) / determinant
        v = (first.a * second.c - second.a * first.c) / determinant
        return u, v

    def _vertices(self, lines):
        vertices = []
        for first, second in combinations(lines, 2):
            point = self._intersection(first, second)
            if point is None:
                continue
            u, v = point
            feasible = all(_RELATIONS[line.relation.rstrip('=') + '='](
                               line.residual(u, v), 0.0)
                           or abs(line.residual(u, v)) <= line.tolerance(u, v)
                           for line in lines)
            if feasible:
                vertices.append(point)
        return vertices

    def _breakpoints(self, compiled, lo, hi):
        lines = [line for polygon in compiled for line in polygon]
        candidates = [lo, hi]
        for first, second in combinations(lines, 2):
            point = self._intersection(first, second)
            if point is not None and lo < point[0] < hi:
                candidates.append(point[0])
        candidates.sort()
        breaks = [candidates[0]]
        for value in candidates[1:]:
            if value - breaks[-1] > 1e-12 * (1.0 + abs(value)):
                breaks.append(value)
        breaks[-1] = hi
        return tuple(breaks)

    def log_coordinate(self, value):
        return log_of(value) - self.half_log_x

    def integer_at(self, t):
        # floor(sqrt(x) * e^t) on the integers; no float overflow at large x
        return math.isqrt(math.floor(self.x * Fraction(math.exp(2 * t))))

    @staticmethod
    def _polygon_slice(lines, u):
        lo, hi, lo_open, hi_closed = -math.inf, math.inf, True, True
        for line in lines:
            if line.b == 0:
                if not _RELATIONS[line.relation](line.a * u, line.c):
                    return None
                continue
            bound = (line.c - line.a * u) / line.b
            upper = (line.relation in ('<', '<=')) == (line.b > 0)
            inclusive = line.relation in ('<=', '>=')
            if upper:
                if bound < hi or (bound == hi and not inclusive):
                    hi, hi_closed = bound, inclusive
            elif bound > lo or (bound == lo and not inclusive):
                lo, lo_open = bound, not inclusive
        if lo > hi or (lo == hi and (lo_open or not hi_closed)):
            return None
        return Interval(lo, hi, lo_open, hi_closed)

    def slices(self, u, mirrored=False):
        # Disjoint v-intervals at log coordinate u, ascending; u-intervals at v if mirrored
        compiled = self._mirror if mirrored else self._live
        pieces = [piece for piece in (self._polygon_slice(lines, u) for lines in compiled)
                  if piece is not None]
        if len(pieces) < 2:
            return pieces
        pieces.sort(key=lambda piece: (piece.lo, not piece.lo_open))
        merged = [pieces[0]]
        for piece in pieces[1:]:
            last = merged[-1]
            if piece.lo <= last.hi:
                if piece.hi > last.hi or (piece.hi == last.hi and piece.hi_closed):
                    merged[-1] = last._replace(hi=piece.hi, hi_closed=piece.hi_closed)
            else:
                merged.append(piece)
        return merged

    def width(self, u):
        # Slice length in w = z/sqrt(x) units
        return sum(math.exp(piece.hi) - math.exp(piece.lo) for piece in self.slices(u))

    def contains(self, y, z):
        if y <= 1 or z <= 1:
            raise ParameterError('coordinates must exceed 1')
        u = self.log_coordinate(y)
        v = self.log_coordinate(z)
        return any(self._inside(lines, u, v, y, z) for lines in self.polygons)

    def _inside(self, lines, u, v, y, z):
        for line in lines:
            residual = line.residual(u, v)
            if abs(residual) > line.tolerance(u, v):
                holds = _RELATIONS[line.relation](residual, 0.0)
            else:
                holds = line.plane.holds_exactly(self.spec.r, self.x, y, z)
            if not holds:
                return False
        return True

    def integrate(self, integrand, epsrel=QUAD_EPSREL, mirrored=False):
        # Integral over u in (u_min, u_max] (v when mirrored), split at every kink
        breaks = self.mirror_breaks if mirrored else self.breaks
        total = 0.0
        for lo, hi in zip(breaks, breaks[1:]):
            value, _ = integrate.quad(integrand, lo, hi, epsrel=epsrel,
                                      epsabs=1e-14, limit=200)
            total += value
        return total


def _polygon_area(vertices):
    if len(vertices) < 3:
        return 0.0
    center_u = sum(u for u, _ in vertices) / len(vertices)
    center_v = sum(v for _, v in vertices) / len(vertices)
    ordered = sorted(vertices, key=lambda point: math.atan2(point[1] - center_v,
                                                            point[0] - center_u))
    doubled = 0.0
    for (u1, v1), (u2, v2) in zip(ordered, ordered[1:] + ordered[:1]):
        doubled += u1 * v2 - u2 * v1
    return abs(doubled) / 2


@lru_cache(maxsize=256)
def _compiled(spec, x):
    return Region(spec, x)


def compile_region(spec, x):
    x = to_fraction(x)
    if x <= 1:
        raise ParameterError(f'x must exceed 1, got {format_number(x)}')
    return _compiled(parse_notion(spec), x)


def contains(spec, x, y, z):
    return compile_region(spec, x).contains(to_fraction(y), to_fraction(z))


@dataclass(frozen=True)
class RegionBounds:
    x: Fraction
    b1: float
    c1_outer: float
    region: Region = field(repr=False, compare=False)

    @property
    def is_empty(self):
        return self.region.empty

    def pieces(self, y):
        if self.is_empty or not self.b1 < y <= self.c1_outer:
            return []
        scale = self.region.sqrt_x
        return [(scale * math.exp(piece.lo), scale * math.exp(piece.hi),
                 piece.lo_open, piece.hi_closed)
                for piece in self.region.slices(self.region.log_coordinate(y))]

    def inner(self, y):
        # (b2, c2) for y in (b1, c1_outer]; the built-in slices are connected
        pieces = self.pieces(y)
        if not pieces:
            return None
        return pieces[0][0], pieces[-1][1]

    def contains(self, y, z):
        for lo, hi, lo_open, hi_closed in self.pieces(y):
            above = lo < z if lo_open else lo <= z
            below = z <= hi if hi_closed else z < hi
            if above and below:
                return True
        return False


def region_bounds(spec, x):
    region = compile_region(spec, x)
    if region.empty:
        logger.debug('%s is empty at x=%s', region.spec.label, format_number(region.x))
        return RegionBounds(region.x, math.nan, math.nan, region)
    return RegionBounds(region.x,
                        region.sqrt_x * math.exp(region.u_min),
                        region.sqrt_x * math.exp(region.u_max),
                        region)


def _closed_area_factor(region):
    spec = region.spec
    log_r, r = region.log_r, float(spec.r)
    if spec.kind in (Kind.ALG, Kind.ALGVAR):
        if spec.modifier is not Modifier.NONE:
            return None
        return log_r * (1 - 1 / r)
    if spec.kind is Kind.DM:
        factor = log_r * (1 - 1 / r)
    elif spec.kind is Kind.FIX:
        sigma = float(spec.sigma)
        factor = sigma * log_r + 1 - 2 * r ** (-(1 - sigma) / 2) + 1 / r
    else:
        width = (1 - 2 * float(spec.c1)) * region.log_x
        if width >= log_r:
            factor = width * (1 - 1 / r) - 1 + (log_r + 1) / r
        else:
            factor = width + math.expm1(-width)
    if spec.modifier is Modifier.TOP_HALF:
        return factor / 2
    return factor


def _numeric_area_factor(region):
    return region.integrate(lambda u: math.exp(u) * region.width(u))


def area_factor(spec, x):
    # area(A_x) / x
    region = compile_region(spec, x)
    if region.empty:
        return 0.0
    closed = _closed_area_factor(region)
    return _numeric_area_factor(region) if closed is None else closed


def area(spec, x):
    region = compile_region(spec, x)
    return scale_by_x(area_factor(spec, x), region.log_x)


def area_numeric(spec, x):
    region = compile_region(spec, x)
    if region.empty:
        return 0.0
    return scale_by_x(_numeric_area_factor(region), region.log_x)


@dataclass(frozen=True)
class BalanceParams:
    c1: float
    c2: float


def balance(spec, x):
    region = compile_region(spec, x)
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')
    spec = region.spec
    spread = region.log_r / region.log_x
    if spec.kind is Kind.DM:
        return BalanceParams(0.5 - spread, 0.5 + spread / 2)
    if spec.kind is Kind.FIX:
        return BalanceParams(0.5 - spread / 2, 0.5 + float(spec.sigma) * spread / 2)
    if spec.kind is Kind.ALG:
        return BalanceParams(0.5 - spread, 0.5 + spread)
    if spec.kind is Kind.ALGVAR:
        sigma = float(spec.sigma)
        return BalanceParams(0.5 - (1 + sigma) * spread, 0.5 + max(sigma, 1 - sigma) * spread)
    return BalanceParams(float(spec.c1), 1 - float(spec.c1))


def classify_symmetry(spec):
    spec = parse_notion(spec)
    if spec.modifier is Modifier.TOP_HALF:
        return Symmetry.ANTISYMMETRIC
    if spec.modifier is Modifier.SYMMETRIZED or spec.kind in (Kind.DM, Kind.FIX, Kind.MAX):
        return Symmetry.SYMMETRIC
    return Symmetry.NEITHER


@dataclass(frozen=True)
class PieceMonotonicity:
    y_lo: float
    y_hi: float
    lower: str
    upper: str


def _direction(values):
    steps = [second - first for first, second in zip(values, values[1:])]
    slack = 1e-9 * max(1.0, max(abs(value) for value in values))
    if all(abs(step) <= slack for step in steps):
        return 'constant'
    if all(step >= -slack for step in steps):
        return 'increasing'
    if all(step <= slack for step in steps):
        return 'decreasing'
    return 'mixed'


def inner_bound_monotonicity(spec, x, samples=33):
    bounds = region_bounds(spec, x)
    if bounds.is_empty:
        return []
    region = bounds.region
    result = []
    for lo, hi in zip(region.breaks, region.breaks[1:]):
        grid = [lo + (hi - lo) * (index + 1) / (samples + 1) for index in range(samples)]
        hulls = [bounds.inner(region.sqrt_x * math.exp(u)) for u in grid]
        hulls = [hull for hull in hulls if hull is not None]
        if len(hulls) < 2:
            continue
        result.append(PieceMonotonicity(region.sqrt_x * math.exp(lo),
                                        region.sqrt_x * math.exp(hi),
                                        _direction([hull[0] for hull in hulls]),
                                        _direction([hull[1] for hull in hulls])))
    return result
