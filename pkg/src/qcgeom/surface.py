"""Surface files, second-order jets of the defining function, and sampling
points on its zero level set."""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DivisionByZero,
    InputError,
    NoConvergence,
    ParseError,
    SamplingExhausted,
)
from .expr import (
    BinOp,
    Const,
    Coord,
    Neg,
    NormQ,
    Pow,
    max_slot,
    parse_expr,
    poly_derivative,
    to_polynomial,
    to_text,
)

DEFAULT_HALFWIDTH = 2.0


@dataclass(frozen=True)
class SurfaceSpec:
    n_plus_1: int
    rho: object
    box_center: np.ndarray = None
    box_halfwidth: float = DEFAULT_HALFWIDTH
    source: str = field(default="", compare=False)
    _compiled: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_plus_1 < 2:
            raise InputError(f"dim must be at least 2, got {self.n_plus_1}")
        if max_slot(self.rho) >= self.n_plus_1:
            raise InputError("expression references a slot beyond dim")
        center = self.box_center
        if center is None:
            center = np.zeros(self.dim)
        center = np.asarray(center, dtype=float)
        if center.shape != (self.dim,):
            raise InputError(f"box_center needs {self.dim} values, got {center.size}")
        object.__setattr__(self, "box_center", center)

    def __eq__(self, other):
        if not isinstance(other, SurfaceSpec):
            return NotImplemented
        return (self.n_plus_1 == other.n_plus_1 and self.rho == other.rho
                and np.array_equal(self.box_center, other.box_center)
                and self.box_halfwidth == other.box_halfwidth)

    __hash__ = object.__hash__

    @property
    def dim(self):
        return 4 * self.n_plus_1

    @property
    def n(self):
        return self.n_plus_1 - 1

    def to_text(self):
        lines = [f"dim = {self.n_plus_1}", f"rho = {to_text(self.rho)}"]
        if np.any(self.box_center != 0.0):
            lines.append("box_center = " + ", ".join(repr(float(c)) for c in self.box_center))
        if self.box_halfwidth != DEFAULT_HALFWIDTH:
            lines.append(f"box_halfwidth = {self.box_halfwidth!r}")
        return "\n".join(lines) + "\n"


def parse_surface(text):
    """Parse the surface file format (``dim`` must precede ``rho``)."""
    n_plus_1 = None
    rho = None
    center = None
    halfwidth = DEFAULT_HALFWIDTH
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError("expected '<key> = <value>'", lineno, col)
        key_part, value = line.split("=", 1)
        key = key_part.strip()
        value_col = len(key_part) + 2
        if key == "dim":
            try:
                n_plus_1 = int(value.strip())
            except ValueError:
                raise ParseError("dim must be an integer", lineno, value_col) from None
            if n_plus_1 < 2:
                raise ParseError("dim must be at least 2", lineno, value_col)
        elif key == "rho":
            if n_plus_1 is None:
                raise ParseError("'dim = <n+1>' must come before 'rho'", lineno, 1)
            rho = parse_expr(value, n_plus_1, line=lineno, col0=value_col)
        elif key == "box_center":
            try:
                center = np.array([float(c) for c in value.split(",")])
            except ValueError:
                raise ParseError("box_center must be comma-separated reals", lineno, value_col) from None
        elif key == "box_halfwidth":
            try:
                halfwidth = float(value)
            except ValueError:
                raise ParseError("box_halfwidth must be a real", lineno, value_col) from None
            if not halfwidth > 0:
                raise ParseError("box_halfwidth must be positive", lineno, value_col)
        else:
            raise ParseError(f"unknown key {key!r}", lineno, len(key_part) - len(key_part.lstrip()) + 1)
    if n_plus_1 is None:
        raise ParseError("missing 'dim = <n+1>' header")
    if rho is None:
        raise ParseError("missing 'rho = <expr>' line")
    if center is not None and center.size != 4 * n_plus_1:
        raise ParseError(f"box_center needs {4 * n_plus_1} values, got {center.size}")
    return SurfaceSpec(n_plus_1, rho, center, halfwidth, source=text)


def load_surface(path):
    with open(path, encoding="utf-8") as fh:
        spec = parse_surface(fh.read())
    return replace(spec, source=str(path))


# --- second-order jets -----------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray
    hess: np.ndarray


class _Jet:
    """Truncated Taylor polynomial; ``grad``/``hess`` of None mean zero."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=None, h=None):
        self.v = v
        self.g = g
        self.h = h

    def __add__(self, o):
        return _Jet(self.v + o.v, _add(self.g, o.g), _add(self.h, o.h))

    def __sub__(self, o):
        return _Jet(self.v - o.v, _add(self.g, _scale(o.g, -1.0)), _add(self.h, _scale(o.h, -1.0)))

    def __neg__(self):
        return _Jet(-self.v, _scale(self.g, -1.0), _scale(self.h, -1.0))

    def __mul__(self, o):
        g = _add(_scale(self.g, o.v), _scale(o.g, self.v))
        h = _add(_scale(self.h, o.v), _scale(o.h, self.v))
        if self.g is not None and o.g is not None:
            cross = np.outer(self.g, o.g)
            h = _add(h, cross + cross.T)
        return _Jet(self.v * o.v, g, h)

    def reciprocal(self):
        v = self.v
        if abs(v) < 1e-300:
            raise DivisionByZero("division by a value below 1e-300 in magnitude")
        g = _scale(self.g, -1.0 / v**2)
        h = _scale(self.h, -1.0 / v**2)
        if self.g is not None:
            h = _add(h, np.outer(self.g, self.g) * (2.0 / v**3))
        return _Jet(1.0 / v, g, h)

    def power(self, k):
        if k == 0:
            return _Jet(1.0)
        if k < 0:
            return self.reciprocal().power(-k)
        if k == 1:
            return self
        v = self.v
        g = _scale(self.g, k * v ** (k - 1))
        h = _scale(self.h, k * v ** (k - 1))
        if self.g is not None:
            h = _add(h, np.outer(self.g, self.g) * (k * (k - 1) * v ** (k - 2)))
        return _Jet(v**k, g, h)


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _scale(a, c):
    return None if a is None else a * c


class _PolyJet:
    """Value, gradient and Hessian of a polynomial as one table of monomials.

    Row k of ``exps`` holds the exponents of term k, which contributes
    ``coefs[k] * prod(x**exps[k])`` to output slot ``target[k]`` (0 for the
    value, 1..dim for the gradient, then the upper-triangular Hessian)."""

    def __init__(self, poly, dim):
        self.dim = dim
        iu = np.triu_indices(dim)
        polys = [poly]
        grads = [poly_derivative(poly, i) for i in range(dim)]
        polys += grads
        polys += [poly_derivative(grads[i], j) for i, j in zip(*iu)]
        exps, coefs, target = [], [], []
        for k, q in enumerate(polys):
            for mono, c in q.items():
                if c == 0.0:
                    continue
                e = np.zeros(dim, dtype=int)
                for i in mono:
                    e[i] += 1
                exps.append(e)
                coefs.append(c)
                target.append(k)
        self.exps = np.array(exps, dtype=int).reshape(-1, dim)
        self.coefs = np.array(coefs, dtype=float)
        self.target = np.array(target, dtype=int)
        self.n_out = len(polys)
        self.iu = iu

    def __call__(self, x):
        terms = self.coefs * np.prod(x ** self.exps, axis=1)
        out = np.bincount(self.target, terms, minlength=self.n_out)
        dim = self.dim
        h = np.zeros((dim, dim))
        h[self.iu] = out[1 + dim:]
        h = h + np.triu(h, 1).T
        return Jet2(float(out[0]), out[1:1 + dim].copy(), h)


def _compiled(spec):
    """Polynomial evaluator for spec.rho, or False when rho is rational."""
    if spec._compiled is None:
        poly = to_polynomial(spec.rho)
        compiled = False if poly is None else _PolyJet(poly, spec.dim)
        object.__setattr__(spec, "_compiled", compiled)
    return spec._compiled


def _jet_eval(e, x, dim):
    if isinstance(e, Const):
        return _Jet(e.value)
    if isinstance(e, Coord):
        i = 4 * e.slot + e.component
        g = np.zeros(dim)
        g[i] = 1.0
        return _Jet(x[i], g)
    if isinstance(e, NormQ):
        sl = slice(4 * e.slot, 4 * e.slot + 4)
        g = np.zeros(dim)
        g[sl] = 2.0 * x[sl]
        h = np.zeros((dim, dim))
        idx = np.arange(4 * e.slot, 4 * e.slot + 4)
        h[idx, idx] = 2.0
        return _Jet(float(x[sl] @ x[sl]), g, h)
    if isinstance(e, Neg):
        return -_jet_eval(e.arg, x, dim)
    if isinstance(e, Pow):
        return _jet_eval(e.base, x, dim).power(e.exponent)
    a = _jet_eval(e.left, x, dim)
    b = _jet_eval(e.right, x, dim)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a * b.reciprocal()


def eval_jet2(spec, p):
    """Value, gradient and Hessian of rho at p."""
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.dim,):
        raise InputError(f"point has {p.size} coordinates, surface lives in R^{spec.dim}")
    compiled = _compiled(spec)
    if compiled:
        return compiled(p)
    jet = _jet_eval(spec.rho, p, spec.dim)
    g = np.zeros(spec.dim) if jet.g is None else np.array(jet.g, dtype=float)
    h = np.zeros((spec.dim, spec.dim)) if jet.h is None else np.array(jet.h, dtype=float)
    return Jet2(float(jet.v), g, 0.5 * (h + h.T))


def eval_value(spec, p):
    return eval_jet2(spec, p).value


# --- projection and sampling -----------------------------------------------------


def on_surface_tolerance(jet, x, factor=1e-12):
    return factor * (1.0 + np.linalg.norm(jet.grad) * np.linalg.norm(x))


def project_to_surface(spec, seed, max_iter=50):
    """Newton iteration x <- x - rho(x) grad(x) / |grad(x)|^2."""
    x = np.array(seed, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter + 1):
            jet = eval_jet2(spec, x)
            g2 = float(jet.grad @ jet.grad)
            if not (np.isfinite(jet.value) and np.isfinite(g2)):
                raise NoConvergence("projection overflowed")
            if abs(jet.value) < on_surface_tolerance(jet, x):
                return x
            if g2 < 1e-24:
                raise NoConvergence("gradient vanished during projection")
            x = x - jet.value * jet.grad / g2
            if not np.all(np.isfinite(x)):
                raise NoConvergence("projection diverged")
    raise NoConvergence(f"no convergence within {max_iter} Newton steps")


def sample_points(spec, count, rng_seed):
    """Deterministic sample of ``count`` surface points.

    Seeds are uniform in the sampling box; failed projections are redrawn, up
    to 100 * count attempts.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(rng_seed)
    points = []
    for _ in range(100 * count):
        seed = spec.box_center + rng.uniform(-spec.box_halfwidth, spec.box_halfwidth, spec.dim)
        try:
            points.append(project_to_surface(spec, seed))
        except (NoConvergence, DivisionByZero):
            continue
        if len(points) == count:
            return points
    raise SamplingExhausted(f"only {len(points)} of {count} points after {100 * count} attempts")


# --- quadratic defining functions --------------------------------------------------


def quadratic_coefficients(spec, check=True):
    """(Q, b, c) with rho(x) = x.Q.x + b.x + c, read from the jet at 0.

    With ``check`` the representation is verified at a few random points, so
    non-quadratic inputs are refused.
    """
    jet = eval_jet2(spec, np.zeros(spec.dim))
    Q = 0.5 * jet.hess
    b = jet.grad.copy()
    c = jet.value
    if check:
        rng = np.random.default_rng(0)
        for _ in range(3):
            x = rng.uniform(-2.0, 2.0, spec.dim)
            val = eval_value(spec, x)
            model = x @ Q @ x + b @ x + c
            if abs(val - model) > 1e-9 * (1.0 + abs(val)):
                raise InputError("defining function is not a quadratic polynomial")
    return Q, b, c


def _coord_text(i):
    names = ("re", "imi", "imj", "imk")
    return f"{names[i % 4]}({i // 4})"


def quadratic_surface(n_plus_1, Q, b, c, box_center=None, box_halfwidth=DEFAULT_HALFWIDTH):
    """SurfaceSpec for x.Q.x + b.x + c written out in the expression language."""
    dim = 4 * n_plus_1
    Q = 0.5 * (np.asarray(Q, dtype=float) + np.asarray(Q, dtype=float).T)
    terms = []
    for i in range(dim):
        for j in range(i, dim):
            coef = Q[i, j] if i == j else 2.0 * Q[i, j]
            if coef != 0.0:
                mono = f"{_coord_text(i)}^2" if i == j else f"{_coord_text(i)} * {_coord_text(j)}"
                terms.append((coef, mono))
    for i in range(dim):
        if b[i] != 0.0:
            terms.append((float(b[i]), _coord_text(i)))
    if c != 0.0 or not terms:
        terms.append((float(c), None))
    parts = []
    for k, (coef, mono) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = repr(abs(float(coef)))
        body = mag if mono is None else f"{mag} * {mono}"
        if k == 0:
            parts.append(("-" if coef < 0 else "") + body)
        else:
            parts.append(f" {sign} {body}")
    text = f"dim = {n_plus_1}\nrho = {''.join(parts)}\n"
    if box_center is not None:
        text += "box_center = " + ", ".join(repr(float(v)) for v in box_center) + "\n"
    if box_halfwidth != DEFAULT_HALFWIDTH:
        text += f"box_halfwidth = {float(box_halfwidth)!r}\n"
    return parse_surface(text)


def pullback_surface(spec, F):
    """Surface F(M) for a quadratic rho: defining function rho o F^{-1}."""
    Q, b, c = quadratic_coefficients(spec)
    Finv = F.inverse()
    L = Finv.linear_real()
    m = Finv.q0
    Q2 = L.T @ Q @ L
    b2 = L.T @ (2.0 * Q @ m + b)
    c2 = m @ Q @ m + b @ m + c
    center = F(spec.box_center)
    halfwidth = spec.box_halfwidth * max(1.0, float(np.linalg.norm(F.linear_real(), 2)))
    return quadratic_surface(spec.n_plus_1, Q2, b2, c2, center, halfwidth)
