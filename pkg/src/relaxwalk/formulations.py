"""Translate a network + input domain + linear objective into LP models.

Three model families:

* region LP: binaries fixed to one activation pattern, constraints
  expressed directly in the input variables via pre-composed affine maps
  (small: it is solved thousands of times during a walk);
* big-M relaxation: the full (x, g, h, z, y) system with activation
  indicators relaxed to z in [0, 1], plus fix/unfix machinery used by the
  restart generator and branch-and-bound;
* MILP data: the relaxation plus the list of z columns required integral.

Indicator logic is realized as big-M rows with a symmetric coefficient
M = max(ub, 0) - min(lb, 0) per neuron, from interval-propagated
pre-activation bounds: h >= g, h <= g + M(1-z), h <= M z. Neurons whose
interval proves a fixed sign get their z bound pinned at build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linprog as lp
from .network import Network, NeuronBounds, forward, layer_bounds


class InfeasibleDomainError(ValueError):
    """The input domain is malformed or provably empty."""


@dataclass
class Objective:
    """Maximize c . f(x) where f is the network function."""

    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.ndim != 1 or not np.all(np.isfinite(self.c)):
            raise ValueError("objective must be a finite vector")

    def value(self, net: Network, x: np.ndarray) -> float:
        return float(self.c @ forward(net, x).output)


class InputDomain:
    """A finite box, optionally intersected with an L1 ball |x - anchor|_1
    <= radius. Construction proves nonemptiness: the box point closest to
    the anchor (its clip) is also closest in L1, so it certifies whether
    the intersection is empty."""

    def __init__(self, lo, hi, l1_anchor=None, l1_radius=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise InfeasibleDomainError("box must be two equal-length vectors")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise InfeasibleDomainError("box must be finite in every coordinate")
        if np.any(self.lo > self.hi):
            raise InfeasibleDomainError("box lower bound exceeds upper bound")
        if (l1_anchor is None) != (l1_radius is None):
            raise InfeasibleDomainError("anchor and radius must come together")
        self.l1_anchor = None
        self.l1_radius = None
        if l1_anchor is not None:
            anchor = np.asarray(l1_anchor, dtype=float)
            if anchor.shape != self.lo.shape or not np.all(np.isfinite(anchor)):
                raise InfeasibleDomainError("anchor must be a finite point of the space")
            radius = float(l1_radius)
            if not radius > 0.0 or not np.isfinite(radius):
                raise InfeasibleDomainError("L1 radius must be positive and finite")
            certificate = np.clip(anchor, self.lo, self.hi)
            if float(np.sum(np.abs(certificate - anchor))) > radius:
                raise InfeasibleDomainError("box and L1 ball do not intersect")
            self.l1_anchor = anchor
            self.l1_radius = radius

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            return False
        if self.l1_anchor is not None:
            if float(np.sum(np.abs(x - self.l1_anchor))) > self.l1_radius + tol:
                return False
        return True

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def effective_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Tightest cheap box enclosing the domain (box cap L1 envelope)."""
        if self.l1_anchor is None:
            return self.lo, self.hi
        lo = np.maximum(self.lo, self.l1_anchor - self.l1_radius)
        hi = np.minimum(self.hi, self.l1_anchor + self.l1_radius)
        return lo, hi

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform box sample, rejected into the L1 ball when present;
        falls back to shrinking toward the certified feasible point."""
        lo, hi = self.effective_box()
        x = rng.uniform(lo, hi)
        if self.l1_anchor is None:
            return x
        for _ in range(100):
            if self.contains(x, tol=0.0):
                return x
            x = rng.uniform(lo, hi)
        inside = np.clip(self.l1_anchor, self.lo, self.hi)
        t = 1.0
        for _ in range(60):
            cand = inside + t * (x - inside)
            if self.contains(cand, tol=0.0):
                return cand
            t *= 0.5
        return inside


@dataclass
class DomainEncoding:
    """LP fragment for membership in an InputDomain.

    Variables are [x (n), aux (n_aux)]; rows are (coeffs, sense, rhs) over
    that stacked vector. Box membership is pure variable bounds; an L1
    ball adds one |deviation| variable per coordinate and a budget row.
    """

    x_lo: np.ndarray
    x_hi: np.ndarray
    aux_lo: np.ndarray
    aux_hi: np.ndarray
    rows: list[tuple[np.ndarray, str, float]]

    @property
    def n_x(self) -> int:
        return self.x_lo.shape[0]

    @property
    def n_aux(self) -> int:
        return self.aux_lo.shape[0]


def encode_domain(domain: InputDomain) -> DomainEncoding:
    n = domain.dim
    if domain.l1_anchor is None:
        return DomainEncoding(domain.lo.copy(), domain.hi.copy(),
                              np.zeros(0), np.zeros(0), [])
    anchor, radius = domain.l1_anchor, domain.l1_radius
    rows = []
    width = 2 * n
    for i in range(n):
        # u_i >= x_i - anchor_i  and  u_i >= anchor_i - x_i
        r1 = np.zeros(width)
        r1[i] = 1.0
        r1[n + i] = -1.0
        rows.append((r1, lp.LE, float(anchor[i])))
        r2 = np.zeros(width)
        r2[i] = -1.0
        r2[n + i] = -1.0
        rows.append((r2, lp.LE, float(-anchor[i])))
    budget = np.zeros(width)
    budget[n:] = 1.0
    rows.append((budget, lp.LE, radius))
    return DomainEncoding(domain.lo.copy(), domain.hi.copy(),
                          np.zeros(n), np.full(n, np.inf), rows)


def build_region_lp(net: Network, pattern, domain: InputDomain,
                    obj: Objective) -> lp.LpModel:
    """LP over one linear region: maximize the objective subject to the
    pattern's sign constraints on every hidden pre-activation, expressed
    directly in x, plus domain membership."""
    if pattern.sizes != net.hidden_sizes:
        raise ValueError("pattern does not match the network shape")
    if obj.c.shape[0] != net.output_dim:
        raise ValueError("objective length must equal the output dimension")
    enc = encode_domain(domain)
    n = enc.n_x + enc.n_aux

    rows, senses, rhs = [], [], []
    for coeffs, sense, b in enc.rows:
        rows.append(coeffs)
        senses.append(sense)
        rhs.append(b)

    # running affine map of the previous post-activation in terms of x
    A = np.eye(net.input_dim)
    a = np.zeros(net.input_dim)
    for li, layer in enumerate(net.hidden_layers):
        g_mat = layer.weights @ A
        g_off = layer.weights @ a + layer.bias
        active = pattern.active[li]
        for i in range(layer.size):
            coeffs = np.zeros(n)
            coeffs[:enc.n_x] = g_mat[i]
            if active[i]:
                rows.append(coeffs)
                senses.append(lp.GE)
                rhs.append(float(-g_off[i]))
            else:
                rows.append(coeffs)
                senses.append(lp.LE)
                rhs.append(float(-g_off[i]))
        mask = active.astype(float)
        A = g_mat * mask[:, None]
        a = g_off * mask

    out = net.layers[-1]
    y_mat = out.weights @ A
    y_off = out.weights @ a + out.bias
    c = np.zeros(n)
    c[:enc.n_x] = obj.c @ y_mat
    offset = float(obj.c @ y_off)

    lo = np.concatenate([enc.x_lo, enc.aux_lo])
    hi = np.concatenate([enc.x_hi, enc.aux_hi])
    rows_arr = np.array(rows) if rows else np.zeros((0, n))
    return lp.LpModel(c=c, rows=rows_arr, senses=senses,
                      rhs=np.asarray(rhs, float), lo=lo, hi=hi,
                      objective_offset=offset)


@dataclass
class RelaxationModel:
    """Big-M relaxation with a stack of temporary activation fixings.

    Single-owner mutable: fix/unfix edit the underlying LP's z bounds in
    place and must not be shared across workers. Clearing the stack
    restores the freshly built model bit for bit.
    """

    lp_model: lp.LpModel
    x_cols: np.ndarray
    aux_cols: np.ndarray
    g_cols: list[np.ndarray]
    h_cols: list[np.ndarray]
    z_cols: list[np.ndarray]
    y_cols: np.ndarray
    stable_active: list[np.ndarray]
    stable_inactive: list[np.ndarray]
    _stack: list[tuple[int, int, float, float]] = field(default_factory=list)
    _fixed: set = field(default_factory=set)

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(z.shape[0] for z in self.z_cols)

    def fix_activation(self, layer: int, neuron: int, state: int) -> None:
        """Pin z[layer][neuron] to `state` (0 or 1), recording the previous
        bounds so the fix can be undone exactly."""
        if state not in (0, 1):
            raise ValueError("state must be 0 or 1")
        key = (layer, neuron)
        if key in self._fixed:
            raise ValueError(f"activation {key} is already fixed")
        col = int(self.z_cols[layer][neuron])
        self._stack.append((layer, neuron, float(self.lp_model.lo[col]),
                            float(self.lp_model.hi[col])))
        self._fixed.add(key)
        self.lp_model.lo[col] = float(state)
        self.lp_model.hi[col] = float(state)

    def unfix_activation(self, layer: int, neuron: int) -> None:
        key = (layer, neuron)
        if key not in self._fixed:
            raise ValueError(f"activation {key} is not fixed")
        for idx in range(len(self._stack) - 1, -1, -1):
            l, i, old_lo, old_hi = self._stack[idx]
            if (l, i) == key:
                col = int(self.z_cols[layer][neuron])
                self.lp_model.lo[col] = old_lo
                self.lp_model.hi[col] = old_hi
                del self._stack[idx]
                self._fixed.discard(key)
                return

    def clear_all_fixings(self) -> None:
        while self._stack:
            layer, neuron, _, _ = self._stack[-1]
            self.unfix_activation(layer, neuron)

    @property
    def fixing_count(self) -> int:
        return len(self._stack)

    def x_values(self, solution: np.ndarray) -> np.ndarray:
        return solution[self.x_cols]

    def z_values(self, solution: np.ndarray) -> list[np.ndarray]:
        return [solution[cols] for cols in self.z_cols]


@dataclass
class MilpModel:
    """Relaxation plus integrality marks on the genuinely binary columns
    (sign-stable neurons carry no integer column)."""

    relaxation: RelaxationModel
    integer_cols: np.ndarray
    integer_index: list[tuple[int, int]]  # (layer, neuron) per integer col


def build_relaxation(net: Network, domain: InputDomain, obj: Objective,
                     bounds: NeuronBounds) -> RelaxationModel:
    if obj.c.shape[0] != net.output_dim:
        raise ValueError("objective length must equal the output dimension")
    if len(bounds.lower) != len(net.hidden_layers):
        raise ValueError("bounds do not match the network shape")
    for li, layer in enumerate(net.hidden_layers):
        if bounds.lower[li].shape[0] != layer.size:
            raise ValueError(f"bounds for layer {li} have the wrong width")
        if not (np.all(np.isfinite(bounds.lower[li]))
                and np.all(np.isfinite(bounds.upper[li]))):
            raise ValueError("big-M rows need finite pre-activation bounds")

    enc = encode_domain(domain)
    lo_parts = [enc.x_lo, enc.aux_lo]
    hi_parts = [enc.x_hi, enc.aux_hi]
    at = enc.n_x + enc.n_aux
    x_cols = np.arange(enc.n_x)
    aux_cols = np.arange(enc.n_x, at)

    g_cols, h_cols, z_cols = [], [], []
    stable_active, stable_inactive = [], []
    for li, layer in enumerate(net.hidden_layers):
        w = layer.size
        lb = bounds.lower[li]
        ub = bounds.upper[li]
        g_cols.append(np.arange(at, at + w))
        at += w
        h_cols.append(np.arange(at, at + w))
        at += w
        z_cols.append(np.arange(at, at + w))
        at += w
        lo_parts.extend([lb, np.zeros(w)])
        hi_parts.extend([ub, np.maximum(ub, 0.0)])
        inactive = ub <= 0.0
        active = ~inactive & (lb >= 0.0)
        z_lo = np.where(active, 1.0, 0.0)
        z_hi = np.where(inactive, 0.0, 1.0)
        lo_parts.append(z_lo)
        hi_parts.append(z_hi)
        stable_active.append(active)
        stable_inactive.append(inactive)
    y_cols = np.arange(at, at + net.output_dim)
    at += net.output_dim
    lo_parts.append(np.full(net.output_dim, -np.inf))
    hi_parts.append(np.full(net.output_dim, np.inf))

    n = at
    rows, senses, rhs = [], [], []
    for coeffs, sense, b in enc.rows:
        padded = np.zeros(n)
        padded[:coeffs.shape[0]] = coeffs
        rows.append(padded)
        senses.append(sense)
        rhs.append(b)

    prev_cols = x_cols
    for li, layer in enumerate(net.hidden_layers):
        lb = bounds.lower[li]
        ub = bounds.upper[li]
        big_m = np.maximum(ub, 0.0) - np.minimum(lb, 0.0)
        for i in range(layer.size):
            g = g_cols[li][i]
            h = h_cols[li][i]
            z = z_cols[li][i]
            # g - W h_prev = b
            row = np.zeros(n)
            row[g] = 1.0
            row[prev_cols] = -layer.weights[i]
            rows.append(row)
            senses.append(lp.EQ)
            rhs.append(float(layer.bias[i]))
            # h >= g
            row = np.zeros(n)
            row[h] = 1.0
            row[g] = -1.0
            rows.append(row)
            senses.append(lp.GE)
            rhs.append(0.0)
            # h <= g + M (1 - z)
            row = np.zeros(n)
            row[h] = 1.0
            row[g] = -1.0
            row[z] = big_m[i]
            rows.append(row)
            senses.append(lp.LE)
            rhs.append(float(big_m[i]))
            # h <= M z
            row = np.zeros(n)
            row[h] = 1.0
            row[z] = -big_m[i]
            rows.append(row)
            senses.append(lp.LE)
            rhs.append(0.0)
        prev_cols = h_cols[li]

    out = net.layers[-1]
    for k in range(net.output_dim):
        row = np.zeros(n)
        row[y_cols[k]] = 1.0
        row[prev_cols] = -out.weights[k]
        rows.append(row)
        senses.append(lp.EQ)
        rhs.append(float(out.bias[k]))

    c = np.zeros(n)
    c[y_cols] = obj.c
    model = lp.LpModel(c=c, rows=np.array(rows), senses=senses,
                       rhs=np.asarray(rhs, float),
                       lo=np.concatenate(lo_parts),
                       hi=np.concatenate(hi_parts))
    return RelaxationModel(
        lp_model=model, x_cols=x_cols, aux_cols=aux_cols, g_cols=g_cols,
        h_cols=h_cols, z_cols=z_cols, y_cols=y_cols,
        stable_active=stable_active, stable_inactive=stable_inactive)


def build_milp(net: Network, domain: InputDomain, obj: Objective,
               bounds: NeuronBounds) -> MilpModel:
    relaxation = build_relaxation(net, domain, obj, bounds)
    cols, index = [], []
    for li in range(len(relaxation.z_cols)):
        undecided = ~(relaxation.stable_active[li]
                      | relaxation.stable_inactive[li])
        for i in np.nonzero(undecided)[0]:
            cols.append(int(relaxation.z_cols[li][i]))
            index.append((li, int(i)))
    return MilpModel(relaxation=relaxation,
                     integer_cols=np.asarray(cols, dtype=int),
                     integer_index=index)


def domain_bounds(net: Network, domain: InputDomain) -> NeuronBounds:
    """Interval pre-activation bounds over the domain's enclosing box."""
    lo, hi = domain.effective_box()
    return layer_bounds(net, lo, hi)
