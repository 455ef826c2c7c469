"""Finite volume element matrices over barycentric control volumes.

All matrices are indexed ``[test vertex, trial vertex]``: row ``i`` is the
balance over the control volume of ``z_i`` and column ``j`` the P1 basis
function ``Phi_j``.  Assembly runs over every vertex first; the homogeneous
Dirichlet condition is imposed afterwards by dropping boundary rows and
columns (``restrict=False`` keeps the full matrix).

Coefficient callables take an ``(npts, dim)`` coordinate array.  Scalars
(``q``, ``f``, ``u0``) return ``(npts,)``; the diffusion returns
``(npts, dim, dim)``, or ``(npts,)`` for a scalar coefficient.
"""
from dataclasses import dataclass
from functools import lru_cache
import math
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .quadrature import interval_rule, simplex_rule

MASS_DEGREE = 2
COEFF_DEGREE = 5


@dataclass(frozen=True)
class ProblemSpec:
    """Data of ``D_t^alpha u - div(A grad u) + q u = f`` with ``u = 0`` on the boundary."""

    dim: int
    alpha: float
    diffusion: Callable
    reaction: Callable
    source: Callable
    initial: Callable
    domain: tuple
    T: float = 1.0
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None
    initial_grad: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D problems are supported")

    def grad_u0(self):
        if self.initial_grad is not None:
            return self.initial_grad
        if self.exact_grad is not None:
            return lambda x: self.exact_grad(x, 0.0)
        return None


def eval_diffusion(A, x, dim, tol=1e-12):
    """Evaluate ``A`` at points ``x`` as a ``(npts, dim, dim)`` array, checking symmetry."""
    val = np.asarray(A(x), dtype=float)
    npts = len(x)
    if val.ndim <= 1:
        val = np.broadcast_to(val, (npts,))[:, None, None] * np.eye(dim)
    elif val.shape == (dim, dim):
        val = np.broadcast_to(val, (npts, dim, dim))
    if val.shape != (npts, dim, dim):
        raise ValueError(f"diffusion returned shape {val.shape}, expected {(npts, dim, dim)}")
    asym = np.abs(val - np.swapaxes(val, 1, 2)).max(initial=0.0)
    if asym > tol * max(1.0, np.abs(val).max(initial=0.0)):
        raise ValueError(f"diffusion tensor is not symmetric (max asymmetry {asym:.3e})")
    return val


def _eval_scalar(g, x, *args):
    val = np.asarray(g(x, *args), dtype=float)
    return np.broadcast_to(val, (len(x),)) if val.ndim == 0 else val.reshape(len(x))


@lru_cache(maxsize=None)
def subcell_rule(dim, degree):
    """Quadrature over the barycentric subcells of the reference simplex.

    Returns ``(bary, w)`` with ``bary[l, q]`` the barycentric coordinates
    (w.r.t. the element) of point ``q`` in the subcell of local vertex ``l``
    and ``w[q]`` weights relative to the element measure, so that
    ``int_{subcell l} g = |K| * sum_q w[q] g(x[l, q])``.
    """
    E = np.eye(dim + 1)
    centre = np.full(dim + 1, 1.0 / (dim + 1))
    rule = simplex_rule(dim, degree)
    pieces = []
    for l in range(dim + 1):
        if dim == 1:
            subs = [np.stack([E[l], 0.5 * (E[0] + E[1])])]
        else:
            a, b = E[(l + 1) % 3], E[(l + 2) % 3]
            subs = [np.stack([E[l], 0.5 * (E[l] + a), centre]),
                    np.stack([E[l], centre, 0.5 * (E[l] + b)])]
        pieces.append(np.concatenate([rule.bary @ S for S in subs]))
    bary = np.stack(pieces)
    w = np.tile(rule.weights, len(subs)) / (len(subs) * (dim + 1))
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


def subcell_points(mesh, degree):
    """Physical quadrature points ``(ne, nloc, nq, dim)`` plus the rule itself."""
    bary, w = subcell_rule(mesh.dim, degree)
    coords = mesh.vertices[mesh.elements]
    x = np.einsum("lqi,eid->elqd", bary, coords)
    return x, bary, w


def _scatter(mesh, local, restrict):
    """Sum element matrices ``local[e, l, m]`` into a sparse matrix."""
    el = mesh.elements
    nloc = el.shape[1]
    rows = np.repeat(el, nloc, axis=1).ravel()
    cols = np.tile(el, (1, nloc)).ravel()
    n = mesh.n_vertices
    M = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    if restrict:
        keep = mesh.interior_vertices
        M = M[keep][:, keep]
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def _restrict_vector(mesh, vec, restrict):
    return vec[mesh.interior_vertices] if restrict else vec


def _weighted_mass(mesh, weight, degree):
    x, bary, w = subcell_points(mesh, degree)
    ne, nloc, nq, dim = x.shape
    gw = np.ones((ne, nloc, nq)) if weight is None else weight(x.reshape(-1, dim)).reshape(ne, nloc, nq)
    return mesh.measures[:, None, None] * np.einsum("q,elq,lqm->elm", w, gw, bary)


def assemble_mass_fve(mesh, dual=None, restrict=True, degree=MASS_DEGREE):
    """``B1[i, j] = int_{K*_i} Phi_j``, symmetric positive definite."""
    return _scatter(mesh, _weighted_mass(mesh, None, degree), restrict)


def assemble_reaction_fve(mesh, dual, q, restrict=True, degree=COEFF_DEGREE):
    """``B3[i, j] = int_{K*_i} q Phi_j``; raises if ``q`` is negative anywhere sampled."""
    def weight(pts):
        val = _eval_scalar(q, pts)
        if np.any(val < 0.0):
            raise ValueError("reaction coefficient q is negative at a quadrature point")
        return val
    return _scatter(mesh, _weighted_mass(mesh, weight, degree), restrict)


def assemble_stiffness_fve(mesh, dual, A, restrict=True):
    """``B2[i, j] = -int_{boundary of K*_i} A grad Phi_j . n ds``.

    ``A`` is sampled once per dual segment at its midpoint; the basis
    gradients are constant on each element so this is the only quadrature
    error.  The result is nonsymmetric for non-constant ``A``.
    """
    dim = mesh.dim
    Amid = eval_diffusion(A, dual.seg_midpoint, dim)
    nl = dual.seg_normal * dual.seg_length[:, None]
    An = np.einsum("sdk,sd->sk", Amid, nl)  # A symmetric: (A grad).n = grad.(A n)
    g = mesh.grads[dual.seg_element]  # (ns, nloc, dim)
    vals = -np.einsum("smk,sk->sm", g, An)
    nloc = dim + 1
    local = np.zeros((mesh.n_elements, nloc, nloc))
    np.add.at(local, (dual.seg_element, dual.seg_local), vals)
    return _scatter(mesh, local, restrict)


class LoadAssembler:
    """Reusable load-vector assembly with quadrature points computed once."""

    def __init__(self, mesh, degree=COEFF_DEGREE, restrict=True):
        self.mesh = mesh
        self.restrict = restrict
        x, _, self.w = subcell_points(mesh, degree)
        self.shape = x.shape[:3]
        self.points = x.reshape(-1, mesh.dim)

    def __call__(self, f, t):
        fx = _eval_scalar(f, self.points, t).reshape(self.shape)
        local = self.mesh.measures[:, None] * (fx @ self.w)
        vec = np.bincount(self.mesh.elements.ravel(), weights=local.ravel(),
                          minlength=self.mesh.n_vertices)
        return _restrict_vector(self.mesh, vec, self.restrict)


def assemble_load(mesh, dual, f, t, restrict=True, degree=COEFF_DEGREE):
    """``F[j] = int_{K*_j} f(x, t) dx``."""
    return LoadAssembler(mesh, degree, restrict)(f, t)


def assemble_flux_load(mesh, dual, A, grad, restrict=True, degree=COEFF_DEGREE):
    """``g[i] = -int_{boundary of K*_i} A grad(u) . n ds`` for a given gradient field."""
    dim = mesh.dim
    if dim == 1:
        pts = dual.seg_p1[:, None, :]
        w = np.ones(1)
    else:
        rule = interval_rule(degree)
        s = rule.bary[:, 1]
        pts = dual.seg_p1[:, None, :] + s[None, :, None] * (dual.seg_p2 - dual.seg_p1)[:, None, :]
        w = rule.weights
    ns, nq, _ = pts.shape
    flat = pts.reshape(-1, dim)
    Ag = np.einsum("pdk,pk->pd", eval_diffusion(A, flat, dim),
                   np.asarray(grad(flat), dtype=float).reshape(-1, dim))
    flux = np.einsum("sqd,sd->sq", Ag.reshape(ns, nq, dim), dual.seg_normal)
    vals = -dual.seg_length * (flux @ w)
    vec = np.bincount(dual.seg_vertex, weights=vals, minlength=mesh.n_vertices)
    return _restrict_vector(mesh, vec, restrict)


def assemble_system(B1, B2, B3, alpha, tau):
    """``G = B1 / Gamma(2 - alpha) + tau^alpha (B2 + B3)``."""
    if not (B1.shape == B2.shape == B3.shape) or B1.shape[0] != B1.shape[1]:
        raise ValueError(f"dimension mismatch: {B1.shape}, {B2.shape}, {B3.shape}")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    G = B1 / math.gamma(2.0 - alpha) + tau ** alpha * (B2 + B3)
    return sp.csr_matrix(G)


def write_matrix(M, path):
    """Coordinate text dump, one ``i j value`` line per stored entry."""
    C = sp.coo_matrix(M)
    order = np.lexsort((C.col, C.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{C.row[k]} {C.col[k]} {C.data[k]:.17g}\n")
