"""
Taylor-coefficient algebra of inner-space gauge fields to second order.

Every inner-space polynomial ``P^M(X) = p0^M + p1^M_R X^R + p2^M_RS X^R X^S``
is stored as a triple of arrays ``(p0, p1, p2)`` with leading batch axes
(spacetime indices) followed by the inner indices ``M, R, S``; ``p2`` is
symmetric in its last two axes. Spacetime derivatives are caller-supplied
arrays whose *first* axis is the derivative direction.

The only non-linear operation needed is the truncated transport product
``(P . nabla) Q^M = P^L nabla_L Q^M``; field strengths and both gauge
variations are assembled from it. Terms of order X^3 and above are
discarded.
"""
from dataclasses import dataclass

import numpy as np

from .core import ETA, ConstraintViolation, check_dimension

__all__ = [
    "GaugeParameterCoefficients", "GaugeCoefficients", "FieldStrengthCoefficients",
    "GaugeDerivatives", "ParameterDerivatives", "MomentTensors",
    "decompose_sym_antisym", "field_strength_from_gauge", "gauge_vary_gauge",
    "gauge_vary_field_strength", "cube_moments", "effective_lagrangian",
    "transport", "transport_cubic", "divergence_residual", "project_divergence_free",
    "random_parameter", "random_gauge", "random_gauge_derivatives",
    "random_parameter_derivatives", "transformation_rules_report", "PAIRS",
]

# Independent (mu < nu) spacetime index pairs of an antisymmetric tensor.
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

_CONSTRAINT_RTOL = 1e-12


def _sym(t):
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def divergence_residual(p1, p2):
    """
    Largest violation of sum_M p1^M_M = 0 and sum_M p2^M_MS = 0, relative to
    the largest coefficient magnitude.
    """
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    tr1 = np.trace(p1, axis1=-2, axis2=-1)
    tr2 = np.einsum("...mms->...s", p2)
    scale = max(np.max(np.abs(p1), initial=0.0), np.max(np.abs(p2), initial=0.0))
    worst = max(np.max(np.abs(tr1), initial=0.0), np.max(np.abs(tr2), initial=0.0))
    return worst / scale if scale > 0 else 0.0


def _require_divergence_free(name, p1, p2):
    res = divergence_residual(p1, p2)
    if res > _CONSTRAINT_RTOL:
        raise ConstraintViolation(f"{name} violates the divergence-free constraint (residual {res:.3e})")


def project_divergence_free(p1, p2):
    """
    Project coefficient tensors onto the divergence-free subspace.

    ``p1`` loses its trace; ``p2`` is symmetrized in its last two axes and
    corrected by ``(delta^M_R c_S + delta^M_S c_R) / (D + 1)``.
    """
    p1 = np.array(p1, dtype=float)
    p2 = _sym(np.array(p2, dtype=float))
    D = p1.shape[-1]
    eye = np.eye(D)
    p1 = p1 - np.trace(p1, axis1=-2, axis2=-1)[..., None, None] * eye / D
    c = np.einsum("...mms->...s", p2)
    corr = np.einsum("mr,...s->...mrs", eye, c)
    p2 = p2 - (corr + np.swapaxes(corr, -1, -2)) / (D + 1)
    return p1, p2


@dataclass(frozen=True)
class GaugeParameterCoefficients:
    """eps0[M], eps1[M, N], eps2[M, R, S] of the gauge parameter."""

    eps0: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray

    def __post_init__(self):
        D = check_dimension(np.shape(self.eps0)[-1])
        _set_arrays(self, ("eps0", "eps1", "eps2"), [(D,), (D, D), (D, D, D)])
        _require_divergence_free("gauge parameter", self.eps1, self.eps2)
        _require_symmetric("eps2", self.eps2)

    @property
    def D(self):
        return self.eps0.shape[-1]

    def as_tuple(self):
        return self.eps0, self.eps1, self.eps2


@dataclass(frozen=True)
class ParameterDerivatives:
    """Spacetime derivatives d[rho] of (eps0, eps1, eps2)."""

    d0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        D = check_dimension(np.shape(self.d0)[-1])
        _set_arrays(self, ("d0", "d1", "d2"), [(4, D), (4, D, D), (4, D, D, D)])
        _require_divergence_free("parameter derivative", self.d1, self.d2)

    @classmethod
    def zeros(cls, D):
        return cls(np.zeros((4, D)), np.zeros((4, D, D)), np.zeros((4, D, D, D)))

    def as_tuple(self):
        return self.d0, self.d1, self.d2


@dataclass(frozen=True)
class GaugeCoefficients:
    """a0[mu, M], a1[mu, M, N], a2[mu, M, R, S] with lower spacetime index."""

    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        D = check_dimension(np.shape(self.a0)[-1])
        _set_arrays(self, ("a0", "a1", "a2"), [(4, D), (4, D, D), (4, D, D, D)])
        _require_divergence_free("gauge field", self.a1, self.a2)
        _require_symmetric("a2", self.a2)

    @property
    def D(self):
        return self.a0.shape[-1]

    def as_tuple(self):
        return self.a0, self.a1, self.a2


@dataclass(frozen=True)
class GaugeDerivatives:
    """d0[rho, mu, M] = d_rho a0_mu^M, and likewise d1, d2."""

    d0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        D = check_dimension(np.shape(self.d0)[-1])
        _set_arrays(self, ("d0", "d1", "d2"), [(4, 4, D), (4, 4, D, D), (4, 4, D, D, D)])
        _require_divergence_free("gauge derivative", self.d1, self.d2)

    @classmethod
    def zeros(cls, D):
        return cls(np.zeros((4, 4, D)), np.zeros((4, 4, D, D)), np.zeros((4, 4, D, D, D)))

    def as_tuple(self):
        return self.d0, self.d1, self.d2


@dataclass(frozen=True)
class FieldStrengthCoefficients:
    """
    f0[mu, nu, M], f1[mu, nu, M, N], f2[mu, nu, M, R, S], lower spacetime indices.

    Stored as full 4x4 blocks antisymmetric in (mu, nu); `packed` returns the
    six independent pairs listed in `PAIRS`.
    """

    f0: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        D = check_dimension(np.shape(self.f0)[-1])
        _set_arrays(self, ("f0", "f1", "f2"), [(4, 4, D), (4, 4, D, D), (4, 4, D, D, D)])
        for name in ("f0", "f1", "f2"):
            t = getattr(self, name)
            scale = np.max(np.abs(t), initial=0.0)
            if np.max(np.abs(t + np.swapaxes(t, 0, 1)), initial=0.0) > 1e-12 * scale:
                raise ValueError(f"{name} must be antisymmetric in its spacetime indices")
        _require_divergence_free("field strength", self.f1, self.f2)
        _require_symmetric("f2", self.f2)

    @classmethod
    def from_packed(cls, f0, f1, f2):
        def unpack(p):
            p = np.asarray(p, dtype=float)
            full = np.zeros((4, 4) + p.shape[1:])
            for k, (m, n) in enumerate(PAIRS):
                full[m, n] = p[k]
                full[n, m] = -p[k]
            return full
        return cls(unpack(f0), unpack(f1), unpack(f2))

    @property
    def D(self):
        return self.f0.shape[-1]

    def packed(self):
        idx = tuple(np.array(PAIRS).T)
        return self.f0[idx], self.f1[idx], self.f2[idx]

    def as_tuple(self):
        return self.f0, self.f1, self.f2


def _set_arrays(obj, names, shapes):
    for name, shape in zip(names, shapes):
        arr = np.array(getattr(obj, name), dtype=float)
        if arr.shape != shape:
            raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(obj, name, arr)


def _require_symmetric(name, t):
    scale = np.max(np.abs(t), initial=0.0)
    if np.max(np.abs(t - np.swapaxes(t, -1, -2)), initial=0.0) > 1e-12 * scale:
        raise ValueError(f"{name} must be symmetric in its last two inner indices")


@dataclass(frozen=True)
class MomentTensors:
    vol: float
    m1: np.ndarray
    m2: np.ndarray


def decompose_sym_antisym(t):
    """
    Split a square matrix into antisymmetric, symmetric-traceless and trace parts.

    ``t == antisym + sym_traceless + trace / D * identity``.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {t.shape}")
    D = t.shape[0]
    trace = float(np.trace(t))
    antisym = 0.5 * (t - t.T)
    sym_traceless = 0.5 * (t + t.T) - trace / D * np.eye(D)
    return antisym, sym_traceless, trace


def transport(x, y):
    """
    Degree 0..2 coefficients of ``x^L nabla_L y^M`` for polynomial triples.

    With ``nabla_L y^M = y1^M_L + 2 y2^M_LS X^S`` the product rows are::

        p0^M    = x0^L y1^M_L
        p1^M_R  = 2 x0^L y2^M_LR + x1^L_R y1^M_L
        p2^M_RS = sym_RS(2 x1^L_R y2^M_LS) + x2^L_RS y1^M_L

    Batch axes of ``x`` and ``y`` broadcast against each other.
    """
    x0, x1, x2 = x
    _, y1, y2 = y
    p0 = np.einsum("...l,...ml->...m", x0, y1)
    p1 = 2 * np.einsum("...l,...mlr->...mr", x0, y2) + np.einsum("...lr,...ml->...mr", x1, y1)
    p2 = _sym(2 * np.einsum("...lr,...mls->...mrs", x1, y2)) + np.einsum("...lrs,...ml->...mrs", x2, y1)
    return p0, p1, p2


def transport_cubic(x, y):
    """Discarded X^3 coefficient ``sym_RST(2 x2^L_RS y2^M_LT)`` of `transport`."""
    t = 2 * np.einsum("...lrs,...mlt->...mrst", x[2], y[2])
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    nb = t.ndim - 4
    lead = tuple(range(nb + 1))
    return sum(np.transpose(t, lead + tuple(nb + 1 + p for p in perm)) for perm in perms) / 6


def _commutator(x, y):
    px, py = transport(x, y), transport(y, x)
    return tuple(a - b for a, b in zip(px, py))


def field_strength_from_gauge(a, da):
    """
    Field-strength Taylor coefficients of a gauge field.

    Parameters
    ----------
    a : GaugeCoefficients
    da : GaugeDerivatives
        ``da.dk[rho, mu, ...]`` is d_rho of ``a.ak[mu, ...]``.

    Returns
    -------
    FieldStrengthCoefficients
        ``f_{mu nu} = d_mu a_nu - d_nu a_mu + [a_mu, a_nu]`` order by order,
        where ``[x, y] = transport(x, y) - transport(y, x)``. At order zero
        this reads ``d_mu a_nu^M - d_nu a_mu^M + a_nu^M_N a_mu^N - a_mu^M_N a_nu^N``.
    """
    if a.D != da.d0.shape[-1]:
        raise ValueError("gauge field and derivative dimensions differ")
    amu = tuple(c[:, None] for c in a.as_tuple())
    anu = tuple(c[None, :] for c in a.as_tuple())
    bracket = _commutator(amu, anu)
    curl = tuple(d - np.swapaxes(d, 0, 1) for d in da.as_tuple())
    return FieldStrengthCoefficients(*(c + b for c, b in zip(curl, bracket)))


def gauge_vary_gauge(a, eps, deps=None):
    """
    Infinitesimal gauge variation of the gauge-field coefficients.

    ``delta a_mu = d_mu eps + transport(a_mu, eps) - transport(eps, a_mu)``;
    the first two rows are::

        da0_mu^M   = d_mu eps^M + eps^M_N a_mu^N - a_mu^M_N eps^N
        da1_mu^M_N = d_mu eps^M_N + eps^M_R a_mu^R_N - a_mu^M_R eps^R_N
                     + 2 a_mu^R eps^M_RN - 2 eps^R a_mu^M_RN
    """
    if deps is None:
        deps = ParameterDerivatives.zeros(eps.D)
    if a.D != eps.D or eps.D != deps.d0.shape[-1]:
        raise ValueError("inner dimensions of gauge field and parameter differ")
    e = tuple(c[None] for c in eps.as_tuple())
    comm = _commutator(a.as_tuple(), e)
    return GaugeCoefficients(*(d + c for d, c in zip(deps.as_tuple(), comm)))


def gauge_vary_field_strength(f, eps):
    """
    Homogeneous gauge variation ``delta f = transport(f, eps) - transport(eps, f)``.

    Order zero: ``eps^M_N f^N - f^M_N eps^N``.
    """
    if f.D != eps.D:
        raise ValueError("inner dimensions of field strength and parameter differ")
    e = tuple(c[None, None] for c in eps.as_tuple())
    return FieldStrengthCoefficients(*_commutator(f.as_tuple(), e))


def cube_moments(D, l_P):
    """Volume, first and second moments of the cube [-l_P/2, l_P/2]^D."""
    D = check_dimension(D)
    if not l_P > 0:
        raise ValueError("l_P must be positive")
    return MomentTensors(l_P**D, np.zeros(D), l_P ** (D + 2) / 12 * np.eye(D))


def effective_lagrangian(f, consts, g):
    """
    Inner-space-integrated Lagrangian density of the field-strength modes (N/m^2).

    ``-(c^4/G)/(4 g^2) * [f0.f0 + l_P^2/12 f1.f1 + l_P^2/6 f0.tr(f2)]`` with
    spacetime indices raised by the Minkowski metric and inner indices by delta.
    """
    if g == 0:
        raise ValueError("coupling g must be non-zero")
    w = np.outer(np.diag(ETA), np.diag(ETA))
    lead = np.einsum("mn,mnM,mnM->", w, f.f0, f.f0)
    rot = np.einsum("mn,mnMR,mnMR->", w, f.f1, f.f1)
    mix = np.einsum("mn,mnM,mnMRR->", w, f.f0, f.f2)
    l2 = consts.l_P**2
    return -(consts.c**4 / consts.G) / (4 * g**2) * (lead + l2 / 12 * rot + l2 / 6 * mix)


def random_parameter(rng, D, scale=1.0, orders=(0, 1, 2)):
    """Random divergence-free gauge parameter; orders outside `orders` are zero."""
    e0 = rng.normal(size=D) if 0 in orders else np.zeros(D)
    e1 = rng.normal(size=(D, D)) if 1 in orders else np.zeros((D, D))
    e2 = rng.normal(size=(D, D, D)) if 2 in orders else np.zeros((D, D, D))
    e1, e2 = project_divergence_free(e1, e2)
    return GaugeParameterCoefficients(scale * e0, scale * e1, scale * e2)


def random_parameter_derivatives(rng, D, scale=1.0, orders=(0, 1, 2)):
    d0 = rng.normal(size=(4, D)) if 0 in orders else np.zeros((4, D))
    d1 = rng.normal(size=(4, D, D)) if 1 in orders else np.zeros((4, D, D))
    d2 = rng.normal(size=(4, D, D, D)) if 2 in orders else np.zeros((4, D, D, D))
    d1, d2 = project_divergence_free(d1, d2)
    return ParameterDerivatives(scale * d0, scale * d1, scale * d2)


def random_gauge(rng, D, scale=1.0, a2_support=None):
    """
    Random divergence-free gauge field.

    ``a2_support`` restricts the second-order coefficient to the listed
    spacetime components (an empty tuple switches it off).
    """
    a0 = rng.normal(size=(4, D))
    a1, a2 = project_divergence_free(rng.normal(size=(4, D, D)), rng.normal(size=(4, D, D, D)))
    if a2_support is not None:
        mask = np.zeros(4)
        mask[list(a2_support)] = 1.0
        a2 = a2 * mask[:, None, None, None]
    return GaugeCoefficients(scale * a0, scale * a1, scale * a2)


def random_gauge_derivatives(rng, D, scale=1.0, a2_support=None):
    d0 = rng.normal(size=(4, 4, D))
    d1, d2 = project_divergence_free(rng.normal(size=(4, 4, D, D)), rng.normal(size=(4, 4, D, D, D)))
    if a2_support is not None:
        mask = np.zeros(4)
        mask[list(a2_support)] = 1.0
        d2 = d2 * mask[None, :, None, None, None]
    return GaugeDerivatives(scale * d0, scale * d1, scale * d2)


def transformation_rules_report():
    """Human-readable listing of the closed-form rules used up to order X^2."""
    return "\n".join([
        "Taylor-coefficient rules (lower mu, nu; inner indices M, N, R, S; sym = symmetrize in R,S)",
        "",
        "transport product (x . nabla) y, truncated at X^2:",
        "  p^M        = x^L y^M_L",
        "  p^M_R      = 2 x^L y^M_LR + x^L_R y^M_L",
        "  p^M_RS     = sym[2 x^L_R y^M_LS] + x^L_RS y^M_L",
        "  (discarded)  sym_RST[2 x^L_RS y^M_LT] at X^3",
        "",
        "field strength f = d_mu a_nu - d_nu a_mu + (a_mu.nabla)a_nu - (a_nu.nabla)a_mu:",
        "  f_mn^M      = d_m a_n^M - d_n a_m^M + a_n^M_N a_m^N - a_m^M_N a_n^N",
        "  f_mn^M_N    = d_m a_n^M_N - d_n a_m^M_N + a_n^M_R a_m^R_N - a_m^M_R a_n^R_N",
        "                + 2 a_m^R a_n^M_RN - 2 a_n^R a_m^M_RN",
        "  f_mn^M_RS   = d_m a_n^M_RS - d_n a_m^M_RS + sym[2 a_m^L_R a_n^M_LS - 2 a_n^L_R a_m^M_LS]",
        "                + a_m^L_RS a_n^M_L - a_n^L_RS a_m^M_L",
        "",
        "gauge field variation da = d eps + (a.nabla)eps - (eps.nabla)a:",
        "  da_m^M      = d_m eps^M + eps^M_N a_m^N - a_m^M_N eps^N",
        "  da_m^M_N    = d_m eps^M_N + eps^M_R a_m^R_N - a_m^M_R eps^R_N",
        "                + 2 a_m^R eps^M_RN - 2 eps^R a_m^M_RN",
        "  da_m^M_RS   = d_m eps^M_RS + sym[2 a_m^L_R eps^M_LS - 2 eps^L_R a_m^M_LS]",
        "                + a_m^L_RS eps^M_L - eps^L_RS a_m^M_L",
        "",
        "field strength variation df = (f.nabla)eps - (eps.nabla)f:",
        "  df_mn^M     = eps^M_N f_mn^N - f_mn^M_N eps^N",
        "  df_mn^M_N   = eps^M_R f_mn^R_N - f_mn^M_R eps^R_N + 2 f_mn^R eps^M_RN - 2 eps^R f_mn^M_RN",
        "  df_mn^M_RS  = sym[2 f_mn^L_R eps^M_LS - 2 eps^L_R f_mn^M_LS]",
        "                + f_mn^L_RS eps^M_L - eps^L_RS f_mn^M_L",
        "",
        "With eps^M_RS = a_m^M_RS = f_mn^M_RS = 0 the X^2 rows reduce to d_m eps^M_RS and 0.",
        "",
    ])
