"""
Existence certificates for discrete stream functions.

certify() turns any Morley function v (usually a Newton root) into a
Certificate: it computes the a priori constant kappa, the discrete inf-sup
constant of the linearisation at Jv and its transfer to the continuous level,
the residual bound mu_hat and finally the Newton-Kantorovich test
2 L mu_hat < beta0_hat^2 with the existence and uniqueness radii.

Eigenvalue iterates are only accurate to the solver tolerance, so upper bounds
are inflated and lower bounds deflated by (1 + tol) / (1 - tol) before they
enter any formula. The raw values are kept alongside.
"""

import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import (Grams, SourceTerm, explicit_constants, gamma_gram, gram_matrices, linearised_matrix,
                       mu_res, nonlinear_residual, one_minus_J_norm)
from .config import NEGATIVE_QUADRATIC_CLAMP, TOL_EIG, TOL_EIG_J
from .errors import CertificateInvariantError, SingularMatrixError
from .hct import operator_norm_J
from .mesh import mesh_constants
from .morley import MorleyFunction
from .spectral import GeneralFactor, Pencil, SpdFactor, deflate, extreme_eig, inflate

REASON_TRANSFER = "inf-sup transfer failed"
REASON_SINGULAR = "discrete linearisation singular"
REASON_NK = "Newton-Kantorovich condition violated"
INVARIANT_SLACK = 1e-12


# ----------------------------------------------------------------------
# Scalar building blocks
# ----------------------------------------------------------------------

def res_h(b: np.ndarray, A_nc=None, factor: SpdFactor = None) -> float:
    """Dual residual norm sqrt(b^T A_nc^-1 b)."""
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return 0.0
    factor = factor if factor is not None else SpdFactor(A_nc)
    value = float(b @ factor.solve(b))
    if value < 0.0:
        if value < -NEGATIVE_QUADRATIC_CLAMP * max(1.0, float(b @ b)):
            raise ValueError(f"b^T A^-1 b = {value:.3e} is negative beyond round-off")
        return 0.0
    return math.sqrt(value)


def kappa_nc(grams: Grams, tol: float = TOL_EIG, factors: dict = None):
    """sqrt of the inflated largest eigenvalue of B_J (A_nc^-1 - A_J^-1) B_J x = lambda B_J x."""
    factors = factors or {}
    F_nc = factors.get('A_nc') or SpdFactor(grams.A_nc)
    F_J = factors.get('A_J') or SpdFactor(grams.A_J)
    B = grams.B_J

    def apply(x):
        y = B @ x
        return B @ (F_nc.solve(y) - F_J.solve(y))

    result = extreme_eig(Pencil(apply, B, 'largest', tol, factor=factors.get('B_J'), name='kappa_nc'))
    return math.sqrt(inflate(result.value, tol)), result


def kappa(h_max: float, kappa1: float, norm_J: float, kappa_nc_value: float) -> float:
    return math.hypot(h_max * kappa1 * norm_J, kappa_nc_value)


def c_b1(A_nc, B_gamma, tol: float = TOL_EIG, factor: SpdFactor = None):
    """sqrt of the inflated largest eigenvalue of B_gamma x = mu A_nc x; 0 when B_gamma vanishes."""
    if B_gamma.nnz == 0 or not np.any(B_gamma.data):
        return 0.0, None
    result = extreme_eig(Pencil(lambda x: B_gamma @ x, A_nc, 'largest', tol, factor=factor, name='C_b1'))
    return math.sqrt(inflate(result.value, tol)), result


def beta_h(D, A_nc, tol: float = TOL_EIG, factor: SpdFactor = None):
    """Discrete inf-sup constant of D, deflated.

    The smallest eigenvalue of D A^-1 D^T x = lambda A x is 1 / mu_max of
    A D^-T A D^-1 A x = mu A x.
    """
    LU = GeneralFactor(D)
    A = A_nc

    def apply(x):
        return A @ LU.solve(A @ LU.solve(A @ x), transpose=True)

    result = extreme_eig(Pencil(apply, A, 'largest', tol, factor=factor, name='beta_h'))
    if result.value <= 0.0:
        raise SingularMatrixError("inverse inf-sup pencil has no positive eigenvalue", pivot=-1)
    return deflate(1.0 / math.sqrt(result.value), tol), result


@dataclass(frozen=True)
class InfSupTransfer:
    beta0_hat: float
    norm_M: float
    norm_N: float
    C_T: float
    M: tuple
    N: tuple
    transferred: bool


def beta0_hat(beta_h_value: float, kappa_value: float, C_b1: float, C_b2: float, C_b3: float,
              norm_J: float) -> InfSupTransfer:
    """Lower bound of the continuous inf-sup constant."""
    for name, value in (('beta_h', beta_h_value), ('kappa', kappa_value), ('C_b1', C_b1),
                        ('C_b2', C_b2), ('C_b3', C_b3), ('norm_J', norm_J)):
        if value < 0.0:
            raise ValueError(f"{name} must be non-negative, got {value}")
    C_T = kappa_value * C_b2 + C_b3 * norm_J
    M = np.array([[(1.0 + C_T) * C_b1, C_T * C_b2], [beta_h_value * C_b1, beta_h_value * C_b2]])
    N = np.array([[1.0, C_T], [0.0, beta_h_value]])
    norm_M = float(np.linalg.norm(M, ord=2))
    norm_N = float(np.linalg.norm(N, ord=2))
    value = (beta_h_value - kappa_value * norm_M) / norm_N
    return InfSupTransfer(value, norm_M, norm_N, C_T, tuple(map(tuple, M)), tuple(map(tuple, N)),
                          kappa_value * norm_M < beta_h_value)


def mu_hat(res: float, L_G: float, one_minus_J: float, norm_J: float, mu_res_value: float) -> float:
    return res + (1.0 + L_G) * one_minus_J + norm_J * mu_res_value


@dataclass(frozen=True)
class Kantorovich:
    verified: bool
    rho_ex: float
    rho_uq: float
    beta0: float
    discriminant: float


def newton_kantorovich(beta0_hat_value: float, L: float, mu_hat_value: float, one_minus_J: float) -> Kantorovich:
    """Test 2 L mu_hat < beta0_hat^2 and return the radii."""
    if L <= 0.0:
        raise ValueError(f"Lipschitz constant must be positive, got {L}")
    disc = beta0_hat_value ** 2 - 2.0 * L * mu_hat_value
    if beta0_hat_value <= 0.0 or disc <= 0.0:
        return Kantorovich(False, math.nan, math.nan, math.nan, disc)
    root = math.sqrt(disc)
    rho_ex = (beta0_hat_value - root) / L + one_minus_J
    rho_uq = (beta0_hat_value + root) / L - one_minus_J
    return Kantorovich(True, rho_ex, rho_uq, root, disc)


# ----------------------------------------------------------------------
# Certificate
# ----------------------------------------------------------------------

@dataclass
class Certificate:
    mesh_id: str
    ndof: int
    h_max: float
    state_hash: str
    Res_h: float = math.nan
    beta_h: float = math.nan
    beta_h_raw: float = math.nan
    kappa_nc: float = math.nan
    kappa_nc_raw: float = math.nan
    kappa: float = math.nan
    norm_J: float = math.nan
    norm_J_raw: float = math.nan
    C_b1: float = math.nan
    C_b1_raw: float = math.nan
    C_b2: float = math.nan
    C_b3: float = math.nan
    C_T: float = math.nan
    norm_M: float = math.nan
    norm_N: float = math.nan
    beta0_hat: float = math.nan
    L: float = math.nan
    L_G: float = math.nan
    mu_res: float = math.nan
    mu_hat: float = math.nan
    one_minus_J: float = math.nan
    verified: bool = False
    rho_ex: float = math.nan
    rho_uq: float = math.nan
    beta0: float = math.nan
    reason: str = ''
    flags: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def uniqueness_empty(self) -> bool:
        return self.verified and not self.rho_uq > 0.0

    def violated_invariants(self) -> list:
        violated = []
        if self.verified:
            if not self.kappa * self.norm_M < self.beta_h:
                violated.append('kappa*norm_M < beta_h')
            if not 2.0 * self.L * self.mu_hat < self.beta0_hat ** 2:
                violated.append('2 L mu_hat < beta0_hat^2')
            slack = INVARIANT_SLACK * max(1.0, self.beta0_hat)
            if not self.beta0 <= self.beta0_hat + slack:
                violated.append('beta0 <= beta0_hat')
            if not self.beta0_hat <= self.beta_h / self.norm_N + slack:
                violated.append('beta0_hat <= beta_h / norm_N')
            if self.rho_uq > 0.0 and not self.rho_ex <= self.rho_uq:
                violated.append('rho_ex <= rho_uq')
            identity = abs(self.beta0 ** 2 + 2.0 * self.L * self.mu_hat - self.beta0_hat ** 2)
            if identity > INVARIANT_SLACK * max(1.0, self.beta0_hat ** 2):
                violated.append('beta0^2 + 2 L mu_hat = beta0_hat^2')
        return violated

    def check_invariants(self) -> 'Certificate':
        violated = self.violated_invariants()
        if violated:
            raise CertificateInvariantError(violated)
        return self

    def as_row(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in ('flags', 'metadata')}

    def to_text(self) -> str:
        """Key = value document in field order, then flags and metadata."""
        lines = ["# stream_verify certificate"]
        for key, value in self.as_row().items():
            lines.append(f"{key} = {_fmt(value)}")
        lines.append(f"flags = {', '.join(self.flags) if self.flags else '-'}")
        for key in sorted(self.metadata):
            lines.append(f"meta.{key} = {_fmt(self.metadata[key])}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def state_hash(v: MorleyFunction) -> str:
    return hashlib.sha256(np.ascontiguousarray(v.coef).tobytes()).hexdigest()[:16]


def mesh_id(mesh) -> str:
    digest = hashlib.sha256(np.ascontiguousarray(mesh.triangles).tobytes()
                            + np.ascontiguousarray(mesh.vertices).tobytes()).hexdigest()[:12]
    return f"{mesh.domain}-g{mesh.generation}-{digest}"


def certify(v: MorleyFunction, source: SourceTerm, grams: Grams = None, tol_eig: float = TOL_EIG,
            tol_eig_J: float = TOL_EIG_J, load: np.ndarray = None, metadata: dict = None) -> Certificate:
    """Certificate for an arbitrary Morley function v with source f."""
    mesh = v.mesh
    grams = grams if grams is not None else gram_matrices(v.space)
    constants = mesh_constants(mesh)
    cert = Certificate(mesh_id(mesh), grams.ndof, mesh.h_max, state_hash(v))
    cert.metadata.update(metadata or {})
    cert.metadata.update({
        'tol_eig': tol_eig,
        'tol_eig_J': tol_eig_J,
        'right_isosceles': constants.right_isosceles,
        'kappa1': constants.kappa1,
        'kappa2': constants.kappa2,
        'C_P': constants.C_P,
        'C_tr1': constants.C_tr1,
        'source': source.description or 'custom',
        'source_rule': source.rule(mesh).describe(),
    })

    F_nc = SpdFactor(grams.A_nc)
    F_J = SpdFactor(grams.A_J)
    F_B = SpdFactor(grams.B_J)

    b = nonlinear_residual(v, source, grams, load=load)
    cert.Res_h = res_h(b, factor=F_nc)

    cert.norm_J, r = operator_norm_J(grams.A_J, grams.A_nc, tol_eig_J, factor=F_nc)
    cert.norm_J_raw = float(np.sqrt(r.raw)) if r.raw > 0 else 0.0
    cert.metadata['iterations.norm_J'] = r.iterations

    cert.kappa_nc, r = kappa_nc(grams, tol_eig, {'A_nc': F_nc, 'A_J': F_J, 'B_J': F_B})
    cert.kappa_nc_raw = float(np.sqrt(max(r.raw, 0.0)))
    cert.metadata['iterations.kappa_nc'] = r.iterations
    cert.kappa = kappa(mesh.h_max, constants.kappa1, cert.norm_J, cert.kappa_nc)

    Jv = grams.smooth(v)
    B_gamma = gamma_gram(v, grams, Jv)
    cert.C_b1, r = c_b1(grams.A_nc, B_gamma, tol_eig, factor=F_nc)
    if r is None:
        cert.C_b1_raw = 0.0
        cert.flags.append('C_b1 = 0 (vanishing semilinearity)')
    else:
        cert.C_b1_raw = float(np.sqrt(max(r.raw, 0.0)))
        cert.metadata['iterations.C_b1'] = r.iterations

    ec = explicit_constants(v, Jv, constants)
    cert.C_b2, cert.C_b3, cert.L, cert.L_G = ec.C_b2, ec.C_b3, ec.L, ec.L_G
    cert.one_minus_J = one_minus_J_norm(v, Jv)
    cert.mu_res = mu_res(v, source, constants)
    cert.mu_hat = mu_hat(cert.Res_h, cert.L_G, cert.one_minus_J, cert.norm_J, cert.mu_res)

    try:
        D = linearised_matrix(Jv, grams)
        cert.beta_h, r = beta_h(D, grams.A_nc, tol_eig, factor=F_nc)
    except SingularMatrixError as e:
        cert.reason = REASON_SINGULAR
        cert.flags.append(str(e))
        return cert.check_invariants()
    cert.beta_h_raw = 1.0 / math.sqrt(r.value)
    cert.metadata['iterations.beta_h'] = r.iterations

    transfer = beta0_hat(cert.beta_h, cert.kappa, cert.C_b1, cert.C_b2, cert.C_b3, cert.norm_J)
    cert.C_T, cert.norm_M, cert.norm_N = transfer.C_T, transfer.norm_M, transfer.norm_N
    cert.beta0_hat = transfer.beta0_hat
    if not transfer.transferred:
        cert.reason = REASON_TRANSFER
        return cert.check_invariants()

    nk = newton_kantorovich(cert.beta0_hat, cert.L, cert.mu_hat, cert.one_minus_J)
    cert.verified = nk.verified
    if nk.verified:
        cert.rho_ex, cert.rho_uq, cert.beta0 = nk.rho_ex, nk.rho_uq, nk.beta0
        if cert.uniqueness_empty:
            cert.flags.append('uniqueness statement empty (rho_uq <= 0)')
    else:
        cert.reason = REASON_NK
    return cert.check_invariants()
