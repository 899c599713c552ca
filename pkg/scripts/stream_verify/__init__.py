# Existence certificates for the Navier-Stokes stream-function equation (Morley / HCT)
from .mesh import Mesh, build_initial, refine_nvb, refine_red, mesh_constants, save_mesh, load_mesh
from .pwpoly import PwPoly
from .morley import MorleySpace, MorleyFunction, SmoothFunction, interpolate, a_pw, energy_norm_pw
from .hct import HctSpace, HctFunction, smooth, smoother_matrix, interpolation_matrix, operator_norm_J
from .assembly import (
    SourceTerm,
    gram_matrices,
    trilinear,
    nonlinear_residual,
    linearised_matrix,
    gamma_gram,
    estimator_eta,
    mu_res,
    explicit_constants,
    export_coo,
    load_coo,
)
from .spectral import Pencil, solve_spd, solve_general, extreme_eig, dense_oracle
from .certify import Certificate, certify, res_h, kappa_nc, kappa, c_b1, beta_h, beta0_hat, mu_hat, newton_kantorovich
from .solve import RefinementStrategy, newton_solve, mark, drive
from .benchmarks import BenchmarkConfig, square_poly_source, grisvard_solution
from .report import History, rate, aitken, summary_table
from .errors import StreamVerifyError

__all__ = [
    'Mesh',
    'build_initial',
    'refine_nvb',
    'refine_red',
    'mesh_constants',
    'save_mesh',
    'load_mesh',
    'PwPoly',
    'MorleySpace',
    'MorleyFunction',
    'SmoothFunction',
    'interpolate',
    'a_pw',
    'energy_norm_pw',
    'HctSpace',
    'HctFunction',
    'smooth',
    'smoother_matrix',
    'interpolation_matrix',
    'operator_norm_J',
    'SourceTerm',
    'gram_matrices',
    'trilinear',
    'nonlinear_residual',
    'linearised_matrix',
    'gamma_gram',
    'estimator_eta',
    'mu_res',
    'explicit_constants',
    'export_coo',
    'load_coo',
    'Pencil',
    'solve_spd',
    'solve_general',
    'extreme_eig',
    'dense_oracle',
    'Certificate',
    'certify',
    'res_h',
    'kappa_nc',
    'kappa',
    'c_b1',
    'beta_h',
    'beta0_hat',
    'mu_hat',
    'newton_kantorovich',
    'RefinementStrategy',
    'newton_solve',
    'mark',
    'drive',
    'BenchmarkConfig',
    'square_poly_source',
    'grisvard_solution',
    'History',
    'rate',
    'aitken',
    'summary_table',
    'StreamVerifyError',
]
