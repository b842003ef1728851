"""Galerkin operator assembly for the quadratic reduced model.

The reduced state is u(x,t) = mean(x) + sum_i a_i(t) phi_i(x), which gives

    da/dt = C + A a + a^T B a,

with the affine term C induced by centering.  Convection enters through the
skew-symmetric trilinear form

    b*(u, v, w) = 1/2 [ <u Dv, w>_w - <u Dw, v>_w ],

antisymmetric in (v, w) by construction, so the assembled quadratic tensor
satisfies B_imn + B_nmi = 0 exactly and the cubic form a.(a^T B a) vanishes.
Convection derivatives use the grid's central-difference operator, matching
the full-order solver; the viscous Gram uses the one-sided gradient whose
weak form reproduces the solver's compact Laplacian exactly.
"""

from dataclasses import dataclass

import numpy as np

_PROVENANCES = ("galerkin", "galerkin_plus_closure")


@dataclass(frozen=True)
class QuadraticModel:
    """Operators of da/dt = C + A a + a^T B a with A = A_visc + A_mean."""

    r: int
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    A_visc: np.ndarray
    A_mean: np.ndarray
    viscosity: float
    provenance: str = "galerkin"

    def __post_init__(self):
        r = self.r
        shapes = {
            "C": (self.C, (r,)),
            "A": (self.A, (r, r)),
            "B": (self.B, (r, r, r)),
            "A_visc": (self.A_visc, (r, r)),
            "A_mean": (self.A_mean, (r, r)),
        }
        for name, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
        if self.provenance not in _PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def convection_form(u, v, w, grid):
    """Skew-symmetric trilinear form b*(u, v, w) on grid samples."""
    wts = grid.weights
    return 0.5 * (
        np.dot(wts * u * grid.ddx(v), w) - np.dot(wts * u * grid.ddx(w), v)
    )


def assemble_galerkin(basis, r, viscosity):
    """Assemble the Galerkin operators for the leading r modes.

    A_visc[i,m] = -nu <phi_m', phi_i'>_w   (one-sided gradient)
    A_mean[i,m] = -b*(mean, phi_m, phi_i) - b*(phi_m, mean, phi_i)
    B[i,m,n]    = -b*(phi_m, phi_n, phi_i)
    C[i]        = -nu <mean', phi_i'>_w - b*(mean, mean, phi_i)
    """
    if r > basis.r_max:
        raise ValueError(f"r={r} exceeds basis rank r_max={basis.r_max}")
    grid = basis.grid
    w = grid.weights
    phi = basis.modes[:, :r]
    dphi = grid.ddx(phi)
    mean = basis.mean_mode
    dmean = grid.ddx(mean)
    gphi = grid.ddx_forward(phi)
    gmean = grid.ddx_forward(mean)

    a_visc = -viscosity * (gphi.T * w) @ gphi
    a_visc = 0.5 * (a_visc + a_visc.T)  # symmetric Gram block, clean roundoff

    # T[m,n,i] = <phi_m * Dphi_n, phi_i>_w; b*(phi_m,phi_n,phi_i) follows by
    # antisymmetrization in (n, i)
    phiw = phi * w[:, None]
    t_mni = np.einsum("km,kn,ki->mni", phiw, dphi, phi, optimize=True)
    bstar = 0.5 * (t_mni - np.transpose(t_mni, (0, 2, 1)))
    b_tensor = -np.transpose(bstar, (2, 0, 1))  # B[i,m,n] = -b*(m,n,i)

    # mean-advection couplings: b*(mean, phi_m, phi_i) and b*(phi_m, mean, phi_i)
    meanw = mean * w
    t1 = 0.5 * ((dphi.T * meanw) @ phi - (phi.T * meanw) @ dphi)  # t1[m,i]
    t2 = 0.5 * ((phiw.T * dmean) @ phi - np.einsum("km,ki,k->mi", phiw, dphi, mean))
    a_mean = -(t1 + t2).T

    c_visc = -viscosity * gphi.T @ (w * gmean)
    c_conv = -0.5 * (
        phi.T @ (w * mean * dmean) - dphi.T @ (w * mean * mean)
    )  # -b*(mean, mean, phi_i)
    c_vec = c_visc + c_conv

    return QuadraticModel(
        r=r,
        C=c_vec,
        A=a_visc + a_mean,
        B=b_tensor,
        A_visc=a_visc,
        A_mean=a_mean,
        viscosity=viscosity,
        provenance="galerkin",
    )


def rhs(model, a):
    """Evaluate C + A a + a^T B a."""
    a = np.asarray(a)
    if a.shape != (model.r,):
        raise ValueError(f"coefficient vector has shape {a.shape}, expected ({model.r},)")
    return model.C + model.A @ a + np.einsum("imn,m,n->i", model.B, a, a)


def rhs_series(model, coeffs):
    """Vectorized rhs over the columns of an r x M coefficient matrix."""
    if coeffs.shape[0] != model.r:
        raise ValueError("coefficient matrix row count does not match model dimension")
    quad = np.einsum("imn,mj,nj->ij", model.B, coeffs, coeffs, optimize=True)
    return model.C[:, None] + model.A @ coeffs + quad
