"""Reduced density matrices and expectation values.

Every element is a dot-product of the incoming state with a resulting
state produced by the kernel: rho_kq = <Psi|Psi^{kq}> and
rho_kslq = <Psi|Psi^{kslq}>.  The same term applications (and hence the
same sign conventions) used by the Hamiltonian kernel are reused here.
"""

from __future__ import annotations

import csv
import json
import warnings

import numpy as np

from . import kernel, mixtures
from .errors import SpaceMismatchError
from .fockspace import StateVector, dot

NORM_WARN_TOL = 1e-8


def _warn_if_unnormalized(psi) -> None:
    nrm = psi.norm()
    if abs(nrm - 1.0) > NORM_WARN_TOL:
        warnings.warn(f"state norm {nrm:.3e} differs from 1; densities scale with it")


def one_body_density(psi: StateVector) -> np.ndarray:
    """rho[k-1, q-1] = <Psi| b†_k b_q |Psi> (M x M complex)."""
    _warn_if_unnormalized(psi)
    m = psi.space.m
    rho = np.empty((m, m), dtype=np.complex128)
    for k in range(1, m + 1):
        for q in range(1, m + 1):
            rho[k - 1, q - 1] = dot(psi, kernel.apply_one_body_term(k, q, psi))
    return rho


def two_body_density(psi: StateVector) -> np.ndarray:
    """rho2[k-1, s-1, l-1, q-1] = <Psi| b†_k b†_s b_l b_q |Psi> (M^4 complex)."""
    _warn_if_unnormalized(psi)
    m = psi.space.m
    rho2 = np.empty((m, m, m, m), dtype=np.complex128)
    for k in range(1, m + 1):
        for s in range(1, m + 1):
            for l in range(1, m + 1):
                for q in range(1, m + 1):
                    rho2[k - 1, s - 1, l - 1, q - 1] = dot(
                        psi, kernel.apply_two_body_term(k, s, l, q, psi)
                    )
    return rho2


def reorder_two_body(rho2: np.ndarray, convention: str) -> np.ndarray:
    """Reindex the stored rho_kslq tensor.

    "stored":    [k, s, l, q] = <b†_k b†_s b_l b_q>   (pairing k<->q, s<->l)
    "physicist": [k, s, q, l] = <b†_k b†_s b_l b_q>   (bra indices, ket indices)
    "chemist":   [k, q, s, l] = <b†_k b†_s b_l b_q>   (pairs adjacent)
    """
    if convention == "stored":
        return rho2
    if convention == "physicist":
        return np.transpose(rho2, (0, 1, 3, 2))
    if convention == "chemist":
        return np.transpose(rho2, (0, 3, 1, 2))
    raise ValueError(f"unknown convention {convention!r}")


def natural_occupations(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of the one-body density, descending."""
    return np.linalg.eigvalsh(rho)[::-1]


def energy(spec, psi) -> complex:
    """<Psi|H|Psi> as a dot-product with the kernel-applied vector."""
    if isinstance(psi, mixtures.MixtureStateVector):
        hpsi = mixtures.apply_mixture_hamiltonian(spec, psi)
        return mixtures.mixture_dot(psi, hpsi)
    if spec.space != psi.space:
        raise SpaceMismatchError("energy of a state from a different space")
    return dot(psi, kernel.apply_hamiltonian(spec, psi))


def mixture_densities(psi: mixtures.MixtureStateVector) -> tuple[np.ndarray, np.ndarray]:
    """Species-resolved one-body densities (rho_A, rho_B); traces N_A and N_B."""
    _warn_if_unnormalized(psi)
    m_a = psi.mspace.space_a.m
    m_b = psi.mspace.space_b.m
    rho_a = np.empty((m_a, m_a), dtype=np.complex128)
    rho_b = np.empty((m_b, m_b), dtype=np.complex128)
    for k in range(1, m_a + 1):
        for q in range(1, m_a + 1):
            rho_a[k - 1, q - 1] = mixtures.mixture_dot(
                psi, mixtures.apply_one_body_term_a(k, q, psi)
            )
    for k in range(1, m_b + 1):
        for q in range(1, m_b + 1):
            rho_b[k - 1, q - 1] = mixtures.mixture_dot(
                psi, mixtures.apply_one_body_term_b(k, q, psi)
            )
    return rho_a, rho_b


def site_densities(psi) -> np.ndarray:
    """Diagonal occupations <n_k> straight from the configuration table."""
    if isinstance(psi, mixtures.MixtureStateVector):
        mat = np.abs(psi.as_matrix()) ** 2
        occ_a = psi.mspace.space_a.tables().occ
        occ_b = psi.mspace.space_b.tables().occ
        dens_a = mat.sum(axis=1) @ occ_a
        dens_b = mat.sum(axis=0) @ occ_b
        return np.concatenate([dens_a, dens_b])
    weights = np.abs(psi.amplitudes) ** 2
    return weights @ psi.space.tables().occ


# -- emission ----------------------------------------------------------------

SPARSE_RHO2_ABOVE_M = 8


def density_report(rho: np.ndarray, rho2: np.ndarray | None = None) -> dict:
    """JSON-ready document with rho, natural occupations, and optionally rho2.

    rho2 switches to a sparse coordinate list above M = 8 orbitals.
    """
    doc = {
        "format": "fockops-density/1",
        "rho": [[[v.real, v.imag] for v in row] for row in rho],
        "natural_occupations": [float(x) for x in natural_occupations(rho)],
    }
    if rho2 is not None:
        m = rho2.shape[0]
        if m > SPARSE_RHO2_ABOVE_M:
            entries = []
            for idx in np.argwhere(rho2 != 0):
                v = rho2[tuple(idx)]
                entries.append([int(i) + 1 for i in idx] + [v.real, v.imag])
            doc["rho2_coordinates"] = entries
        else:
            doc["rho2"] = [
                [[[[v.real, v.imag] for v in a3] for a3 in a2] for a2 in a1] for a1 in rho2
            ]
    return doc


def write_density_json(path, rho, rho2=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(density_report(rho, rho2), fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_density_csv(path, rho) -> None:
    """rho as rows `k,q,re,im` plus trailing natural-occupation rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# fockops-density-csv", "1"])
        writer.writerow(["k", "q", "re", "im"])
        m = rho.shape[0]
        for k in range(m):
            for q in range(m):
                writer.writerow([k + 1, q + 1, repr(rho[k, q].real), repr(rho[k, q].imag)])
        for i, occ in enumerate(natural_occupations(rho), start=1):
            writer.writerow(["natural", i, repr(float(occ)), "0.0"])
