"""Orbital-entanglement driven active-space selection for exactly solvable
fermionic models.

The package solves small Hamiltonians exactly, builds spin-traced reduced
density matrices, measures one-orbital entropies and rotates orbitals to
minimise the correlation left outside a chosen active space.
"""

from .analysis import (
    BoundReport,
    PipelineConfig,
    ScanSample,
    pearson,
    run_pipeline,
    scan_random_bases,
    verify_bound,
)
from .casci import CasciResult, casci_energy, fold_core, natural_occupations
from .errors import QicasError
from .fci import (
    DeterminantSpace,
    SolverOptions,
    Wavefunction,
    apply_hamiltonian,
    enumerate_determinants,
    ground_state,
    project_cas,
    spectral_bounds,
)
from .hamiltonian import (
    MolecularHamiltonian,
    build_hubbard,
    parse_fcidump,
    read_fcidump,
    transform_integrals,
    write_fcidump,
)
from .measures import (
    decompose_correlation,
    entropy,
    entropy_profile,
    f_qi,
    f_qi_all,
    mutual_information,
    mutual_information_matrix,
    orbital_entropies,
    suggest_cas_size,
    threshold_diagram,
)
from .optimizer import QicasConfig, QicasResult, classify_partition, minimize_total_entropy, optimize
from .partition import CasPartition
from .rdm import SpinTracedRDMs, compute_rdms, orbital_spectrum, subsystem_entropy, subsystem_rdm
from .rotation import JacobiStep, OrbitalRotation, random_orthogonal, random_perturbation, rotate_rdms

__version__ = "0.1.0"
