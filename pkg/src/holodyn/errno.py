EUNKNOWN = -1        # Unknown

ENOTSQUARE = 10      # Operator is not a square matrix
EDIMMISMATCH = 11    # Ambient dimensions of operator and subspace differ
ENONFINITE = 12      # NaN or Inf entries
ELENMISMATCH = 13    # Number of Lindblad operators != number of eigenvalues
ENOTORTHONORMAL = 14 # Subspace basis columns are not orthonormal

EPARAM = 20          # Scenario parameter outside its allowed range
ENOTCLOSED = 21      # Loop does not close within tolerance
ENODFS = 22          # Empty common eigenspace, no DFS
ESTATE = 23          # Initial state is not a DFS-supported density matrix

EGAP = 30            # Gap of P(s) below the configured floor
EDIMJUMP = 31        # DFS dimension changes along the path
EINCONSISTENT = 32   # Kernel of D(s) disagrees with the common eigenspace of the Gamma_k
ERIGIDITY = 33       # Frame rigidity drift, step size too coarse
ENOTHERMITIAN = 34   # Gauge term is not a block diagonal Hermitian operator

ESTABILITY = 40      # rate * T / steps > 0.1
ETRACE = 41          # Trace defect exceeded during integration
EGRID = 42           # Trajectory and frame grids do not match
EINVARIANT = 43      # Trajectory invariant breached (trace, positivity)

EOPENPATH = 50       # Holonomy requested for an open path
EDFSMISMATCH = 51    # Loops do not share the DFS at s=0
ECOARSE = 52         # Grid too coarse for the connection

ESCHEMA = 60         # Config does not match the schema
ECONFIGIO = 61       # Config file missing or not valid JSON

# Codes reported with exit status 2: the run never started.
PRECONDITION_CODES = (
    ENOTSQUARE, EDIMMISMATCH, ENONFINITE, ELENMISMATCH, ENOTORTHONORMAL,
    EPARAM, ENOTCLOSED, ENODFS, ESTATE,
    ESTABILITY,
    ESCHEMA, ECONFIGIO,
)

# Exit status of the command line runner
EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_PRECONDITION = 2
EXIT_INVARIANT = 3
