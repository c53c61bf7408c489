"""hofa: exact higher-order Fourier analysis over F_p^n at desk scale."""

from .errors import BudgetError, HofaError, PreconditionError, SchemaError
from .space import Coset, FpVector, LinearMapFp, PrimeModulus, ProductSpace, character, dot
from .linalg import rank_fp, solve_on_coset

__version__ = "0.1.0"
