"""Monte Carlo tools for (d+1)-dimensional SU(N) lattice Yang-Mills theory.

Two lattice discretizations of the same physics are implemented side by
side: the standard Wilson action built from unitary link variables, and
an orbifold-lattice action whose spatial links are unconstrained complex
matrices held near sqrt(c) * SU(N) by mass terms.  Sending those masses
to infinity reproduces Wilson-action physics at finite lattice spacing,
which the analysis layer verifies by quadratic extrapolation in 1/m^2.
"""

__version__ = "0.1.0"

from .geometry import Lattice, LatticeShape
from .params import PhysParams

__all__ = ["Lattice", "LatticeShape", "PhysParams", "__version__"]
