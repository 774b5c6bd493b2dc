"""Non-stationary polynomial normal forms for contracting extensions over finite bases.

The package computes sub-resonance Taylor conjugacies H_x and polynomial
normal forms P_x for families of contracting polynomial maps indexed by a
finite permutation, reduces them further to resonance form, evaluates the
limit conjugacy numerically, and certifies uniqueness and centralizer
statements at desk scale.
"""

__version__ = "0.1.0"
