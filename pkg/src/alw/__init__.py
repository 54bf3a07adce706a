"""alw: a workbench for finite algebras of relations.

Generators, validators, atomic-game solvers, and brute-force representation
oracles for relation-algebra and cylindric-algebra atom structures at desk
scale.
"""

from .bases import (
    MatrixFamily,
    check_cylindric_basis,
    enumerate_mat,
    frame_from_basis,
    relational_basis_exists,
)
from .blur import (
    BlurCertificate,
    check_complex_blur,
    check_strong_blur,
    search_blur,
)
from .ca import (
    CaAtomStructure,
    CaElement,
    check_ca_axioms,
    cyl,
    full_set_frame,
    neat_reduct_atoms,
    neat_reduct_frame,
)
from .errors import (
    AlwError,
    BudgetExceededError,
    InvalidParameterError,
    PreconditionError,
    SpecError,
    StructureMismatchError,
)
from .games import (
    EXISTS,
    FORALL,
    ForallMove,
    GamePosition,
    certify_not_SNr,
    exists_responses,
    legal_forall_moves,
    solve_bounded,
    solve_omega_no_reuse,
    solve_omega_reuse,
    verify_scripted_strategy,
)
from .networks import Network, atom_network, validate_network
from .ra import (
    AtomSet,
    ColourRuleSpec,
    RaAtomStructure,
    TriangleRule,
    check_ra_axioms,
    compose,
    converse_set,
    default_split_rule,
    gen_ek23,
    gen_from_colour_rules,
    split_atoms,
)
from .rainbow import (
    ConeBombardment,
    RainbowSpec,
    gen_ca_n_plus_one_n,
    gen_rainbow_frame,
    gen_zn_truncation,
)
from .repsearch import (
    SearchResult,
    find_ca_representation,
    find_ra_representation,
    verify_ca_witness,
    verify_ra_witness,
)

__version__ = "0.1.0"
