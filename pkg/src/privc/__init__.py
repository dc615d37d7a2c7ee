"""privc: an interpreter for a C subset with public/private data.

Programs run over q simulated parties holding secret shares; a companion
plaintext evaluator for the erased program, a differential correctness
checker, and a trace-noninterference checker make the security claims
testable at desk scale.
"""

from .erasure import code_congruent, erase_program, erase_stmt, erase_type, psi_congruent
from .field import FieldParams, Protocols
from .interp import Simulator, smc2_eval
from .lang import parse, pretty
from .vanilla import VanillaInterp, van_eval
from .verify import (check_branch_oracle, check_confluence, check_correctness,
                     check_noninterference, check_protocol_axioms)

__version__ = "0.1.0"

__all__ = [
    "FieldParams", "Protocols", "Simulator", "smc2_eval", "VanillaInterp",
    "van_eval", "parse", "pretty", "erase_program", "erase_stmt", "erase_type",
    "psi_congruent", "code_congruent", "check_correctness", "check_confluence",
    "check_noninterference", "check_branch_oracle", "check_protocol_axioms",
    "__version__",
]
