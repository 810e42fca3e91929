"""皮肤电信号的凸优化分解(phasic / tonic / noise)"""
from edaffect.cvxeda.config import BatemanIrf, CvxedaConfig
from edaffect.cvxeda.decompose import decompose, decompose_many
from edaffect.cvxeda.irf import sample_irf
from edaffect.cvxeda.operators import (
    PhasicOperator,
    TonicBasis,
    build_phasic_operator,
    build_tonic_basis,
)
from edaffect.cvxeda.solver import QpProblem, QpSolution, solve_qp

__all__ = [
    "BatemanIrf",
    "CvxedaConfig",
    "PhasicOperator",
    "QpProblem",
    "QpSolution",
    "TonicBasis",
    "build_phasic_operator",
    "build_tonic_basis",
    "decompose",
    "decompose_many",
    "sample_irf",
    "solve_qp",
]
