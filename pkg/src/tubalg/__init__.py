"""Tubal tensor algebra under invertible mode-3 transforms."""

__version__ = "0.1.0"

from .algebra import (
    conj_transpose,
    has_orthonormal_columns,
    identity_tensor,
    identity_tube,
    is_unitary,
    starm,
    t_product_circulant,
    tube_mul,
    tube_scale,
    tube_weak_inverse,
)
from .dmd import DmdModel, pseudo_inverse_fdiag, synthetic_trajectory, tdmd_fit, tdmd_predict
from .exceptions import (
    DegenerateData,
    DomainError,
    FileFormatError,
    InvalidMultirank,
    NotApplicable,
    NotInvertible,
    NotRealRing,
    RankSpecError,
    RealnessError,
    ShapeError,
    TbtFormatError,
    TubalgError,
)
from .optimality import (
    CounterexampleWitness,
    EckartYoungReport,
    certify,
    compare_fixed_rank,
    compare_gamma,
    counterexample_imag_gram,
    counterexample_real_gram,
    random_search,
    refute_random,
)
from .tensor import SPATIAL, Tensor3, as_tensor, facewise, fold, frob_inner, frob_norm, tube, ttm, unfold
from .transform import (
    EckartYoungCertificate,
    IdempotentStructure,
    Transform,
    build_transform,
    check_eckart_young,
    crafted_invalid,
    dct,
    dft,
    idempotent_tube,
    identity,
    pair_with_gram,
    random_valid,
    scaled,
)
from .tsvdm import (
    Energy,
    MultiRank,
    TRank,
    TsvdmFactors,
    TubalLength,
    gamma_rank,
    implicit_rank,
    length_to_multirank,
    multirank,
    multirank_to_length,
    t_rank,
    truncate,
    truncation_error,
    tsvdm,
    tsvdm2,
    tubal_length,
)
