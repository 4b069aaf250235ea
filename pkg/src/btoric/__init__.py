"""Exact computations on toric monoids, model spaces with g-corners, the
b-tangent calculus, b-complex structures and formal Newlander-Nirenberg
corrections."""

from .b_calculus import (BVectorField, Chart, CoeffElement,
                         StratumAlgebroidElement, algebroid_bracket,
                         b_differential, derive, lie_bracket,
                         restrict_to_stratum)
from .complex_structure import (BACS, CRSplitData, NijenhuisTensor,
                                NormalFormReport, NormalFrame, cr_split_at,
                                dbar, nijenhuis, pullback_structure,
                                standard_structure, twisted_structure,
                                verify_normal_form)
from .errors import *  # noqa: F401,F403
from .formal_nn import (CorrectedChart, CorrectionFamily, JetIdealOrder,
                        SeedChart, StratumForm, correct_to_order, dbar_Sk,
                        ideal_order, layer_independence_check, poincare_solve)
from .lattice_monoid import (Face, FiltrationLayer, MonoidPresentation,
                             WeaklyToricMonoid, double_dual_check, dual_monoid,
                             enumerate_faces, filtration_layers, monoid,
                             split_units, validate)
from .model_space import (BinomialEmbedding, ModelPoint, embed, eval_lambda,
                          point, support_and_depth)

__version__ = "0.1.0"
