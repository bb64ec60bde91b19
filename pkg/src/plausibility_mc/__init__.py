"""Model checking for knowledge and conditional reasons to believe.

Submodules: :mod:`~plausibility_mc.formula` (syntax, parser, printer),
:mod:`~plausibility_mc.model` (explicit plausibility models and their file
format), :mod:`~plausibility_mc.butterfly` (butterflies and flutters),
:mod:`~plausibility_mc.checker` (evaluation, iterated reasons, chains,
common knowledge), :mod:`~plausibility_mc.lewis` (C1-C4 over events) and
:mod:`~plausibility_mc.cli`.
"""

from .butterfly import (
    ButterflyParams,
    Flutter,
    ImplicitButterfly,
    MissingButterfly,
    build_body,
    build_butterfly,
    build_flutter,
    extend_wings,
    load_flutter,
    save_flutter,
)
from .checker import (
    Checker,
    CheckResult,
    Soundness,
    diamond_chain_search,
    eval_counterfactual_iter,
    eval_iter_reason,
    evaluate,
    iterative_ck,
    safe_modal_depth,
)
from .formula import (
    TOP,
    And,
    Height,
    Know,
    Not,
    Reason,
    Top,
    expand_diamond_chain,
    expand_iter_reason,
    parse,
    to_text,
)
from .lewis import EventSpace, LewisReport, check_c1_c3, check_c4, reason_event, verify_lewis_theorem
from .model import MissingSelectionTarget, Model, load_model, save_model

__version__ = "0.1.0"
