"""Source-level fusion: two-stage soft-failure identification and localization."""

from .dataset import CAUSES, SourceExample, SourceSetup, generate_dataset, simulate_example
from .pipeline import (
    SpectraWindow,
    StageOneVerdict,
    StageTwoVerdict,
    TwoStageConfig,
    TwoStageResult,
    diff_spectrum,
    localize,
    nominal_theory,
    residual_grid,
    residual_stack,
    run_two_stage,
    select_spectra_window,
    stage1_localize,
    stage1_model,
    stage2_identify,
    stage2_model,
)
from .theory import TheoreticalSpectrum, theoretical_spectrum
