"""1-bit compressed sensing: recovery algorithms on the sphere, a
replica-symmetric performance predictor, and a seeded experiment harness."""

__version__ = "0.1.0"

from .metrics import TrialMetrics, aggregate, compute_metrics
from .model import (FoldedInstance, ProblemInstance, SignalParams,
                    ZeroMeasurement, fold_signs, gen_matrix, gen_signal,
                    load_instance, make_instance, measure, save_instance)
from .recovery import (AllZeroShrinkage, CavityState, CisrConfig, CisrState,
                       DegenerateParameters, RecoveryResult, RfpiConfig,
                       biht_init, cisr_inner_step, cisr_recover,
                       naive_cavity_recover, rfpi_inner_step, rfpi_recover)
from .theory import (NoConvergence, RSFixedPoint, RSParams, RSPrediction,
                     rs_free_energy, rs_predict, rs_solve,
                     rs_solve_by_extremization, rs_stability)

__all__ = [
    "__version__",
    "TrialMetrics", "aggregate", "compute_metrics",
    "FoldedInstance", "ProblemInstance", "SignalParams", "ZeroMeasurement",
    "fold_signs", "gen_matrix", "gen_signal", "load_instance", "make_instance",
    "measure", "save_instance",
    "AllZeroShrinkage", "CavityState", "CisrConfig", "CisrState",
    "DegenerateParameters", "RecoveryResult", "RfpiConfig", "biht_init",
    "cisr_inner_step", "cisr_recover", "naive_cavity_recover",
    "rfpi_inner_step", "rfpi_recover",
    "NoConvergence", "RSFixedPoint", "RSParams", "RSPrediction",
    "rs_free_energy", "rs_predict", "rs_solve", "rs_solve_by_extremization",
    "rs_stability",
]
