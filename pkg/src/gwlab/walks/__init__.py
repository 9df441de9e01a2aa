"""Random walks on the diagonal product and the base-walk statistics they need."""

from .excursions import (local_time, local_time_pmf, traverse_all, traverse_moment_checks,
                         traverse_pmf_dp, traverse_time)
from .sim import (WalkRun, entropy_lower_estimate, fit_exponent, joint_speed_entropy, run_sow,
                  run_sws, speed_experiment)
from .predict import (SeqParams, predict_entropy_dihedral, predict_speed_dihedral,
                      predict_speed_linear)
from .stable import dw_distance, stable_chain_new, stable_chain_step, stable_speed_check
