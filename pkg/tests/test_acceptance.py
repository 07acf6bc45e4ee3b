"""Acceptance gate: one check per structural-prediction criterion.

Each test runs the corresponding built-in verification criterion and
prints its single pass/fail line (visible with pytest -s or on failure).
Tolerances and wall-clock budgets are pinned inside conelab.verification:

  1  pole positions vs root-finder within 1e-10 over 50 draws, < 1 s
  2  worked weight windows exact; 200 randomized emptiness agreements
  3  curvature condition flips between rho0 = 0.5 and 0.5 + 1e-6
  4  spatial order >= 3.7 (N = 64..512), temporal 2 +- 0.2, < 2 min
  5  alpha_dev = 2.0 +- 0.15 on the rho0 = 0.4 cone at N = 512, < 3 min
  6  alpha_1 = {2.50 +- 0.20, 1.67 +- 0.20, 1.25 +- 0.15} strictly
     decreasing over rho0 = {0.4, 0.6, 0.8}; inconclusive fails; < 10 min
  7  pointwise-bound constant finite, refinement drift < 2x, 10 fields
  8  composite spectrum >= -1e-8; smoothing sup = (a/e)^a within 1e-10
  9  monitor: K == 0 for zero forcing; beta T^(1/q) within 1e-6 for
     constant forcing; graceful halt on the focusing run
"""

from conelab.verification import CRITERION_BUDGETS, run_criterion


def _check(cid):
    result = run_criterion(cid)
    line = (f"[{result.status}] criterion {cid} ({result.label}):"
            f" {result.detail} [{result.runtime:.2f}s]")
    print(line)
    assert result.passed, line
    budget = CRITERION_BUDGETS.get(cid)
    if budget is not None:
        assert result.runtime < budget, (
            f"criterion {cid} took {result.runtime:.1f}s, budget {budget:.0f}s"
        )


def test_symbol_poles_match_rootfinder():
    _check(1)


def test_weight_window_worked_cases_and_random_emptiness():
    _check(2)


def test_curvature_condition_boundary():
    _check(3)


def test_manufactured_solution_convergence_orders():
    _check(4)


def test_axisymmetric_cone_decay_exponent():
    _check(5)


def test_mode_one_sweep_matches_indicial_oracle():
    _check(6)


def test_pointwise_bound_refinement_stable():
    _check(7)


def test_spectral_positivity_and_smoothing_sup():
    _check(8)


def test_continuation_monitor_behaviors():
    _check(9)
