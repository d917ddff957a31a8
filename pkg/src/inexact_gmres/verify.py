"""Randomized verification sweeps over the diagnostics.

Every suite returns a :class:`SuiteResult`; a trial passes when all of its
checks hold, and ``worst_slack`` is the smallest normalized margin seen
(negative means a violation).
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, linalg
from .config import ExperimentConfig
from .solver import gmres_solve, reference_exact_solve, reference_sigma_min_hk

QRE_DELTAS = (0.1, 0.3, 0.5, 0.9)
NUR_LEVELS = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10)
NUR_TOLERANCE = 1e-8
THEOREM_EPS = (1e-6, 1e-10)
ORTHONORMALITY_TOLERANCE = 1e-10

DEFAULT_TRIALS = {"nur": 20, "qre": 100, "stls": 1000, "rgap": 12, "theorem": 10}


@dataclass
class TrialResult:
    passed: bool
    slack: float
    label: str


@dataclass
class SuiteResult:
    name: str
    trials: list = field(default_factory=list)

    @property
    def passed(self):
        return sum(t.passed for t in self.trials)

    @property
    def failed(self):
        return len(self.trials) - self.passed

    @property
    def ok(self):
        return bool(self.trials) and self.failed == 0

    @property
    def worst(self):
        return min(self.trials, key=lambda t: t.slack)

    def summary(self):
        if not self.trials:
            return "%s: no trials" % self.name
        w = self.worst
        return "%s: %d/%d passed, worst slack %.3g (%s)" % (
            self.name, self.passed, len(self.trials), w.slack, w.label)


def trial_rng(seed, trial):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


_GRCAR_CACHE = {}


def _grcar_problem():
    if "p" not in _GRCAR_CACHE:
        A = linalg.grcar(100, 5)
        _GRCAR_CACHE["p"] = (A, linalg.sine_rhs(A))
    return _GRCAR_CACHE["p"]


# --- individual trials ------------------------------------------------------

def qre_trial(seed, trial):
    rng = trial_rng(seed, trial)
    delta = QRE_DELTAS[trial % len(QRE_DELTAS)]
    k = int(rng.integers(2, 31))
    n = k + int(rng.integers(0, 101))
    V = diagnostics.random_basis_with_loss(rng, n, k, delta)
    W = diagnostics.construct_w_inner_product(V)
    kappa_slack = (W.kappa_bound - W.kappa) / W.kappa_bound
    ortho_slack = (ORTHONORMALITY_TOLERANCE - W.orthonormality_defect) / ORTHONORMALITY_TOLERANCE
    slack = min(kappa_slack, ortho_slack)
    return TrialResult(slack >= 0.0, slack,
                       "n=%d k=%d delta=%g kappa=%.6g bound=%.6g defect=%.2g"
                       % (n, k, delta, W.kappa, W.kappa_bound, W.orthonormality_defect))


def stls_instance(rng):
    k = int(rng.integers(1, 31))
    H = diagnostics.random_hessenberg(rng, k) * 10.0 ** rng.uniform(-2, 2)
    beta = 10.0 ** rng.uniform(-2, 2)
    eps = 10.0 ** rng.uniform(-10, -1)
    dmax = diagnostics.stls_d_bound(H, beta, eps)
    d = dmax * rng.uniform(0.01, 1.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    return H, beta, d, eps


def stls_trial(seed, trial):
    H, beta, d, eps = stls_instance(trial_rng(seed, trial))
    rep = diagnostics.check_stls_lemma(H, beta, d, eps)
    slack = min(rep.ejyk_slack, rep.lower_slack, rep.upper_slack)
    if not rep.condition_holds:
        slack = min(slack, -1.0)
    return TrialResult(rep.holds, slack, "k=%d eps=%.2g" % (H.shape[1], eps))


def nur_trial(seed, trial):
    A, b = _grcar_problem()
    level = NUR_LEVELS[trial % len(NUR_LEVELS)]
    cfg = ExperimentConfig(threshold="fixed-table", epsilon=level, relative_epsilon=True,
                           kmax=30, seed=seed + trial, stop_tolerance=0.0,
                           perturb_normalization=False, track_orthogonality=False)
    out = gmres_solve(A, b, cfg)
    defect = diagnostics.check_nur_identity(diagnostics.OrthoDiagnostics.from_outcome(out))
    slack = (NUR_TOLERANCE - defect) / NUR_TOLERANCE
    return TrialResult(defect <= NUR_TOLERANCE, slack,
                       "eta=%g*||A|| seed=%d defect=%.3g" % (level, seed + trial, defect))


def _two_pass(A, b, eps, seed, kmax=100):
    """Reference run to get sigma_min(H_k), then the theorem-mode run."""
    stop = eps * linalg.norm2(b)
    first = reference_exact_solve(A, b, kmax, stop_tolerance=stop,
                                  track_orthogonality=False)
    sigma = reference_sigma_min_hk(first)
    cfg = ExperimentConfig(threshold="theorem", epsilon=eps, kmax=kmax, seed=seed,
                           sigma_min_hk=sigma, stop_tolerance=stop)
    return first, gmres_solve(A, b, cfg)


RGAP_SETUPS = (
    dict(threshold="aggressive", epsilon=2.0 ** -52, relative_epsilon=True),
    dict(threshold="conservative", epsilon=2.0 ** -52, relative_epsilon=True),
    dict(threshold="fixed-table", epsilon=1e-8, relative_epsilon=True),
    dict(threshold="fixed-table", epsilon=1e-6, relative_epsilon=True),
    dict(threshold="theorem", epsilon=1e-6),
    dict(threshold="theorem", epsilon=1e-10),
)


def rgap_trial(seed, trial):
    """Residual-gap bound at every step; theorem-mode runs also check the
    absolute target ``(eps/2) ||b||``."""
    A, b = _grcar_problem()
    setup = RGAP_SETUPS[trial % len(RGAP_SETUPS)]
    run_seed = seed + trial
    if setup["threshold"] == "theorem":
        first, out = _two_pass(A, b, setup["epsilon"], run_seed)
    else:
        out = gmres_solve(A, b, ExperimentConfig(kmax=100, seed=run_seed,
                                                 track_orthogonality=False, **setup))
        first = None
    slack = math.inf
    for j in range(1, out.k + 1):
        gap, bound = diagnostics.residual_gap(A, b, out, j)
        if bound > 0.0:
            slack = min(slack, (bound - gap) / bound)
    if first is not None:
        target = 0.5 * setup["epsilon"] * linalg.norm2(b)
        gap, _ = diagnostics.residual_gap(A, b, out, min(out.k, first.k))
        slack = min(slack, (target - gap) / target)
    label = "%s eps=%g seed=%d" % (setup["threshold"], setup["epsilon"], run_seed)
    return TrialResult(slack >= 0.0, slack, label)


def theorem_trial(seed, trial):
    A, b = _grcar_problem()
    eps = THEOREM_EPS[trial % len(THEOREM_EPS)]
    run_seed = seed + trial // len(THEOREM_EPS)
    _, out = _two_pass(A, b, eps, run_seed)
    # compare against exact GMRES carried to the same number of steps
    ref = reference_exact_solve(A, b, out.k, stop_tolerance=0.0, track_orthogonality=False)
    rep = diagnostics.check_theorem_conclusion(out, ref, eps)
    bound = diagnostics.SQRT3 * (1.0 + rep.slack)
    slack = math.inf
    for k, ratio, rel_t, _ok in rep.rows:
        s = max((bound - ratio) / bound, (6.0 * k * eps - rel_t) / (6.0 * k * eps))
        slack = min(slack, s)
    return TrialResult(rep.holds, slack, "eps=%g seed=%d violations=%d"
                       % (eps, run_seed, len(rep.violations)))


TRIALS = {"nur": nur_trial, "qre": qre_trial, "stls": stls_trial,
          "rgap": rgap_trial, "theorem": theorem_trial}
SUITES = tuple(TRIALS) + ("all",)


def _call(args):
    name, seed, trial = args
    return TRIALS[name](seed, trial)


def run_suite(name, trials=None, seed=0, workers=1):
    """Run ``trials`` trials of one suite (``trials=None`` uses the default)."""
    if name not in TRIALS:
        raise ValueError("unknown suite %r (choose from %s)" % (name, ", ".join(SUITES)))
    trials = DEFAULT_TRIALS[name] if trials is None else trials
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(name, seed, t) for t in range(trials)]
    result = SuiteResult(name)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            result.trials = list(pool.map(_call, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        result.trials = [_call(j) for j in jobs]
    return result


def run_suites(name, trials=None, seed=0, workers=1):
    names = list(TRIALS) if name == "all" else [name]
    return [run_suite(n, trials, seed, workers) for n in names]
