"""Oracle checks of every closed form, as run by ``ehrelay validate``."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad

from .energy import relay_active_probability
from .primary import PowerBudget, PrimaryScenario, primary_outage, solve_max_power, solve_power_budget
from .secondary import (
    SecondaryScenario,
    relay_decode_success,
    secondary_outage_closed_form,
    secondary_outage_quadrature,
)
from .simulator import (
    analytical_secondary_outage,
    mc_decode_success,
    mc_secondary_outage_given_n,
    relay_transmit_power,
    run_primary_sim,
    run_secondary_sim,
)
from .special_math import regularized_lower_gamma

__all__ = ["CheckResult", "run_validation", "MIN_MC_TRIALS"]

MIN_MC_TRIALS = 10_000

PASS, FAIL, LOW = "PASS", "FAIL", "LOW-PRECISION"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    value: float
    limit: float
    detail: str = ""

    @property
    def margin(self):
        return self.limit - self.value

    def line(self):
        return f"{self.status:<13} {self.name}: {self.value:.3g} vs limit {self.limit:.3g} {self.detail}".rstrip()


def _check(name, value, limit, detail=""):
    return CheckResult(name, PASS if value <= limit else FAIL, value, limit, detail)


def _mc_check(name, estimate, reference, n_se, trials, detail=""):
    dev = abs(estimate - reference)
    se = math.sqrt(max(reference * (1.0 - reference), 0.0) / trials)
    limit = n_se * se
    if trials < MIN_MC_TRIALS:
        return CheckResult(name, LOW, dev, limit, f"only {trials} trials {detail}".rstrip())
    return _check(name, dev, limit, detail)


def _quad_lower_gamma(a, x):
    if x == 0.0:
        return 0.0
    f = lambda t: math.exp((a - 1) * math.log(t) - t - math.lgamma(a)) if t > 0 else float(a == 1)
    mode = a - 1.0
    pts = [mode] if 0.0 < mode < x else None
    return quad(f, 0.0, x, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def check_incomplete_gamma():
    xs = np.linspace(0.0, 50.0, 51)
    err = max(abs(regularized_lower_gamma(a, x) - _quad_lower_gamma(a, x))
              for a in range(1, 11) for x in xs)
    return _check("incomplete gamma vs quadrature", err, 1e-10)


def run_validation(config, independent_draws=False):
    """Run the oracle suite for ``config``.

    Monte Carlo checks use ``config.trials`` draws (``config.slots`` for
    the network simulation).  ``independent_draws`` switches the correlated
    Monte Carlo to the broken independent-interference variant, which the
    correlation check is expected to flag.

    Returns
    -------
    list of CheckResult
    """
    results = [check_incomplete_gamma()]
    links = config.links
    p_pt, n0 = config.p_pt_watts, config.n0_watts
    grid = config.theta_grid
    theta_mid = grid[len(grid) // 2]
    seeds = iter(np.random.SeedSequence(config.seed).spawn(16))

    st = PrimaryScenario(p_pt, n0, config.theta_p, links.pt_pd, links.st_pd)
    sr = PrimaryScenario(p_pt, n0, config.theta_p, links.pt_pd, links.sr_pd)

    # power inversion round trip over the grid
    worst = 0.0
    for theta in grid:
        for scen in (st, sr):
            p, saturated = solve_max_power(scen, theta, config.p_upper_bracket, full_output=True)
            if not saturated and p > 0:
                worst = max(worst, abs(primary_outage(scen, p) - theta))
    results.append(_check("power inversion round trip", worst, 1e-6))

    budget = solve_power_budget(links, p_pt, n0, config.theta_p, theta_mid, config.energy,
                                config.p_upper_bracket)
    for label, scen, p in (("ST", st, budget.p_st), ("SR", sr, budget.p_sr)):
        exact = primary_outage(scen, p)
        est = run_primary_sim(scen, p, config.trials, next(seeds))
        results.append(_mc_check(f"primary outage ({label} interferer) vs Monte Carlo",
                                 est.probability, exact, 3.0, config.trials))

    p_tx = relay_transmit_power(budget, config.mode)
    sec = SecondaryScenario.from_links(links, budget.p_st, p_tx, p_pt, n0, config.gamma_s)
    a = relay_decode_success(sec)
    est = mc_decode_success(sec, config.trials, next(seeds))
    results.append(_mc_check("relay decode probability vs Monte Carlo", est.probability, a, 3.0,
                             config.trials))

    worst = 0.0
    for n in range(1, config.relays + 1):
        closed, _ = secondary_outage_closed_form(sec, n)
        worst = max(worst, abs(closed - secondary_outage_quadrature(sec, n)))
    results.append(_check("secondary outage closed form vs quadrature", worst, 1e-8))

    label = "independent" if independent_draws else "correlated"
    n_mc = max(2, config.relays)
    closed, _ = secondary_outage_closed_form(sec, n_mc)
    est = mc_secondary_outage_given_n(sec, n_mc, config.trials, next(seeds),
                                      shared_interference=not independent_draws)
    results.append(_mc_check(f"secondary outage N={n_mc} vs {label} Monte Carlo",
                             est.probability, closed, 3.0, config.trials))

    if config.h_av > 0:
        p_half = 4.0 * config.relays * config.h_av  # M * omega = 0.5
        eta = relay_active_probability(config.energy, p_half)
        sim = run_secondary_sim(config, PowerBudget(budget.p_st, p_half, p_half), config.slots,
                                next(seeds), p_tx=p_half)
        dev = abs(float(sim.activity.mean()) - eta)
        status = PASS if dev <= 0.02 else FAIL
        if config.slots < MIN_MC_TRIALS:
            status = LOW
        results.append(CheckResult("relay activity vs queue simulation (M*omega=0.5)", status,
                                   dev, 0.02, f"eta={eta:.4f}"))

    for theta in (grid[0], grid[-1]):
        try:
            b = solve_power_budget(links, p_pt, n0, config.theta_p, theta, config.energy,
                                   config.p_upper_bracket)
        except ValueError:
            continue
        p_tx = relay_transmit_power(b, config.mode)
        if not (p_tx > 0 and config.slots > 0):
            continue
        exact = analytical_secondary_outage(config, b.p_st, p_tx)
        sim = run_secondary_sim(config, b, config.slots, next(seeds), p_tx=p_tx)
        dev = abs(sim.estimate.probability - exact)
        limit = 3.0 * sim.estimate.half_width_95
        status = PASS if dev <= limit else FAIL
        if sim.estimate.trials < MIN_MC_TRIALS:
            status = LOW
        results.append(CheckResult(f"aggregate outage vs network simulation (theta_p={theta:.3g})",
                                   status, dev, limit,
                                   f"eta={relay_active_probability(config.energy, p_tx):.3f}"))
    return results
