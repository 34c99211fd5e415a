"""Monte Carlo simulation of the two-phase EH relay network.

The simulator shares no code with the closed forms beyond link parameters:
it draws channel gains, runs per-relay batteries slot by slot, selects the
best active relay and counts outages.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numba
import numpy as np

from .channel import sample_gain
from .energy import (
    aggregate_outage,
    binomial_weights,
    relay_active_probability,
    selection_probability,
)
from .primary import InfeasibleConstraintError, solve_power_budget
from .secondary import SecondaryScenario, secondary_outage_given_n

__all__ = [
    "OutageEstimate",
    "RelayState",
    "SlotOutcome",
    "RelayNetwork",
    "SecondarySimResult",
    "SweepRow",
    "run_primary_sim",
    "mc_decode_success",
    "mc_secondary_outage_given_n",
    "run_secondary_sim",
    "analytical_secondary_outage",
    "relay_transmit_power",
    "run_sweep",
]

CHUNK = 1 << 16
# batteries reaching the threshold through float accumulation count as full
_ACTIVE_RTOL = 1e-12


@dataclass(frozen=True)
class OutageEstimate:
    """Empirical probability from ``trials`` independent Bernoulli outcomes."""

    probability: float
    trials: int
    source: str = "monte-carlo"

    @property
    def half_width_95(self):
        p = self.probability
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)

    def standard_error(self, reference=None):
        """Binomial standard error, at ``reference`` if given."""
        q = self.probability if reference is None else reference
        return math.sqrt(q * (1.0 - q) / self.trials)

    def agrees_with(self, value, n_se=3.0):
        """``|estimate - value| <= n_se`` standard errors evaluated at ``value``."""
        return abs(self.probability - value) <= n_se * self.standard_error(value)


@dataclass
class RelayState:
    battery: float = 0.0
    active: bool = False


@dataclass(frozen=True)
class SlotOutcome:
    n_active: int
    selected_relay: int | None
    secondary_outage: bool
    end_to_end_sinr: float


class RelayNetwork:
    """Slot-by-slot reference model of the relay batteries and selection.

    Parameters
    ----------
    n_relays : int
    p_tx : float
        Relay transmit power (W).
    gamma : float
        Secondary SINR threshold.
    slot_duration : float
        Phase length ``T`` (s); a forwarding transmission costs ``p_tx * T``.
    capacity : float
        Battery cap (J).
    """

    def __init__(self, n_relays, p_tx, gamma, slot_duration=1.0, capacity=math.inf):
        if not p_tx > 0:
            raise ValueError(f"relay transmit power must be positive, got {p_tx}")
        self.relays = [RelayState() for _ in range(n_relays)]
        self.cost = p_tx * slot_duration
        self.gamma = gamma
        self.capacity = capacity

    def step(self, e2e_sinr, harvest):
        """Advance one slot.

        ``e2e_sinr[i]`` is ``min(SINR at relay i, SINR at SD via relay i)``
        and ``harvest[i]`` the energy relay ``i`` collects this slot.
        """
        threshold = self.cost * (1.0 - _ACTIVE_RTOL)
        for r, h in zip(self.relays, harvest):
            r.battery = min(r.battery + h, self.capacity)
            r.active = r.battery >= threshold
        active = [i for i, r in enumerate(self.relays) if r.active]
        if not active:
            return SlotOutcome(0, None, True, 0.0)
        best = max(active, key=lambda i: (e2e_sinr[i], -i))
        chosen = self.relays[best]
        left = chosen.battery - self.cost
        if left < -1e-9 * self.cost:
            raise AssertionError("energy neutrality violated")
        chosen.battery = max(left, 0.0)
        value = float(e2e_sinr[best])
        return SlotOutcome(len(active), best, value <= self.gamma, value)


@numba.njit(cache=True)
def _advance_slots(metric, harvest, battery, cost, gamma, capacity, count_from,
                   active_counts, selected_counts, n_hist, tally):
    threshold = cost * (1.0 - 1e-12)
    n_slots, m = metric.shape
    for s in range(n_slots):
        counted = s >= count_from
        best = -1
        best_val = -1.0
        n_active = 0
        for i in range(m):
            b = battery[i] + harvest[s, i]
            if b > capacity:
                b = capacity
            battery[i] = b
            if b >= threshold:
                n_active += 1
                if counted:
                    active_counts[i] += 1
                if metric[s, i] > best_val:
                    best_val = metric[s, i]
                    best = i
        if best >= 0:
            left = battery[best] - cost
            if left < -1e-9 * cost:
                raise AssertionError("energy neutrality violated")
            battery[best] = max(left, 0.0)
        if counted:
            n_hist[n_active] += 1
            if best < 0 or best_val <= gamma:
                tally[0] += 1
            if best >= 0:
                selected_counts[best] += 1
                tally[1] += 1


def _e2e_sinr(rng, k, n, p_st, p_tx, p_pt, n0, links, shared_interference):
    """``min(SINR_ST->SR_i, SINR_SR_i->SD)`` for ``k`` slots and ``n`` relays."""
    st_sr = sample_gain(links.st_sr, rng, (k, n))
    pt_sr = sample_gain(links.pt_sr, rng, (k, n))
    sr_sd = sample_gain(links.sr_sd, rng, (k, n))
    # one PT->SD gain per slot is common to every relay's second hop
    pt_sd = sample_gain(links.pt_sd, rng, (k, 1) if shared_interference else (k, n))
    g1 = p_st * st_sr / (p_pt * pt_sr + n0)
    g2 = p_tx * sr_sd / (p_pt * pt_sd + n0)
    return np.minimum(g1, g2)


def run_primary_sim(scenario, p_interferer, trials, seed, chunk=1 << 20):
    """Empirical primary outage, ``SINR_PD <= theta_p``.

    Identical ``seed`` gives identical draws for any ``p_interferer``, so
    estimates are comparable with common random numbers.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    s = scenario
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        x = sample_gain(s.link_pp, rng, k)
        y = sample_gain(s.link_ip, rng, k)
        sinr = s.p_pt * x / (p_interferer * y + s.n0)
        hits += int(np.count_nonzero(sinr <= s.theta_p))
        done += k
    return OutageEstimate(hits / trials, trials)


def mc_decode_success(scenario, trials, seed, chunk=1 << 20):
    """Empirical probability that a relay's first-hop SINR exceeds gamma."""
    s = scenario
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        x = sample_gain(s.st_sr, rng, k)
        y = sample_gain(s.pt_sr, rng, k)
        hits += int(np.count_nonzero(s.p_st * x / (s.p_pt * y + s.n0) > s.gamma))
        done += k
    return OutageEstimate(hits / trials, trials)


def mc_secondary_outage_given_n(scenario, n, trials, seed, shared_interference=True,
                                chunk=1 << 18):
    """Empirical best-relay outage with ``n`` relays, no energy constraint.

    ``shared_interference=False`` draws an independent PT->SD gain per
    relay.  That variant is deliberately wrong and exists so tests can show
    the correlation matters.
    """
    s = scenario
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        e2e = _e2e_sinr(rng, k, n, s.p_st, s.p_sr, s.p_pt, s.n0,
                        s, shared_interference)
        hits += int(np.count_nonzero(e2e.max(axis=1) <= s.gamma))
        done += k
    return OutageEstimate(hits / trials, trials)


@dataclass(frozen=True)
class SecondarySimResult:
    """Outcome of :func:`run_secondary_sim`; statistics exclude warm-up."""

    estimate: OutageEstimate
    activity: np.ndarray
    selection: np.ndarray
    n_active_hist: np.ndarray
    n_active_mean: float
    transmissions: int
    relays: list
    slots: int
    warmup: int


def relay_transmit_power(budget, mode):
    """Relay power for a sweep mode: ``P_SR`` or ``min(2 M H_av, P_SR)``."""
    if mode == "max-power":
        return budget.p_sr
    if mode == "min-rule":
        return budget.effective_p_sr
    raise ValueError(f"unknown mode {mode!r}")


def run_secondary_sim(config, budget, slots, seed, p_tx=None, shared_interference=True):
    """Simulate the EH relay network for ``slots`` two-phase slots.

    Per slot every relay harvests for ``2T`` seconds, all gains are drawn
    afresh (one PT->SD gain shared by the relays), the relays holding at
    least ``p_tx * T`` joules are active, the active relay maximising
    ``min(SINR_SR, SINR_RD)`` forwards and pays ``p_tx * T``.  An empty
    active set or a best end-to-end SINR at or below the threshold is an
    outage.

    Parameters
    ----------
    config : SystemConfig
    budget : PowerBudget
        ST power is ``budget.p_st``.
    slots : int
        Slots to simulate; the first ``warmup_fraction`` are discarded.
    seed : int or numpy.random.SeedSequence
    p_tx : float, optional
        Relay transmit power; defaults to the config mode's choice.
    shared_interference : bool
        ``False`` gives the broken independent-interference variant.
    """
    if slots < 1:
        raise ValueError(f"slots must be >= 1, got {slots}")
    if p_tx is None:
        p_tx = relay_transmit_power(budget, config.mode)
    if not p_tx > 0:
        raise ValueError(f"relay transmit power must be positive, got {p_tx}")

    m = config.relays
    links = config.links
    p_pt, n0, gamma = config.p_pt_watts, config.n0_watts, config.gamma_s
    t = config.slot_duration
    harvest_mean = config.h_av * 2.0 * t
    cost = p_tx * t
    warmup = int(config.warmup_fraction * slots)

    rng = np.random.default_rng(seed)
    battery = np.zeros(m)
    active_counts = np.zeros(m, dtype=np.int64)
    selected_counts = np.zeros(m, dtype=np.int64)
    n_hist = np.zeros(m + 1, dtype=np.int64)
    tally = np.zeros(2, dtype=np.int64)

    start = 0
    while start < slots:
        k = min(CHUNK, slots - start)
        metric = _e2e_sinr(rng, k, m, budget.p_st, p_tx, p_pt, n0, links, shared_interference)
        if config.harvest == "exponential":
            harvest = rng.exponential(harvest_mean, (k, m)) if harvest_mean > 0 else np.zeros((k, m))
        else:
            harvest = np.full((k, m), harvest_mean)
        _advance_slots(metric, harvest, battery, cost, gamma, config.battery_capacity,
                       warmup - start, active_counts, selected_counts, n_hist, tally)
        start += k

    counted = slots - warmup
    threshold = cost * (1.0 - _ACTIVE_RTOL)
    relays = [RelayState(float(b), bool(b >= threshold)) for b in battery]
    hist = n_hist / counted
    return SecondarySimResult(
        estimate=OutageEstimate(int(tally[0]) / counted, counted),
        activity=active_counts / counted,
        selection=selected_counts / counted,
        n_active_hist=hist,
        n_active_mean=float(np.dot(np.arange(m + 1), hist)),
        transmissions=int(tally[1]),
        relays=relays,
        slots=slots,
        warmup=warmup,
    )


def analytical_secondary_outage(config, p_st, p_tx):
    """Closed-form outage averaged over the active-relay count."""
    energy = config.energy
    eta = relay_active_probability(energy, p_tx)
    scenario = SecondaryScenario.from_links(
        config.links, p_st, p_tx, config.p_pt_watts, config.n0_watts, config.gamma_s
    )
    weights = binomial_weights(config.relays, eta)
    by_n = {
        n: secondary_outage_given_n(scenario, n)
        for n in range(1, config.relays + 1)
        if weights[n] > 0.0
    }
    return aggregate_outage(config.relays, eta, by_n)


@dataclass(frozen=True)
class SweepRow:
    theta_p: float
    p_st: float = math.nan
    p_sr: float = math.nan
    p_effective: float = math.nan
    omega: float = math.nan
    eta: float = math.nan
    p_sout_analytical: float = math.nan
    p_sout_simulated: float = math.nan
    ci_halfwidth: float = math.nan
    n_active_mean: float = math.nan
    status: str = "ok"


def _sweep_point(config, theta, mode, slots, seed):
    try:
        budget = solve_power_budget(
            config.links, config.p_pt_watts, config.n0_watts, config.theta_p, theta,
            config.energy, config.p_upper_bracket,
        )
    except InfeasibleConstraintError:
        return SweepRow(theta, status="infeasible")
    p_tx = relay_transmit_power(budget, mode)
    base = dict(theta_p=theta, p_st=budget.p_st, p_sr=budget.p_sr, p_effective=budget.effective_p_sr)
    if not (p_tx > 0 and budget.p_st > 0):
        return SweepRow(**base, status="zero-power")
    omega = selection_probability(config.energy, p_tx)
    eta = relay_active_probability(config.energy, p_tx)
    analytical = analytical_secondary_outage(config, budget.p_st, p_tx)
    status = "saturated" if (budget.st_saturated or budget.sr_saturated) else "ok"
    if slots <= 0:
        return SweepRow(**base, omega=omega, eta=eta, p_sout_analytical=analytical, status=status)
    sim = run_secondary_sim(config, budget, slots, seed, p_tx=p_tx)
    return SweepRow(
        **base,
        omega=omega,
        eta=eta,
        p_sout_analytical=analytical,
        p_sout_simulated=sim.estimate.probability,
        ci_halfwidth=sim.estimate.half_width_95,
        n_active_mean=sim.n_active_mean,
        status=status,
    )


def _sweep_point_args(args):
    return _sweep_point(*args)


def run_sweep(config, theta_grid=None, mode=None, slots=None, seed=None, workers=None):
    """Closed-form and simulated secondary outage over a grid of outage caps.

    Each grid point gets its own child of ``SeedSequence(seed)``, so rows do
    not depend on ``workers`` or on completion order.

    Returns
    -------
    list of SweepRow
        Ordered as ``theta_grid``.  Infeasible caps yield a row with
        ``status="infeasible"`` instead of an exception.
    """
    theta_grid = config.theta_grid if theta_grid is None else tuple(theta_grid)
    mode = config.mode if mode is None else mode
    slots = config.slots if slots is None else slots
    seed = config.seed if seed is None else seed
    workers = config.workers if workers is None else workers
    seeds = np.random.SeedSequence(seed).spawn(len(theta_grid))
    jobs = [(config, th, mode, slots, ss) for th, ss in zip(theta_grid, seeds)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point_args, jobs))
    return [_sweep_point_args(j) for j in jobs]
