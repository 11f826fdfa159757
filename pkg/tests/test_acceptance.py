"""Acceptance suite: ten numbered end-to-end criteria for the package.

Each test exercises one criterion at its stated tolerance and wall-time
budget and prints one summary line ("[criterion NN] PASS/FAIL ...").  Run
with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the summary
lines of passing tests as well).  Every random draw is seeded, so the suite
is deterministic end to end.

The criteria:

 1. exact full-twirl sampler equivalence (rational arithmetic, n = 2..4)
 2. exact k-sparse sampler equivalence (k = 1..3 at n = 4)
 3. white-noise distance closed forms and their scalings in n
 4. fast engine agrees with the dense oracle on random circuits
 5. bias-vs-size scaling of the rescaling estimator on Trotter circuits
 6. noisy-gadget regime orderings (twirling helps until gadgets dominate)
 7. sampling-overhead limits and the overhead lower bound
 8. Monte-Carlo bias of random-Clifford circuits vs the closed-form bounds
 9. distance trends of the rescaled state (saturation in depth, decay in n)
10. fault-tolerance error-budget calculator
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import spearmanr

from twirlkit.channels import (
    avg_noise_strength,
    distance_v,
    make_single_qubit_pauli_noise,
    unitarity,
)
from twirlkit.circuits import (
    CliffordLayer,
    LogicalCircuit,
    RotationLayer,
    NoiseLayer,
    average_bias,
    build_trotter_circuit,
    corollary_bound,
    effective_fidelity,
    heisenberg_2d,
    optimal_rescale_coefficient,
    overhead_lower_bound,
    overhead_pec,
    overhead_rescaling,
    rz_axis_noise,
    whitenoise_bias_bound,
)
from twirlkit.cli import BudgetInput, error_budget
from twirlkit.dense import effective_fidelity_dense, rescaled_distance_scan
from twirlkit.paulis import parse_pauli, random_pauli
from twirlkit.tableau import decompose_gates, random_clifford
from twirlkit.twirl import (
    SymmetrySpec,
    enumerate_sampler_distribution,
    twirl_channel,
    twirl_channel_ksparse,
)

# Wall-time budget per criterion, in seconds.
BUDGETS = {
    1: 60.0,
    2: 120.0,
    3: 60.0,
    4: 300.0,
    5: 900.0,
    6: 1800.0,
    7: 1.0,
    8: 600.0,
    9: 1200.0,
    10: 0.001,
}


def _report(num: int, elapsed: float, checks: list[tuple[str, bool]], detail: str) -> None:
    """Print the criterion's verdict line and assert every check plus the budget."""
    budget = BUDGETS[num]
    failures = [name for name, ok in checks if not ok]
    if elapsed >= budget:
        failures.append(f"runtime {elapsed:.3g}s exceeded the {budget:g}s budget")
    verdict = "PASS" if not failures else "FAIL"
    line = f"[criterion {num:02d}] {verdict} ({elapsed:.3g}s / {budget:g}s budget) — {detail}"
    print(line)
    assert not failures, f"{line}; failed: {'; '.join(failures)}"


def _mass_map(channel) -> dict:
    """Pauli → exact probability mass of a channel (floats made rational)."""
    out: dict = {}
    for prob, ensemble in channel.atoms:
        share = Fraction(prob) / ensemble.cardinality
        for member in ensemble.members():
            out[member] = out.get(member, Fraction(0)) + share
    return out


def _scrambled_mass_map(channel, dist) -> dict:
    """Exact mass map of D·E·D† averaged over an enumerated gadget distribution."""
    out: dict = {}
    for prob, ensemble in channel.atoms:
        share = Fraction(prob) / ensemble.cardinality
        for member in ensemble.members():
            for weight, gadget in dist:
                scrambled = gadget.conjugate_pauli(member).unsigned()
                out[scrambled] = out.get(scrambled, Fraction(0)) + weight * share
    return out


# --------------------------------------------------------------------------
# 1–2: the gate samplers average to the analytic twirl, exactly
# --------------------------------------------------------------------------


def test_criterion_01_full_twirl_sampler_exact():
    t0 = time.perf_counter()
    checks = []
    sizes = []
    for n in (2, 3, 4):
        dist = enumerate_sampler_distribution(n, "full")
        sizes.append(len(dist))
        checks.append((f"n={n} sampler weights sum to one", sum(w for w, _ in dist) == 1))

        x_noise = make_single_qubit_pauli_noise(n, 0, 0.3, 0.0, 0.0)
        analytic = twirl_channel(x_noise, SymmetrySpec.rz_first_qubit(n))
        checks.append(
            (
                f"n={n} sampler average equals the analytic X twirl exactly",
                _scrambled_mass_map(x_noise, dist) == _mass_map(analytic),
            )
        )

        z_noise = make_single_qubit_pauli_noise(n, 0, 0.0, 0.0, 0.3)
        checks.append(
            (
                f"n={n} pure-Z channel is exactly invariant",
                _scrambled_mass_map(z_noise, dist) == _mass_map(z_noise),
            )
        )
    _report(
        1,
        time.perf_counter() - t0,
        checks,
        f"zero rational discrepancy over {sizes} gadget outcomes at n=2,3,4",
    )


def test_criterion_02_ksparse_sampler_exact():
    t0 = time.perf_counter()
    n = 4
    checks = []
    sizes = []
    for k in (1, 2, 3):
        dist = enumerate_sampler_distribution(n, "ksparse", k)
        sizes.append(len(dist))
        checks.append((f"k={k} sampler weights sum to one", sum(w for w, _ in dist) == 1))

        x_noise = make_single_qubit_pauli_noise(n, 0, 0.3, 0.0, 0.0)
        analytic = twirl_channel_ksparse(x_noise, k)
        checks.append(
            (
                f"k={k} sampler average equals the analytic k-sparse twirl exactly",
                _scrambled_mass_map(x_noise, dist) == _mass_map(analytic),
            )
        )

        z_noise = make_single_qubit_pauli_noise(n, 0, 0.0, 0.0, 0.3)
        checks.append(
            (
                f"k={k} pure-Z channel is exactly invariant",
                _scrambled_mass_map(z_noise, dist) == _mass_map(z_noise),
            )
        )
    _report(
        2,
        time.perf_counter() - t0,
        checks,
        f"zero rational discrepancy over {sizes} gadget outcomes at n=4, k=1,2,3",
    )


# --------------------------------------------------------------------------
# 3: white-noise distance closed forms and scalings
# --------------------------------------------------------------------------


def test_criterion_03_distance_closed_forms():
    t0 = time.perf_counter()
    checks = []
    ns = [4, 6, 8, 12, 16, 24, 32, 48, 64]

    def xy_noise(n):
        return make_single_qubit_pauli_noise(n, 0, 0.005, 0.005, 0.0)

    # Full twirl of X/Y noise: distance shrinks exponentially, halving per qubit.
    v_full = [
        distance_v(twirl_channel(xy_noise(n), SymmetrySpec.rz_first_qubit(n))) for n in ns
    ]
    slope_full = float(np.polyfit(ns, np.log(v_full), 1)[0])
    checks.append(
        ("full-twirl distance halves per added qubit", abs(slope_full + math.log(2)) <= 0.01)
    )

    # k-sparse twirl: power-law decay with exponent -(k-1)/2.
    slopes_k = {}
    for k in (2, 3):
        v_k = [distance_v(twirl_channel_ksparse(xy_noise(n), k)) for n in ns]
        slopes_k[k] = float(np.polyfit(np.log(ns), np.log(v_k), 1)[0])
        checks.append(
            (
                f"{k}-sparse distance decays as n^-{(k - 1) / 2:g}",
                abs(slopes_k[k] + (k - 1) / 2) <= 0.1,
            )
        )

    # Leading-order values at n = 10.
    n = 10
    px, py, pz = 3e-3, 2e-3, 1e-3
    p_err = px + py + pz
    plain = make_single_qubit_pauli_noise(n, 0, px, py, pz)
    v_plain = distance_v(plain)
    expect_plain = math.sqrt(px**2 + py**2 + pz**2) / p_err
    checks.append(
        (
            "untwirled distance is the 2-norm of the relative rates",
            abs(v_plain - expect_plain) / expect_plain <= 1e-4,
        )
    )

    v_tw = distance_v(twirl_channel(plain, SymmetrySpec.rz_first_qubit(n)))
    checks.append(
        (
            "full twirl keeps only the Z share of the distance",
            abs(v_tw - pz / p_err) / (pz / p_err) <= 1e-4,
        )
    )

    p = 3e-3
    dep = make_single_qubit_pauli_noise(n, 0, p / 3, p / 3, p / 3)
    v_dep = distance_v(dep)
    v_dep_tw = distance_v(twirl_channel(dep, SymmetrySpec.rz_first_qubit(n)))
    checks.append(
        ("depolarizing distance is 1/sqrt(3)", abs(v_dep - 1 / math.sqrt(3)) * math.sqrt(3) <= 1e-4)
    )
    checks.append(
        ("twirled depolarizing distance is 1/3", abs(v_dep_tw - 1 / 3) * 3 <= 1e-4)
    )

    _report(
        3,
        time.perf_counter() - t0,
        checks,
        f"slopes: full {slope_full:+.5f} (target -ln2), "
        f"2-sparse {slopes_k[2]:+.3f}, 3-sparse {slopes_k[3]:+.3f}; "
        f"v(untwirled)={v_plain:.6f}, v(dep)={v_dep:.6f}",
    )


# --------------------------------------------------------------------------
# 4: fast engine vs dense oracle
# --------------------------------------------------------------------------


def _random_circuit(n, rng, rotations):
    """Random alternation of Clifford layers and noisy π/4 rotations."""
    layers = []
    for _ in range(rotations):
        op = random_clifford(n, rng)
        layers.append(CliffordLayer(op, tuple(decompose_gates(op))))
        axis = random_pauli(n, exclude_identity=True, rng=rng)
        rates = rng.dirichlet([1.0, 1.0, 1.0]) * rng.uniform(0.01, 0.15)
        mode = ("none", "analytic_full", "analytic_ksparse")[int(rng.integers(3))]
        layers.append(
            RotationLayer(
                axis,
                math.pi / 4,
                rz_axis_noise(*rates),
                mode,
                2 if mode == "analytic_ksparse" else None,
            )
        )
    return LogicalCircuit(n, tuple(layers))


def test_criterion_04_engine_matches_dense_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(20):
        rotations = int(rng.integers(5, 31))
        c = _random_circuit(4, rng, rotations)
        for _ in range(2):
            obs = random_pauli(4, exclude_identity=True, rng=rng)
            fast, _ = effective_fidelity(c, obs, 1, rng)
            worst = max(worst, abs(fast - effective_fidelity_dense(c, obs)))
    checks = [("engine and dense oracle agree to 1e-10", worst <= 1e-10)]
    _report(
        4,
        time.perf_counter() - t0,
        checks,
        f"20 random n=4 circuits (L ≤ 30), max |engine − dense| = {worst:.2e}",
    )


# --------------------------------------------------------------------------
# 5: bias scaling with system size on Trotter circuits
# --------------------------------------------------------------------------


def test_criterion_05_bias_scaling_with_system_size():
    t0 = time.perf_counter()
    sides = (2, 3, 4, 5, 6)
    results = {}
    for mode, k in (("none", None), ("analytic_full", None), ("analytic_ksparse", 2)):
        pts = []
        for s in sides:
            model = heisenberg_2d(s, s)
            layers = build_trotter_circuit(model, 100, 0.1, True).num_rotation_layers
            p = 1.0 / layers
            c = build_trotter_circuit(
                model,
                100,
                0.1,
                True,
                base_noise=rz_axis_noise(p / 2, p / 2, 0.0),
                twirl_mode=mode,
                k=k,
            )
            mean, _ = average_bias(c, 1000, 1, np.random.default_rng(1000 + s))
            pts.append((s * s, mean))
        results[mode] = pts

    def loglog_slope(pts):
        ns = np.log([q for q, _ in pts])
        ms = np.log([b for _, b in pts])
        return float(np.polyfit(ns, ms, 1)[0])

    slope_none = loglog_slope(results["none"])
    slope_ks = loglog_slope(results["analytic_ksparse"])
    full16 = dict(results["analytic_full"])[16]

    # Depolarizing noise: full and 2-sparse twirls should barely differ.
    model = heisenberg_2d(4, 4)
    p = 1.0 / build_trotter_circuit(model, 100, 0.1, True).num_rotation_layers
    dep = {}
    for mode, k in (("analytic_full", None), ("analytic_ksparse", 2)):
        c = build_trotter_circuit(
            model,
            100,
            0.1,
            True,
            base_noise=rz_axis_noise(p / 3, p / 3, p / 3),
            twirl_mode=mode,
            k=k,
        )
        dep[mode], _ = average_bias(c, 1000, 1, np.random.default_rng(9))
    dep_rel = abs(dep["analytic_full"] - dep["analytic_ksparse"]) / dep["analytic_full"]

    checks = [
        ("untwirled bias decays as 1/sqrt(n) (slope -0.5 ± 0.15)", abs(slope_none + 0.5) <= 0.15),
        ("2-sparse twirl bias decays as 1/n (slope -1.0 ± 0.2)", abs(slope_ks + 1.0) <= 0.2),
        ("full-twirl bias at n=16 is at most 1e-3", full16 <= 1e-3),
        ("depolarizing: full vs 2-sparse bias within 20%", dep_rel < 0.20),
    ]
    _report(
        5,
        time.perf_counter() - t0,
        checks,
        f"slopes: untwirled {slope_none:+.3f}, 2-sparse {slope_ks:+.3f}; "
        f"full-twirl bias(n=16) = {full16:.2e}; depolarizing gap {dep_rel:.1%}",
    )


# --------------------------------------------------------------------------
# 6: noisy gadgets — twirling helps until gadget noise dominates
# --------------------------------------------------------------------------


def test_criterion_06_gadget_noise_orderings():
    t0 = time.perf_counter()
    model = heisenberg_2d(4, 4)
    steps = 10
    layers = build_trotter_circuit(model, steps, 0.1, True).num_rotation_layers
    p = 1.0 / layers

    c0 = build_trotter_circuit(
        model, steps, 0.1, True, base_noise=rz_axis_noise(p / 2, p / 2, 0.0)
    )
    untwirled, _ = average_bias(c0, 200, 1, np.random.default_rng(2))

    bias = {}
    for ratio in (1e-3, 1e-1):
        for mode, k in (("full", None), ("ksparse", 2)):
            c = build_trotter_circuit(
                model,
                steps,
                0.1,
                True,
                base_noise=rz_axis_noise(p / 2, p / 2, 0.0),
                twirl_mode=mode,
                k=k,
                gadget_noise_rate=ratio * p,
            )
            mean, _ = average_bias(c, 200, 200, np.random.default_rng(3))
            bias[mode, ratio] = mean

    checks = [
        (
            "clean gadgets (ratio 1e-3): full twirl beats untwirled",
            bias["full", 1e-3] < untwirled,
        ),
        (
            "clean gadgets (ratio 1e-3): 2-sparse twirl beats untwirled",
            bias["ksparse", 1e-3] < untwirled,
        ),
        (
            "noisy gadgets (ratio 1e-1): 2-sparse twirl beats full twirl",
            bias["ksparse", 1e-1] < bias["full", 1e-1],
        ),
    ]
    _report(
        6,
        time.perf_counter() - t0,
        checks,
        f"n=16 biases: untwirled {untwirled:.3f}; "
        f"@1e-3 full {bias['full', 1e-3]:.3f} / 2-sparse {bias['ksparse', 1e-3]:.3f}; "
        f"@1e-1 full {bias['full', 1e-1]:.3f} / 2-sparse {bias['ksparse', 1e-1]:.3f}",
    )


# --------------------------------------------------------------------------
# 7: sampling-overhead limits and lower bound
# --------------------------------------------------------------------------


def test_criterion_07_overhead_limits_and_lower_bound():
    t0 = time.perf_counter()
    big_l, big_n = 10**6, 30
    rescale_limit = overhead_rescaling(1.0 / big_l, big_l, big_n)
    pec_limit = overhead_pec(1.0 / big_l, big_l)

    p = 1e-3
    grid_ok = True
    for n in (1, 2, 4, 8):
        for num_layers in (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000):
            lower = overhead_lower_bound(p, num_layers, n)
            if overhead_rescaling(p, num_layers, n) < lower - 1e-12:
                grid_ok = False

    checks = [
        ("rescaling overhead tends to e^2", abs(rescale_limit - math.e**2) <= 0.01),
        ("cancellation overhead tends to e^4", abs(pec_limit - math.e**4) <= 0.1),
        ("rescaling overhead dominates the lower bound on the whole grid", grid_ok),
    ]
    _report(
        7,
        time.perf_counter() - t0,
        checks,
        f"limits: rescaling {rescale_limit:.5f} (e²={math.e**2:.5f}), "
        f"cancellation {pec_limit:.4f} (e⁴={math.e**4:.4f}); "
        f"lower bound respected at p=1e-3 over 4×13 grid points",
    )


# --------------------------------------------------------------------------
# 8: Monte-Carlo bias of random-Clifford circuits vs the closed-form bounds
# --------------------------------------------------------------------------


def test_criterion_08_random_circuit_bias_bounds():
    t0 = time.perf_counter()
    n = 4
    obs = parse_pauli("ZIII")
    draws = 500
    checks = []
    summary = []
    for num_layers in (10, 50, 200):
        p = 1.0 / num_layers
        ch = make_single_qubit_pauli_noise(n, 0, p / 3, p / 3, p / 3)
        s, u, v = avg_noise_strength(ch), unitarity(ch), distance_v(ch)
        bound = whitenoise_bias_bound(s, u, num_layers, n)
        rng = np.random.default_rng(20 + num_layers)
        biases = []
        for _ in range(draws):
            layers = []
            for _l in range(num_layers):
                op = random_clifford(n, rng)
                layers.append(CliffordLayer(op, tuple(decompose_gates(op))))
                layers.append(NoiseLayer(ch))
            c = LogicalCircuit(n, tuple(layers))
            fid, _ = effective_fidelity(c, obs, 1, rng)
            r = optimal_rescale_coefficient(c)
            biases.append(abs(r * abs(fid) - 1.0))
        mean = float(np.mean(biases))
        checks.append(
            (f"L={num_layers}: mean bias {mean:.4f} ≤ bound {bound:.4f}", mean <= bound)
        )
        summary.append(f"L={num_layers}: {mean:.4f}≤{bound:.4f}")
        if num_layers == 200:
            cor = corollary_bound(v, 1.0, num_layers)
            ratio = mean / cor
            checks.append(
                (
                    "large-L mean bias within a factor 2 of v·p_tot/√L",
                    0.5 <= ratio <= 2.0,
                )
            )
            summary.append(f"L=200 vs √L-rule: ratio {ratio:.2f}")
    _report(8, time.perf_counter() - t0, checks, "; ".join(summary))


# --------------------------------------------------------------------------
# 9: distance trends of the rescaled state
# --------------------------------------------------------------------------


def test_criterion_09_rescaled_state_distance_trends():
    t0 = time.perf_counter()

    # (a) trace distance saturates as the circuit deepens at fixed total noise
    rows_a = rescaled_distance_scan(
        [4], [25, 50, 100, 200], 0.3, 1.0, 3, 6, np.random.default_rng(42)
    )
    tds = [r["trace_distance"] for r in rows_a]
    ses = [r["trace_stderr"] for r in rows_a]
    tail_ok = all(
        tds[i + 1] >= tds[i] - 3.0 * math.hypot(ses[i], ses[i + 1])
        for i in range(len(tds) - 1)
    )
    level_ok = tds[-1] >= 0.75 * max(tds)

    # (b) measured total-variation distance shrinks with system size at fixed depth
    rows_b = rescaled_distance_scan(
        [2, 3, 4, 5, 6, 7], [200], 0.3, 1.0, 2, 6, np.random.default_rng(7)
    )
    tvs = [r["tv_distance"] for r in rows_b]
    rho, pval = spearmanr(range(len(tvs)), tvs)

    checks = [
        ("trace distance tail is non-decreasing within noise", tail_ok),
        ("deepest point holds the saturation level", level_ok),
        ("TV distance decreases with n (negative rank correlation)", rho < 0),
        ("rank correlation is significant (p < 0.05)", pval < 0.05),
    ]
    _report(
        9,
        time.perf_counter() - t0,
        checks,
        f"td(T=25..200) = {[f'{v:.3f}' for v in tds]}; "
        f"tv(n=2..7) Spearman ρ = {rho:.2f}, p = {pval:.2g}",
    )


# --------------------------------------------------------------------------
# 10: fault-tolerance error budget
# --------------------------------------------------------------------------


def test_criterion_10_error_budget_calculator():
    base = BudgetInput(p_phys=1e-3, p_th=1e-2, distance=13)
    error_budget(base)  # warm-up outside the clock
    t0 = time.perf_counter()
    out = error_budget(base)
    elapsed = time.perf_counter() - t0

    checks = [
        (
            "decoding failure rate equals 1e-8",
            out["p_dec"] == pytest.approx(1e-8, rel=1e-12),
        )
    ]
    rich = BudgetInput(
        p_phys=1e-3,
        p_th=1e-2,
        distance=13,
        volume=1e6,
        p_dis=1e-7,
        t_count=10_000,
        p_rot=1e-6,
        rotation_count=500,
    )
    full = error_budget(rich)
    checks.append(
        (
            "total error count is the sum of the three contributions",
            full["n_err"]
            == pytest.approx(full["n_dec"] + full["n_dis"] + full["n_syn"], rel=1e-12),
        )
    )
    _report(10, elapsed, checks, f"p_dec = {out['p_dec']:.3e} in {elapsed * 1e6:.1f} µs")
