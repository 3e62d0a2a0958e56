"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line and the
collected lines are repeated in the pytest terminal summary. Run it alone
with ``pytest tests/test_acceptance.py -s`` or as a script with
``python -m tests.test_acceptance``.

The learning criteria share one set of training runs (cached per session);
the constraint audit and clipped-target checks are evaluated over those
same runs.
"""

from __future__ import annotations

import functools
import statistics
import time

import numpy as np
from scipy import stats

from covsem.agents.common import DDPG, PS_TD3, TD3
from covsem.agents.training import audit_episode, dqn_train, random_policy, random_action, train
from covsem.channel import ATTACKER, detect, detector_threshold, jammer_draw, received_power
from covsem.harness.config import ExperimentConfig
from covsem.neural import DenseNet
from covsem.replay import PrioritizedBuffer, Transition
from covsem.semcore import EmbeddingTable, gnt

RESULTS: dict[int, str] = {}
LEARNING_SEEDS = (0, 1, 2, 3, 4)
SWEEP_SEEDS = (0, 1, 2)
ATTACKER_COUNTS = (1, 2, 3, 4)


def report(n: int, ok: bool, detail: str) -> bool:
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def median(xs):
    return float(statistics.median(xs))


# -- shared training runs -----------------------------------------------------
class Ledger:
    """Violation and clipped-target tallies over every acceptance run."""

    def __init__(self):
        self.violations = 0
        self.episodes = 0
        self.target_batches = 0
        self.target_failures = 0

    def hook(self, y, r, done, q_next, discount):
        self.target_batches += 1
        bounds = [r + discount * (1.0 - done) * q for q in q_next]
        if not all(np.all(y <= b) for b in bounds):
            self.target_failures += 1


LEDGER = Ledger()


def final_stats(result):
    """Mean of the last 10 evaluation points (return and private probability)."""
    evals = [r.evaluation for r in result.curve if r.evaluation is not None][-10:]
    return float(np.mean([e.mean_return for e in evals])), float(np.mean([e.private_prob for e in evals]))


def convergence_index(returns) -> int:
    """First evaluation index reaching 95% of the run's own final mean return."""
    returns = np.asarray(returns)
    final = returns[-10:].mean()
    threshold = final - 0.05 * abs(final)
    return int(np.argmax(returns >= threshold))


def _record(result, env_episodes):
    LEDGER.violations += result.violations
    LEDGER.episodes += env_episodes


@functools.cache
def learning_runs():
    cfg = ExperimentConfig()
    env = cfg.build_env()
    td3 = cfg.td3_config()
    alpha0 = cfg.replace(agent__alpha=0.0).td3_config()
    start = time.perf_counter()
    out = {"ps-td3": {}, "alpha0": {}, "ddpg": {}, "dqn": {}, "random": {}, "transmissions": []}
    per_run_eps = td3.iterations * (td3.episodes_per_iteration + cfg.run.eval_episodes)
    for seed in LEARNING_SEEDS:
        for name, conf, spec in (("ps-td3", td3, PS_TD3), ("alpha0", alpha0, PS_TD3), ("ddpg", td3, DDPG)):
            r = train(env, conf, seed, spec=spec, eval_episodes=cfg.run.eval_episodes,
                      target_hooks=(LEDGER.hook,))
            _record(r, per_run_eps)
            out[name][seed] = r
            if name == "ps-td3":
                out["transmissions"].append(r.transmissions)
        r = dqn_train(env, td3, seed, eval_episodes=cfg.run.eval_episodes)
        _record(r, per_run_eps)
        out["dqn"][seed] = r
        s = random_policy(env, seed, cfg.run.eval_episodes)
        LEDGER.violations += s.violations
        LEDGER.episodes += s.episodes
        out["random"][seed] = s
    out["elapsed"] = time.perf_counter() - start
    return out


@functools.cache
def attacker_runs():
    base = ExperimentConfig()
    priv = {}
    for count in ATTACKER_COUNTS:
        if count == 1:
            # identical config and seeds to the learning runs
            runs = learning_runs()["ps-td3"]
            priv[count] = [final_stats(runs[s])[1] for s in SWEEP_SEEDS]
            continue
        cfg = base.replace(episode__n_attackers=count)
        env = cfg.build_env()
        vals = []
        for seed in SWEEP_SEEDS:
            r = train(env, cfg.td3_config(), seed, eval_episodes=cfg.run.eval_episodes,
                      target_hooks=(LEDGER.hook,))
            td3 = cfg.td3_config()
            _record(r, td3.iterations * (td3.episodes_per_iteration + cfg.run.eval_episodes))
            vals.append(final_stats(r)[1])
        priv[count] = vals
    return priv


# -- criterion 1 --------------------------------------------------------------
def brute_gnt(vectors, received):
    K = len(vectors)
    total = 0.0
    for k in range(K):
        best = None
        for j in received:
            u, v = vectors[k], vectors[j]
            dot = sum(a * b for a, b in zip(u, v))
            c = dot / (sum(a * a for a in u) ** 0.5 * sum(b * b for b in v) ** 0.5)
            best = c if best is None else max(best, c)
        total += 0.0 if best is None else best
    return total / K


def test_criterion_1_gnt_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 17))
        d = int(rng.integers(1, 33))
        raw = rng.normal(size=(K, d))
        table = EmbeddingTable.from_raw(raw)
        recv = [k for k in range(K) if rng.random() < rng.random()]
        worst = max(worst, abs(gnt(range(K), recv, table) - brute_gnt(raw.tolist(), recv)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10.0
    assert report(1, ok, f"max |gnt - brute| = {worst:.2e} over 1000 instances in {elapsed:.2f}s")


# -- criterion 2 --------------------------------------------------------------
def _pattern(net, x):
    _, acts = net.forward_train(x)
    return [a > 0.0 for a in acts[1:-1]]


def _fd_check(net, x, up, rng, per_tensor=12, h=1e-4):
    """Worst relative error over sampled coordinates, plus how many were redrawn.

    A central difference is only a valid reference where no ReLU changes
    state between the +h and -h evaluations, so such coordinates are
    replaced by fresh draws.
    """
    grads, _ = net.backward(x, up)
    worst, redrawn = 0.0, 0
    for li, p in enumerate(net.params):
        checked = 0
        while checked < per_tensor:
            idx = tuple(int(rng.integers(0, s)) for s in p.shape)
            old = p[idx]
            p[idx] = old + h
            plus, pat_plus = float(np.sum(net.forward(x) * up)), _pattern(net, x)
            p[idx] = old - h
            minus, pat_minus = float(np.sum(net.forward(x) * up)), _pattern(net, x)
            p[idx] = old
            if any(np.any(a != b) for a, b in zip(pat_plus, pat_minus)):
                redrawn += 1
                continue
            num = (plus - minus) / (2 * h)
            ana = grads[li][idx]
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-6))
            checked += 1
    return worst, redrawn


def test_criterion_2_gradients():
    env = ExperimentConfig().build_env()
    obs, act = env.obs_dim, env.action_dim
    shapes = [([obs, 128, 128, act], "tanh"), ([obs + act, 128, 128, 1], "identity")]
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst, redrawn = 0.0, 0
    for i in range(50):
        dims, activation = shapes[i % 2]
        net = DenseNet(dims, activation, rng=rng)
        x = rng.normal(size=(2, dims[0]))
        up = rng.normal(size=(2, dims[-1]))
        w, r = _fd_check(net, x, up, rng)
        worst, redrawn = max(worst, w), redrawn + r
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 60.0
    assert report(2, ok, f"max relative error {worst:.2e} over 50 nets at agent dims "
                         f"({redrawn} kink-crossing coordinates redrawn) in {elapsed:.1f}s")


# -- criterion 3 --------------------------------------------------------------
def _sample_freq(buf, draws, rng, batch=1000):
    counts = np.zeros(len(buf))
    for _ in range(draws // batch):
        b, _ = buf.sample(batch, rng)
        np.add.at(counts, b["r"].astype(int), 1)
    return counts


def _buffer(n, alpha, deltas):
    buf = PrioritizedBuffer(64, alpha=alpha)
    for i in range(n):
        buf.push(Transition(np.zeros(1), np.zeros(1), float(i), np.zeros(1), False), float(deltas[i]))
    return buf


def test_criterion_3_prioritized_sampling():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst_l1 = 0.0
    for n in (1, 2, 5, 16, 33, 64):
        deltas = rng.exponential(size=n)
        buf = _buffer(n, 2.0, deltas)
        expected = deltas ** 2 / np.sum(deltas ** 2)
        freq = _sample_freq(buf, 100_000, rng) / 100_000
        worst_l1 = max(worst_l1, float(np.abs(freq - expected).sum()))
    uni = _buffer(16, 0.0, rng.exponential(size=16))
    counts = _sample_freq(uni, 100_000, rng)
    p = stats.chisquare(counts).pvalue
    elapsed = time.perf_counter() - start
    ok = worst_l1 <= 0.02 and p > 0.01 and elapsed < 30.0
    assert report(3, ok, f"max L1 {worst_l1:.4f}, alpha=0 chi-square p={p:.3f} (16 bins) in {elapsed:.1f}s")


# -- criterion 4 --------------------------------------------------------------
def test_criterion_4_return_consistency():
    env = ExperimentConfig().build_env()
    rng = np.random.default_rng(4)
    worst = 0.0
    for seed in range(1000):
        env.reset(seed)
        total = 0.0
        while not env.done:
            _, r, _, _ = env.step(random_action(env.feasibility_mask(), rng, env.radio.p_S_max))
            total += r
        gamma, eta = env.cfg.gamma_privacy, env.cfg.eta
        closed = env.E_U - env.E_A + gamma if env.E_A <= gamma else -eta
        worst = max(worst, abs(total - closed))
        LEDGER.violations += audit_episode(env)
        LEDGER.episodes += 1
    assert report(4, worst <= 1e-12, f"max |sum of rewards - closed form| = {worst:.2e} over 1000 episodes")


# -- criterion 7 --------------------------------------------------------------
def test_criterion_7_alpha_zero_equals_td3():
    cfg = ExperimentConfig().replace(run__iterations=10, agent__alpha=0.0)
    env = cfg.build_env()
    ps = train(env, cfg.td3_config(), 11, spec=PS_TD3, eval_episodes=cfg.run.eval_episodes)
    td = train(env, cfg.td3_config(), 11, spec=TD3, eval_episodes=cfg.run.eval_episodes)
    for r in (ps, td):
        LEDGER.violations += r.violations
    same_curve = [(r.mean_return, r.std_return, r.evaluation.mean_return) for r in ps.curve] == \
                 [(r.mean_return, r.std_return, r.evaluation.mean_return) for r in td.curve]
    same_params = all(np.array_equal(a, b) for a, b in zip(ps.agent.state_dict().values(), td.agent.state_dict().values()))
    ok = same_curve and same_params and len(ps.curve) == 10
    assert report(7, ok, f"10-iteration curves identical={same_curve}, final parameters identical={same_params}")


# -- criterion 8 --------------------------------------------------------------
def test_criterion_8_trends():
    runs = learning_runs()
    final = {k: {s: final_stats(r) for s, r in runs[k].items()} for k in ("ps-td3", "alpha0", "ddpg", "dqn")}
    ret = {k: median([v[0] for v in final[k].values()]) for k in final}
    priv = {k: median([v[1] for v in final[k].values()]) for k in final}
    ret["random"] = median([s.mean_return for s in runs["random"].values()])
    priv["random"] = median([s.private_prob for s in runs["random"].values()])
    conv2 = median([convergence_index(runs["ps-td3"][s].eval_returns()) for s in LEARNING_SEEDS])
    conv0 = median([convergence_index(runs["alpha0"][s].eval_returns()) for s in LEARNING_SEEDS])
    a = ret["ps-td3"] >= ret["ddpg"] >= ret["random"] and ret["ps-td3"] - ret["random"] >= 0.3
    b = all(priv["ps-td3"] >= priv[k] for k in ("alpha0", "ddpg", "dqn", "random"))
    c = conv2 <= conv0
    budget = runs["elapsed"] < 1800
    steps = median(runs["transmissions"])
    detail = (f"(a) {a} returns ps-td3={ret['ps-td3']:.3f} ddpg={ret['ddpg']:.3f} random={ret['random']:.3f} "
              f"[td3 {ret['alpha0']:.3f}, dqn {ret['dqn']:.3f}]; "
              f"(b) {b} private ps-td3={priv['ps-td3']:.3f} td3={priv['alpha0']:.3f} ddpg={priv['ddpg']:.3f} "
              f"dqn={priv['dqn']:.3f} random={priv['random']:.3f}; "
              f"(c) {c} convergence index alpha=2 {conv2:g} vs alpha=0 {conv0:g}; "
              f"{steps:g} transmitted triples per run; {runs['elapsed']:.0f}s")
    assert report(8, a and b and c and budget, detail)


# -- criteria 5 and 6 (over the runs above) -----------------------------------------
def test_criterion_6_clipped_target():
    learning_runs()
    attacker_runs()
    ok = LEDGER.target_batches > 0 and LEDGER.target_failures == 0
    assert report(6, ok, f"{LEDGER.target_failures} failures over {LEDGER.target_batches} target batches")


# -- criterion 9 --------------------------------------------------------------
def test_criterion_9_detector_calibration():
    cfg = ExperimentConfig()
    env = cfg.build_env()
    radio = env.radio
    geom = env.attacker_geoms[0]
    det = env.cfg.attackers[0].detector
    rng = np.random.default_rng(9)
    fired = 0
    for _ in range(100_000):
        p_J = jammer_draw(rng, radio)
        eps = detector_threshold(det, p_J, geom, radio)
        fired += detect(received_power(0.0, p_J, geom, ATTACKER, radio), eps)
    rate = fired / 100_000
    assert report(9, abs(rate - 0.05) <= 0.01, f"false-alarm rate {rate:.4f} over 1e5 slots (q=0.95, p_S=0)")


# -- criterion 10 -------------------------------------------------------------
def test_criterion_10_sweep_directions():
    base = ExperimentConfig()
    ea = []
    for G in (2, 4, 6, 8):
        env = base.replace(episode__G=G).build_env()
        s = random_policy(env, 0, 1000)
        LEDGER.violations += s.violations
        LEDGER.episodes += s.episodes
        ea.append(s.E_A)
    g_ok = all(x <= y for x, y in zip(ea, ea[1:]))
    priv = attacker_runs()
    med = [median(priv[c]) for c in ATTACKER_COUNTS]
    a_ok = all(x >= y for x, y in zip(med, med[1:]))
    detail = (f"random E_A over G=2,4,6,8: {', '.join(f'{v:.4f}' for v in ea)} ({g_ok}); "
              f"ps-td3 private prob over 1-4 attackers: {', '.join(f'{v:.3f}' for v in med)} ({a_ok})")
    assert report(10, g_ok and a_ok, detail)


def test_criterion_5_constraints():
    # runs last in file order so the tallies cover every other criterion
    learning_runs()
    attacker_runs()
    ok = LEDGER.violations == 0 and LEDGER.episodes > 0
    assert report(5, ok, f"{LEDGER.violations} violations over {LEDGER.episodes} audited episodes")


def main():
    tests = [test_criterion_1_gnt_oracle, test_criterion_2_gradients, test_criterion_3_prioritized_sampling,
             test_criterion_4_return_consistency, test_criterion_7_alpha_zero_equals_td3, test_criterion_8_trends,
             test_criterion_6_clipped_target, test_criterion_9_detector_calibration,
             test_criterion_10_sweep_directions, test_criterion_5_constraints]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    print("\n".join(RESULTS[k] for k in sorted(RESULTS)))
    return 0 if all("PASS" in v for v in RESULTS.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
