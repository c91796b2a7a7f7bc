"""Compare switching rules on the delayed reference scenario.

Runs the delayed-norm rule with level and edge triggering, the current-norm
rule, and the boundary-layer rule over a sweep of layer thicknesses, then
prints switch counts, chattering verdicts and settling times.

    python3 scripts/trigger_comparison.py --horizon 60
"""
import argparse
import dataclasses

from mrpsim.scenario import bundled_scenario, run_batch
from mrpsim.switching import SwitchStrategy


def variants():
    yield SwitchStrategy("point_current")
    yield SwitchStrategy("point_current", trigger="edge")
    yield SwitchStrategy("point_delayed")
    yield SwitchStrategy("point_delayed", trigger="edge")
    for eps in (1e-4, 1e-3, 5e-3, 2e-2, 1e-1):
        yield SwitchStrategy("hysteretic", eps)


def main():
    ap = argparse.ArgumentParser(description="switching rule comparison")
    ap.add_argument("--horizon", type=float, default=60.0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    base = bundled_scenario("fig45_delay_point_delayed").with_horizon(args.horizon)
    scenarios = [dataclasses.replace(base, name=s.label, strategy=s) for s in variants()]
    print(f"{'strategy':<28}{'switches':>10}{'chatter':>9}{'settle[s]':>11}{'max|s|':>9}")
    for r in run_batch(scenarios, args.jobs):
        s = r.summary
        settle = "-" if s.settling_time is None else f"{s.settling_time:.2f}"
        print(f"{r.scenario:<28}{s.switch_count:>10}{str(s.chattering):>9}{settle:>11}{s.max_sigma_norm:>9.4f}")


if __name__ == "__main__":
    main()
