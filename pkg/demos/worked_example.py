"""Probe the pair (x, w) on the five-variable reference model and compare with one-column probing."""

from twocolprobe.generators import REFERENCE_NAMES, reference_system
from twocolprobe.probing import ProbingState, run_serial
from twocolprobe.propagation import propagate_to_fixpoint

T, W, X = 0, 1, 2


def main():
    inst = reference_system()
    res = run_serial(inst, candidates=[(X, W)])
    print("two-column implications:")
    for (var, val), target, kind, bound in res.reductions.single_implications:
        print(f"  {REFERENCE_NAMES[var]}={val} -> {REFERENCE_NAMES[target]} {kind} {bound:g}")

    ctx = res.context
    dom = ProbingState.initial(ctx).domains(ctx)
    propagate_to_fixpoint(ctx.prop, dom, ctx.ct, None, seeds=((X, 1),))
    print(f"fixing x=1 alone gives t >= {dom.lb[T]:g}")


if __name__ == "__main__":
    main()
