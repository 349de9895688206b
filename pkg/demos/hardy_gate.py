"""Why the Hardy-type limit inequality needs a sign split in the weight.

With b = ell^(2,-2) the weighted cumulative integral stays comparable to
the plain one as the window (1/T, T) widens.  With b = ell the associated
functions have equal indices, the gate refuses, and forcing the run shows
the ratio growing without bound.
"""

from interpnorm import verify as V
from interpnorm.errors import HypothesisViolated
from interpnorm.norms import RISpaceSpec
from interpnorm.svfun import ell_power, make_broken_log

f = V.parse_positive("chi:1,e")
T = V.log_grid(10, 1e12, 12)

good = V.verify_limit_hardy(make_broken_log(2, -2), f, RISpaceSpec(2), "cumulative", T, stability=False)
print(good.verdict_line())

try:
    V.verify_limit_hardy(ell_power(1), f, RISpaceSpec(2), "cumulative", T)
except HypothesisViolated as exc:
    print("b = ell refused:", exc)

forced = V.verify_limit_hardy(make_broken_log(1, 1), f, RISpaceSpec(1), "cumulative", T, force=True,
                              stability=False)
for t, r in zip(forced.grid, forced.ratios):
    print(f"  T = {t:9.3g}  ratio = {r:8.4f}")
print(forced.verdict_line())
