"""Reiteration between a grand and a small Lebesgue space.

For (alpha, beta, p) the threshold M1 = alpha / (alpha - beta + p beta)
separates the cases: eta = 0 and 1 give intersections, eta below M1 an
R-type space, eta above M1 an L-type space, and eta = M1 the mixed case.
Each claimed norm is compared with I1 + I2 from the Holmstedt formula.
"""

from interpnorm import verify as V
from interpnorm.norms import RISpaceSpec
from interpnorm.svfun import ell_power

corpus = V.Corpus.default(0)
for abp in ((1, 1, 2), (1, 2, 2)):
    cache = {}
    s = V.grand_small_setup(*abp, 0.0, ell_power(-1), RISpaceSpec(2))
    m1, m2 = V.reiteration_thresholds(s)
    print(f"(alpha, beta, p) = {abp}: M1 = {m1:.6g}, M2 = {m2:.6g}")
    for eta in (0.0, 0.25, m1, 0.75, 1.0):
        r = V.verify_reiteration(V.replace(s, eta=eta), corpus, parts_cache=cache)
        print(f"  eta = {eta:.4f} case {r.extra['case']}: ratio to I1+I2 in "
              f"[{r.ratio_min:.4f}, {r.ratio_max:.4f}]")
