"""Grand and small Lebesgue norms computed two ways.

The grand space L^{p),alpha} is an R-type limiting space over (L1, Linf) and
the small space L^{(p,alpha} is an L-type one.  The generic nested
quadrature in ``interpnorm.spaces`` should agree with the direct formulas
built from the decreasing rearrangement.
"""

from interpnorm import default_corpus, grand_small_norms, norm
from interpnorm.spaces import grand_small_spec


def main():
    corpus = default_corpus()
    print(f"{'profile':16s} {'p':>3s} {'alpha':>5s} {'grand':>12s} {'rel gap':>9s} {'small':>12s} {'rel gap':>9s}")
    for p, alpha in ((2, 1), (3, 2)):
        gs, ss = grand_small_spec("grand", p, alpha), grand_small_spec("small", p, alpha)
        for K in corpus[:6]:
            g_ref, s_ref = grand_small_norms(K, p, alpha)
            g, s = float(norm(K, gs)), float(norm(K, ss))
            print(f"{K.name:16s} {p:3g} {alpha:5g} {g:12.8f} {abs(g / float(g_ref) - 1):9.1e} "
                  f"{s:12.8f} {abs(s / float(s_ref) - 1):9.1e}")


if __name__ == "__main__":
    main()
