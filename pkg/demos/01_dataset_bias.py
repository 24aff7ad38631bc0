"""Where do annotated moments live? Verb frequencies and location densities.

Builds the bundled synthetic verb-biased corpus, extracts the first verb of
every query, and fits kernel density estimates over normalized
(start, duration) locations, both globally and per verb. The per-verb
densities are the interesting part: "open" moments hug the start of the
video, "leave" moments hug the end, so the query verb alone narrows down
where the target moment is likely to be.

Run:  python demos/01_dataset_bias.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from momentaudit.density import export_density_grid, fit_conditional
from momentaudit.lexicon import VerbLexicon, top_k_coverage, top_k_verbs, verb_stats
from momentaudit.synthetic import BiasedCorpusSpec, make_biased_corpus

SHADES = " .:-=+*#%@"


def ascii_heatmap(grid, width=44, height=20):
    """Coarse terminal rendering of a density grid (start right, duration up)."""
    values = grid.values
    rows = np.array_split(np.arange(values.shape[0]), height)
    cols = np.array_split(np.arange(values.shape[1]), width)
    coarse = np.array([[values[np.ix_(r, c)].mean() for c in cols] for r in rows])
    top = coarse.max() or 1.0
    lines = []
    for row in coarse[::-1]:  # duration axis points up
        lines.append("".join(SHADES[int(v / top * (len(SHADES) - 1))] for v in row))
    return "\n".join(lines)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/bias")
    out.mkdir(parents=True, exist_ok=True)

    train, _ = make_biased_corpus(BiasedCorpusSpec(n_train=2000, n_test=500, rng_seed=0))
    lex = VerbLexicon.load()

    stats = verb_stats(train, lex)
    print(f"{stats.total} of {len(train)} queries yielded a first verb\n")
    print("verb      count")
    for verb in top_k_verbs(stats, 10):
        print(f"{verb:<9s} {stats.counts[verb]}")
    token_cov, type_cov = top_k_coverage(stats, 30)
    print(f"\ntop-30 coverage: {token_cov:.1%} of tokens, {type_cov:.1%} of types")

    priors = fit_conditional(train, lex, top_k=50, min_samples=10)
    for name, model in [("all queries", priors.global_model),
                        ("open", priors.per_verb["open"]),
                        ("leave", priors.per_verb["leave"])]:
        grid = export_density_grid(model, resolution=120)
        print(f"\nlocation density, {name} (x = start, y = duration):")
        print(ascii_heatmap(grid))
        safe = name.replace(" ", "_")
        grid.to_csv(out / f"density_{safe}.csv")
    print(f"\nplot-ready grids written to {out}/")


if __name__ == "__main__":
    main()
