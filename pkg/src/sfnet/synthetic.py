"""Synthetic fit-feedback data in the ModCloth JSON-lines dialect.

Customers carry a latent body size reflected (noisily) in their
measurements; articles carry a nominal size and a hidden per-item offset
that only the item identifier reveals. The fit outcome compares the two.
"""
from __future__ import annotations

import json

import numpy as np

CATEGORIES = ("dresses", "tops", "bottoms")
CUPS = ("a", "b", "c", "d", "dd/e")
WIDTHS = ("narrow", "average", "wide")


def _height(inches: float) -> str:
    inches = int(round(inches))
    return f"{inches // 12}ft {inches % 12}in"


def make_fit_records(n: int = 2000, n_customers: int | None = None, n_articles: int = 120,
                     seed: int = 0, missing_rate: float = 0.15, item_effect: float = 1.0,
                     noise: float = 0.35) -> list[dict]:
    """JSON objects shaped like ModCloth lines.

    ``item_effect`` scales the hidden per-item offset; ``noise`` the outcome
    noise. Most customers appear once, articles recur.
    """
    rng = np.random.default_rng(seed)
    n_customers = n_customers or max(1, int(0.7 * n))
    body = rng.normal(0.0, 1.0, n_customers)
    shoe_w = rng.integers(0, len(WIDTHS), n_customers)
    art_cat = rng.integers(0, len(CATEGORIES), n_articles)
    art_offset = rng.normal(0.0, item_effect, n_articles)
    art_quality = rng.integers(1, 6, n_articles)
    # heavy-tailed popularity over articles, near-uniform over customers
    pop = 1.0 / np.arange(1, n_articles + 1) ** 0.6
    pop /= pop.sum()
    cust_of = rng.integers(0, n_customers, n)
    art_of = rng.choice(n_articles, size=n, p=pop)

    out = []
    for i in range(n):
        c, a = int(cust_of[i]), int(art_of[i])
        b = body[c]
        size = int(np.clip(np.round(10 + 4 * b + rng.normal(0, 2.0)), 0, 30))
        delta = b - (size - 10) / 4.0 + art_offset[a] + rng.normal(0, noise)
        fit = "small" if delta > 0.45 else ("large" if delta < -0.45 else "fit")

        def maybe(v):
            return None if rng.random() < missing_rate else v

        out.append({
            "item_id": f"i{a:05d}",
            "waist": maybe(str(int(round(30 + 3 * b + rng.normal(0, 1))))),
            "size": size,
            "quality": maybe(float(art_quality[a])),
            "cup size": maybe(CUPS[int(np.clip(round(2 + b), 0, len(CUPS) - 1))]),
            "hips": maybe(str(round(38 + 3 * b + rng.normal(0, 1), 1))),
            "bra size": maybe(str(int(34 + 2 * round(b)))),
            "category": CATEGORIES[art_cat[a]],
            "bust": maybe(str(int(round(36 + 3 * b)))),
            "height": maybe(_height(65 + 3 * b + rng.normal(0, 1.5))),
            "user_name": f"user{c}",
            "length": "just right",
            "fit": fit,
            "user_id": f"u{c:06d}",
            "shoe size": maybe(str(round(8 + b, 1))),
            "shoe width": maybe(WIDTHS[shoe_w[c]]),
        })
    return out


def make_rule_records(n: int = 200, seed: int = 0) -> list[dict]:
    """Outcome is a deterministic function of the article category."""
    rng = np.random.default_rng(seed)
    rule = {"dresses": "small", "tops": "fit", "bottoms": "large"}
    out = []
    for i in range(n):
        cat = CATEGORIES[int(rng.integers(0, 3))]
        out.append({
            "item_id": f"i{int(rng.integers(0, 40)):03d}",
            "user_id": f"u{i:04d}",
            "category": cat,
            "size": int(rng.integers(0, 20)),
            "fit": rule[cat],
        })
    return out


def write_jsonl(objs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in objs:
            fh.write(json.dumps(o, sort_keys=True))
            fh.write("\n")
