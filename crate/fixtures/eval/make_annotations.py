"""Generates the annotation fixture and its stored concordance values.

Kendall's W is computed with exact fractions straight from the rank-sum
definition, and fused scores by summing 1/(60 + rank) as fractions.
"""
import json
import random
from fractions import Fraction

MODELS = ["gpt-4", "gpt-3.5", "llama-2-70b", "vicuna-13b", "t0pp"]
ANNOTATORS = ["a1", "a2", "a3"]
ITEMS = [f"cluster-{i}" for i in range(12)]

rng = random.Random(20231)
base = MODELS[:]
records = []
for item in ITEMS:
    rng.shuffle(base)
    for a in ANNOTATORS:
        order = base[:]
        # mostly agreeing annotators: a couple of adjacent swaps each
        for _ in range(rng.randint(0, 2)):
            i = rng.randrange(len(order) - 1)
            order[i], order[i + 1] = order[i + 1], order[i]
        records.append({"annotator_id": a, "item_id": item, "ranking": order})


def kendall_w(rows):
    m, n = len(rows), len(rows[0])
    sums = [sum(r[j] for r in rows) for j in range(n)]
    mean = Fraction(m * (n + 1), 2)
    s = sum((Fraction(x) - mean) ** 2 for x in sums)
    return Fraction(12) * s / (m * m * (n ** 3 - n))


models_sorted = sorted(MODELS)
per_item = {}
for item in ITEMS:
    rows = []
    for r in records:
        if r["item_id"] == item:
            rows.append([r["ranking"].index(mdl) + 1 for mdl in models_sorted])
    per_item[item] = kendall_w(rows)

fused = {mdl: Fraction(0) for mdl in MODELS}
for r in records:
    for pos, mdl in enumerate(r["ranking"]):
        fused[mdl] += Fraction(1, 60 + pos + 1)

with open("annotations.jsonl", "w") as f:
    for r in records:
        f.write(json.dumps(r) + "\n")
with open("annotations_expected.json", "w") as f:
    json.dump(
        {
            "kendalls_w": {k: float(v) for k, v in per_item.items()},
            "kendalls_w_exact": {k: f"{v.numerator}/{v.denominator}" for k, v in per_item.items()},
            "mean_kendalls_w": float(sum(per_item.values()) / len(per_item)),
            "rrf": [
                {"model_id": mdl, "score": float(sc)}
                for mdl, sc in sorted(fused.items(), key=lambda kv: (-kv[1], kv[0]))
            ],
        },
        f,
        indent=2,
    )
    f.write("\n")
