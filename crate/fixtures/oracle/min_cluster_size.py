"""Exact step points of floor(0.421 * x**0.559 + 0.5), clamped below at 2,
over x in 1..=10000, evaluated with 50 significant digits."""
import json
from mpmath import mp, mpf, floor

mp.dps = 50
A, B = mpf("0.421"), mpf("0.559")


def size(x):
    return max(2, int(floor(A * mpf(x) ** B + mpf("0.5"))))


jumps, prev = [], None
for x in range(1, 10001):
    v = size(x)
    if v != prev:
        jumps.append([x, v])
        prev = v
margin = min(abs(A * mpf(x) ** B + mpf("0.5") - round(A * mpf(x) ** B + mpf("0.5"))) for x in range(1, 10001))
with open("min_cluster_size.json", "w") as f:
    json.dump({"a": "0.421", "b": "0.559", "range": [1, 10000], "jumps": jumps, "min_margin": float(margin)}, f)
    f.write("\n")
print(len(jumps), float(margin))
