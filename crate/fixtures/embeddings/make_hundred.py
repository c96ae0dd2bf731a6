"""Four Gaussian blobs of 25 points in 16 dimensions, written as an
embedding sidecar with sentence ids 0..99."""
import random

rng = random.Random(100)
DIM, PER = 16, 25
centers = [[rng.uniform(-1, 1) * 4 for _ in range(DIM)] for _ in range(4)]
rows = []
for c in centers:
    for _ in range(PER):
        rows.append([x + rng.gauss(0, 0.3) for x in c])
with open("hundred.txt", "w") as f:
    f.write(f"dim={DIM} count={len(rows)}\n")
    for i, r in enumerate(rows):
        f.write(" ".join([str(i)] + [f"{x:.6f}" for x in r]) + "\n")
