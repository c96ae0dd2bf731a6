"""Generates a small reference/prediction pair and the expected top-1 CSV."""
import json
import random

FRAMES = ["Economic", "Capacity & Resources", "Morality", "Fairness & Equality",
          "Constitutionality & Jurisprudence", "Policy Prescription & Evaluation",
          "Crime & Punishment", "Security & Defense", "Health & Safety", "Quality of Life",
          "Cultural Identity", "Public Opinion", "Political", "External Regulation & Reputation"]
LABELS = ["Rent prices keep rising", "Who pays for public transit", "Is eating meat wrong",
          "Equal pay for equal work", "Free speech on campus", "Should the city ban cars downtown",
          "Harsher sentences for theft", "Military spending debate", "Vaccines and side effects",
          "Commute times and happiness", "Regional dialects fading", "Polls on the new law"]
rng = random.Random(7)
refs = []
for i, label in enumerate(LABELS):
    frames = rng.sample(FRAMES, rng.choice([1, 2]))
    refs.append({"sample_id": f"s{i}", "label": label, "frames": frames})

preds = []
table = {}
for model in ["model-a", "model-b"]:
    for setting, col in [("zero_shot_labels", "zero-shot"), ("few_shot", "few-shot")]:
        hits = 0
        for r in refs:
            if rng.random() < 0.15:
                continue  # missing prediction
            frames = rng.sample(FRAMES, 3)
            if rng.random() < 0.5:
                frames[0] = r["frames"][0]
            frames = list(dict.fromkeys(frames))
            if frames[0] in r["frames"]:
                hits += 1
            preds.append({"sample_id": r["sample_id"], "model_id": model, "setting": setting, "frames": frames})
        table[(model, col)] = 100.0 * hits / len(refs)

with open("references.jsonl", "w") as f:
    f.writelines(json.dumps(r) + "\n" for r in refs)
with open("predictions.jsonl", "w") as f:
    f.writelines(json.dumps(p) + "\n" for p in preds)
with open("expected_top1.csv", "w") as f:
    f.write("model,zero-shot,short,full,few-shot\n")
    for model in ["model-a", "model-b"]:
        f.write(f"{model},{table[(model, 'zero-shot')]:.1f},,,{table[(model, 'few-shot')]:.1f}\n")
