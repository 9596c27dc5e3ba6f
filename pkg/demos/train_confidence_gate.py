"""
Training a confidence gate by pairwise ranking
==============================================

Fits a small network whose score orders samples by how well a given
expert would handle them. Training compares sample pairs instead of
regressing the raw metric, so only the ordering has to be learned.
"""

import numpy as np

from cascadekit import TrainCfg, confidence, ranking_accuracy, train

rng = np.random.default_rng(42)

# features: 8 dims, but quality depends only on a noisy linear score
n = 4000
x = rng.normal(size=(n, 8))
signal = x @ np.array([1.2, -0.8, 0.5, 0.0, 0.0, 0.3, 0.0, -0.4])
quality = 1.0 / (1.0 + np.exp(-(signal + 0.5 * rng.normal(size=n))))

x_train, x_test = x[:3000], x[3000:]
q_train, q_test = quality[:3000], quality[3000:]

cfg = TrainCfg(hidden=(16,), epochs=80, batch_size=64, lr=0.05, seed=1)
model = train(x_train, q_train, cfg)

acc = ranking_accuracy(model, x_test, q_test)
print(f"held-out pair ordering accuracy: {acc:.3f}")

# the learned score is a confidence: squash it and compare against the
# underlying quality for a few held-out samples
print()
print(f"{'gate conf':>10} {'true quality':>13}")
order = np.argsort(q_test[:8])
for i in order:
    conf = confidence(model, x_test[i])
    print(f"{conf:10.3f} {q_test[i]:13.3f}")

# a random scorer sits at 0.5; the gate should be far above it
assert acc > 0.8, "gate failed to learn the ordering"
print()
print("gate orders unseen samples well above chance")
