"""Train the full hybrid pipeline on a small synthetic subject and report
every evaluation metric.

The pipeline stages run in a fixed order: recurrent branch, convolutional
branch, feature stacking, autoencoder fusion, boosted trees.  Layer widths
are scaled down here so the demo finishes in about a minute; the
defaults in PipelineConfig reproduce the full-size architecture
(64 channels -> 64+120 stacked features -> 800 latent -> 5 intents).
"""

import numpy as np

from neurotype import data, fusion, gbt, pipeline, spatial, temporal

# A synthetic "subject": class-conditional channel templates plus shared
# background activity and noise, the same generator the acceptance suite
# uses as a stand-in for a recorded session.
subject = data.synthesize_subject(n=2000, channels=32, seed=42)
train_set, test_set = data.split(subject, data.SplitSpec(0.75, seed=42))
print(f"training on {len(train_set)} samples, testing on {len(test_set)}")

config = pipeline.PipelineConfig(
    channels=32,
    rnn=temporal.TemporalNetConfig(input_size=32, hidden_size=32,
                                   iterations=300, batch_size=1500,
                                   learning_rate=0.005),
    cnn=spatial.SpatialNetConfig(input_size=32, fc_size=48, iterations=300,
                                 batch_size=1500, learning_rate=0.01),
    ae=fusion.AutoencoderConfig(input_size=80, latent_size=64, iterations=150,
                                batch_size=1500),
    classifier=gbt.GbtConfig(rounds=20, max_depth=4),
)

traces = {}
model = pipeline.train_pipeline(train_set, config, seed=42, loss_traces=traces)
for stage, trace in traces.items():
    print(f"{stage}: loss {trace[0]:.4f} -> {trace[-1]:.4f} "
          f"over {len(trace)} iterations")

metrics = pipeline.evaluate(model, test_set)
print(f"\naccuracy {metrics.accuracy:.4f}")
print(pipeline.metrics_to_csv(metrics))

# The two branches also classify on their own; the fused model should be
# at least competitive with the better branch.
rnn_acc = np.mean(np.argmax(model.rnn.predict_proba(test_set.samples), axis=1)
                  == test_set.labels)
cnn_acc = np.mean(np.argmax(model.cnn.predict_proba(test_set.samples), axis=1)
                  == test_set.labels)
print(f"temporal branch alone: {rnn_acc:.4f}")
print(f"spatial branch alone:  {cnn_acc:.4f}")
print(f"hybrid:                {metrics.accuracy:.4f}")
