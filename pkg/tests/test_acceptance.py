"""Acceptance suite: one test per release criterion.

Each test name and docstring states the criterion and its pinned
tolerances; the terminal summary prints one PASS/FAIL line per criterion.
"""

import time

import numpy as np
import pytest

from neurotype import data, fusion, gbt, nn, pipeline, spatial, temporal
from neurotype.server import TypingSession, encode_frame, simulate, stub_classifier
from neurotype.typing_engine import (CharacterTree, Command, CommandMap,
                                     DecisionAggregator, TypingState,
                                     apply_command)

SEED_COUNT = 100


# ---------------------------------------------------------------------------
# gradient fidelity


def _check_dense(rng):
    layer = nn.DenseLayer(3, 2, rng)
    x = rng.normal(size=(4, 3))
    t = rng.normal(size=(4, 2))
    dout = 2 * (x @ layer.W + layer.b - t) / 8
    grads = {"W": x.T @ dout, "b": dout.sum(axis=0)}
    return nn.gradient_check(lambda p: nn.mse(x @ layer.W + layer.b, t),
                             {"W": layer.W, "b": layer.b}, grads)


def _check_lstm(rng):
    from neurotype.temporal import LstmLayer, _lstm_backward_seq, _lstm_forward_seq
    layer = LstmLayer(3, rng)
    x = rng.normal(size=(2, 3))
    t = rng.normal(size=(2, 3))
    scale = 0.01  # keeps finite-difference noise below the 1e-8 floor
    h, cache = _lstm_forward_seq(x, layer)
    dh = scale * 2 * (h - t) / h.size
    _, dWx, dWh, db = _lstm_backward_seq(dh, layer, cache)
    params = {"Wx": layer.Wx, "Wh": layer.Wh, "b": layer.b}
    grads = {"Wx": dWx, "Wh": dWh, "b": db}

    def loss_fn(_p):
        out, _ = _lstm_forward_seq(x, layer)
        return scale * nn.mse(out, t)

    return nn.gradient_check(loss_fn, params, grads)


def _check_conv_pool(rng):
    from neurotype.spatial import ConvLayer, maxpool, maxpool_backward
    layer = ConvLayer(2, 2, 2, rng)
    layer.b[...] = 0.1 * rng.normal(size=2)
    x = rng.normal(size=(2, 4, 2))
    t = rng.normal(size=(2, 2, 2))

    def forward():
        return maxpool(layer.forward(x))

    pred = forward()
    dpool = 2 * (pred - t) / pred.size
    dconv = maxpool_backward(layer.forward(x), dpool)
    _, dW, db = layer.backward(x, dconv)
    return nn.gradient_check(lambda p: nn.mse(forward(), t),
                             {"W": layer.W, "b": layer.b},
                             {"W": dW, "b": db})


def _check_softmax_ce(rng):
    layer = nn.DenseLayer(4, 5, rng)
    x = rng.normal(size=(3, 4))
    Y = np.eye(5)[rng.integers(0, 5, size=3)]
    probs = nn.softmax(layer.forward(x))
    dlogits = (probs - Y) / 3
    grads = {"W": x.T @ dlogits, "b": dlogits.sum(axis=0)}
    return nn.gradient_check(
        lambda p: nn.cross_entropy(nn.softmax(layer.forward(x)), Y),
        {"W": layer.W, "b": layer.b}, grads)


def _check_autoencoder(rng):
    ae = fusion.AutoencoderParams(
        fusion.AutoencoderConfig(input_size=4, latent_size=3),
        seed=int(rng.integers(1 << 31)))
    X = rng.normal(size=(3, 4))
    h = X @ ae.W_en + ae.b_en
    recon = h @ ae.W_de + ae.b_de
    dr = 2 * (recon - X) / recon.size
    grads = {"W_de": h.T @ dr, "b_de": dr.sum(axis=0)}
    dh = dr @ ae.W_de.T
    grads["W_en"] = X.T @ dh
    grads["b_en"] = dh.sum(axis=0)
    return nn.gradient_check(
        lambda p: nn.mse(fusion.decode(fusion.encode(X, ae), ae), X),
        ae.params(), grads)


def test_gradient_fidelity():
    """Gradient fidelity: dense/LSTM/conv/pool/softmax/AE fragments, max
    relative error < 1e-4 over 100 seeds each, total runtime < 60 s."""
    start = time.time()
    fragments = {
        "dense": _check_dense,
        "lstm": _check_lstm,
        "conv_pool": _check_conv_pool,
        "softmax_ce": _check_softmax_ce,
        "autoencoder": _check_autoencoder,
    }
    worst = {}
    for name, check in fragments.items():
        errors = [check(np.random.default_rng(seed)) for seed in range(SEED_COUNT)]
        worst[name] = max(errors)
        assert worst[name] < 1e-4, f"{name}: max rel err {worst[name]:.2e}"
    elapsed = time.time() - start
    assert elapsed < 60.0, f"gradient fidelity took {elapsed:.1f} s"
    summary = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    print(f"gradient fidelity: worst errors {summary}; {elapsed:.1f} s")


# ---------------------------------------------------------------------------
# shape contract


def test_shape_contract():
    """Shape contract: forward chain 64 -> (64, 120) -> 184 -> 800 -> 5."""
    cfg = pipeline.PipelineConfig()
    rnn = temporal.TemporalNet(cfg.rnn, seed=0)
    cnn = spatial.SpatialNet(cfg.cnn, seed=0)
    ae = fusion.AutoencoderParams(cfg.ae, seed=0)
    ensemble = gbt.TreeEnsemble(cfg.classifier, cfg.ae.latent_size)
    model = pipeline.PipelineModel(cfg, rnn, cnn, ae, ensemble)

    x = np.random.default_rng(0).normal(size=(2, 64))
    Xt = rnn.extract(x)
    Xs = cnn.extract(x)
    assert Xt.shape == (2, 64)
    assert Xs.shape == (2, 120)
    stacked = model.features(x)
    assert stacked.shape == (2, 184)
    latent = model.latent(x)
    assert latent.shape == (2, 800)
    scores = model.predict_scores(x)
    assert scores.shape == (2, 5)
    assert cnn.config.shape_chain == ((64, 1), (64, 2), (32, 2), (32, 4),
                                      (16, 4), (64,), (120,), (5,))


# ---------------------------------------------------------------------------
# published-table arithmetic


def test_table_similarity_arithmetic():
    """Similarity-table arithmetic: PD from printed Self/Cross within 0.005
    points and row cross-means within 0.0005 for classes 0-3."""
    rows = [
        ([0.4010, 0.2855, 0.4146, 0.4787, 0.3700], 0.401, 0.3872, 3.44),
        ([0.2855, 0.5100, 0.0689, 0.0162, 0.0546], 0.51, 0.1063, 79.16),
        ([0.4146, 0.0689, 0.4126, 0.2632, 0.3950], 0.4126, 0.2854, 30.83),
        ([0.4787, 0.0162, 0.2632, 0.3062, 0.2247], 0.3062, 0.2457, 19.76),
    ]
    from neurotype.similarity import cross_similarity, percentage_difference
    for intent, (row, self_sim, cross, pd) in enumerate(rows):
        assert abs(cross_similarity(row, intent) - cross) < 5e-4
        assert abs(percentage_difference(self_sim, cross) - pd) < 5e-3


def test_table_confusion_arithmetic():
    """Confusion-table arithmetic: recomputed precision matches the printed
    column within 0.0001 for all five classes."""
    confusion = np.array([
        [2062, 19, 23, 18, 22],
        [17, 1120, 19, 15, 20],
        [13, 13, 1146, 14, 11],
        [10, 5, 7, 1162, 10],
        [18, 21, 15, 23, 1197],
    ])
    printed_precision = [0.9618, 0.9404, 0.9574, 0.9732, 0.9396]
    metrics = pipeline.metrics_from_confusion(confusion)
    for c in range(5):
        assert abs(metrics.precision[c] - printed_precision[c]) < 1e-4


# ---------------------------------------------------------------------------
# learning runs


def test_synthetic_pipeline_oracle():
    """Synthetic pipeline oracle: 5-class blobs (500 samples, 8 channels,
    reduced widths) reach test accuracy >= 0.9 in < 2 min."""
    start = time.time()
    rng = np.random.default_rng(11)
    labels = rng.integers(0, 5, size=500)
    centers = 4.0 * rng.normal(size=(5, 8))
    samples = centers[labels] + 0.4 * rng.standard_normal((500, 8))
    ds = data.Dataset(samples, labels, 8)
    train, test = data.split(ds, data.SplitSpec(0.75, seed=11))
    cfg = pipeline.PipelineConfig(
        channels=8,
        rnn=temporal.TemporalNetConfig(input_size=8, hidden_size=8,
                                       iterations=150, batch_size=500,
                                       learning_rate=0.01, l2=0.0),
        cnn=spatial.SpatialNetConfig(input_size=8, fc_size=12, iterations=150,
                                     batch_size=500, learning_rate=0.01,
                                     l2=0.0),
        ae=fusion.AutoencoderConfig(input_size=20, latent_size=16,
                                    iterations=150, batch_size=500),
        classifier=gbt.GbtConfig(rounds=10, max_depth=4),
    )
    model = pipeline.train_pipeline(train, cfg, seed=11)
    accuracy = np.mean(model.predict(test.samples) == test.labels)
    elapsed = time.time() - start
    print(f"synthetic oracle: accuracy {accuracy:.4f} in {elapsed:.1f} s")
    assert accuracy >= 0.9
    assert elapsed < 120.0


@pytest.fixture(scope="module")
def desk_scale():
    """One surrogate subject at recorded-session scale: 28,000 samples of
    64 channels, split 75/25, 500 iterations per branch, 200 autoencoder
    iterations, 100 boosting rounds."""
    ds = data.synthesize_subject(28000, 64, seed=7)
    train, test = data.split(ds, data.SplitSpec(0.75, seed=7))
    cfg = pipeline.PipelineConfig(
        rnn=temporal.TemporalNetConfig(iterations=500),
        cnn=spatial.SpatialNetConfig(iterations=500),
        ae=fusion.AutoencoderConfig(iterations=200),
        classifier=gbt.GbtConfig(rounds=100),
    )
    start = time.time()
    model = pipeline.train_pipeline(train, cfg, seed=7)
    elapsed = time.time() - start
    return model, train, test, elapsed


@pytest.mark.slow
def test_desk_scale_learning(desk_scale):
    """Desk-scale learning: hybrid test accuracy >= 0.70 and within 0.05 of
    the best single branch on a 28,000-sample surrogate subject."""
    model, train, test, elapsed = desk_scale
    hybrid = np.mean(model.predict(test.samples) == test.labels)
    rnn_only = np.mean(
        np.argmax(model.rnn.predict_proba(test.samples), axis=1) == test.labels)
    cnn_only = np.mean(
        np.argmax(model.cnn.predict_proba(test.samples), axis=1) == test.labels)
    print(f"desk scale: hybrid {hybrid:.4f}, temporal-only {rnn_only:.4f}, "
          f"spatial-only {cnn_only:.4f}, training {elapsed / 60:.1f} min")
    assert len(train) == 21000 and len(test) == 7000
    assert hybrid >= 0.70
    assert hybrid >= max(rnn_only, cnn_only) - 0.05


@pytest.mark.slow
def test_persistence_round_trip(desk_scale, tmp_path):
    """Persistence: save/load round trip gives bitwise-identical predictions
    on 1,000 samples."""
    model, _, test, _ = desk_scale
    path = str(tmp_path / "model.ntm")
    pipeline.save_model(model, path)
    loaded = pipeline.load_model(path)
    probe = test.samples[:1000]
    assert np.array_equal(model.predict_scores(probe),
                          loaded.predict_scores(probe))
    assert np.array_equal(model.predict(probe), loaded.predict(probe))


# ---------------------------------------------------------------------------
# boosting oracle


def test_boosting_oracle():
    """Boosting oracle: first split matches exhaustive brute-force gain
    search on 50 random datasets (<= 100 x 4); depth never exceeds 6."""
    from test_gbt import brute_force_first_split, split_gain
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(10, 101))
        F = int(rng.integers(1, 5))
        X = rng.normal(size=(n, F))
        y = rng.integers(0, 5, size=n)
        cfg = gbt.GbtConfig(rounds=2)
        ensemble = gbt.gbt_fit(X, y, cfg)
        root = ensemble.trees[0][0]
        gain, _, _ = brute_force_first_split(X, y, cfg)
        if root.feature[0] < 0:
            assert gain <= cfg.min_split_gain
        else:
            achieved = split_gain(X, y, cfg, root.feature[0], root.threshold[0])
            assert abs(achieved - gain) < 1e-9
        for trees in ensemble.trees:
            for tree in trees:
                assert tree.depth() <= 6


# ---------------------------------------------------------------------------
# typing engine


def _command_sequence(char):
    flat = "ABCDEFGHIJKLMNOPQRSTUVWXYZ "
    index = flat.index(char)
    path = (index // 9, index % 9 // 3, index % 3)
    select = {0: Command.LEFT, 1: Command.UP, 2: Command.RIGHT}
    out = []
    for block in path:
        out += [select[block], Command.CONFIRM]
    return out


def test_typing_state_machine():
    """Typing state machine: all 27 characters typed in exactly 6 commands;
    Left,Confirm,Right,Confirm,Right,Confirm types "I"; Cancel-undo identity
    holds over the reachable state space."""
    for char in "ABCDEFGHIJKLMNOPQRSTUVWXYZ ":
        commands = _command_sequence(char)
        assert len(commands) == 6
        state = TypingState()
        for cmd in commands:
            apply_command(state, cmd)
        assert state.typed == char

    state = TypingState()
    for cmd in (Command.LEFT, Command.CONFIRM, Command.RIGHT, Command.CONFIRM,
                Command.RIGHT, Command.CONFIRM):
        apply_command(state, cmd)
    assert state.typed == "I"

    reachable = [(0, (), h) for h in (None, 0, 1, 2)]
    reachable += [(1, (b,), h) for b in range(3) for h in (None, 0, 1, 2)]
    reachable += [(2, (b, s), h) for b in range(3) for s in range(3)
                  for h in (None, 0, 1, 2)]
    for level, path, highlight in reachable:
        for cmd in (Command.LEFT, Command.UP, Command.RIGHT, Command.CONFIRM):
            state = TypingState(level=level, path=path, highlight=highlight,
                                typed="AB")
            before = (state.level, state.path, state.highlight, state.typed)
            apply_command(state, cmd)
            apply_command(state, Command.CANCEL)
            assert (state.level, state.path, state.highlight,
                    state.typed) == before


def test_aggregation_and_throughput():
    """Aggregation/throughput: emission only after 3 consecutive consistent
    decisions, reset after emission, <= 1 command per 1.5 s of stream time;
    a replay types a 3-character word through the binary protocol."""
    # no emission before three consistent decisions; reset after emission
    rng = np.random.default_rng(3)
    for _ in range(200):
        decisions = rng.integers(0, 5, size=rng.integers(1, 40)).tolist()
        agg = DecisionAggregator()
        cmap = CommandMap()
        last_emit = -10
        for i, d in enumerate(decisions):
            cmd = agg.feed(d)
            if cmd is not None:
                assert decisions[i - 2] == decisions[i - 1] == decisions[i]
                assert cmd == cmap(d)
                assert i - last_emit >= 3
                last_emit = i
                assert agg.pending == []

    # throughput: n windows (n/2 seconds of stream) emit <= n/3 commands,
    # hence <= 60 s / 9 s characters per minute
    session = TypingSession(stub_classifier)
    n = 120
    for _ in range(n):
        intent = int(rng.integers(0, 5))
        samples = np.full((64, 4), float(intent), dtype=np.float32)
        session.feed_frame_bytes(encode_frame(samples))
    assert session.seq <= n // 3
    assert len(session.state.typed) <= int(session.stream_time // 9)

    # scripted 3-character replay through the binary wire format
    word = "HI "
    frames = []
    for char in word:
        for cmd in _command_sequence(char):
            intent = CommandMap().inverse(cmd)
            samples = np.full((64, 4), float(intent), dtype=np.float32)
            frames += [encode_frame(samples)] * 3
    replayed = simulate(frames, stub_classifier)
    assert replayed.state.typed == word
    assert replayed.stream_time == pytest.approx(len(word) * 9.0)
