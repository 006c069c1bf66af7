import numpy as np
import pytest
from scipy.special import erf

from geo2sound.alignment import (
    Normalizer,
    TrainConfig,
    analytic_gradients,
    cosine_loss,
    fit_pca,
    init_projection_model,
    load_projection_model,
    mlp_forward,
    pca_project,
    save_projection_model,
    select_candidate,
    train_projection,
    validation_split,
)
from geo2sound.alignment.network import PARAM_NAMES, batch_cosine_loss, forward_batch
from geo2sound.errors import DimensionMismatch, EmptyCandidateSet, ZeroVector


# --- PCA ---------------------------------------------------------------------

def test_pca_line_in_3d():
    rng = np.random.default_rng(0)
    direction = np.array([1.0, 2.0, 2.0]) / 3.0
    t = rng.normal(size=50)
    X = np.outer(t, direction) + np.array([5.0, -1.0, 2.0])
    pca = fit_pca(X, dims=1)
    comp = pca.components[0]
    assert abs(abs(comp @ direction) - 1.0) < 1e-9
    assert pca.explained_variance[0] == pytest.approx(t.var(ddof=1), rel=1e-9)


def test_pca_reconstruction_error_matches_full_spectrum():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 8)) * np.array([5, 4, 3, 2, 1, 0.5, 0.2, 0.1])
    pca = fit_pca(X, dims=4)
    centered = X - X.mean(axis=0)
    recon = pca.transform(X) @ pca.components
    err = ((centered - recon) ** 2).sum() / (X.shape[0] - 1)
    cov = np.cov(X, rowvar=False)
    eigvals = np.sort(np.linalg.eigvalsh(cov))[::-1]
    assert err == pytest.approx(eigvals[4:].sum(), rel=1e-9)
    # explained variances are the top eigenvalues, descending
    assert pca.explained_variance == pytest.approx(eigvals[:4], rel=1e-9)
    assert (np.diff(pca.explained_variance) <= 1e-12).all()


def test_pca_orthonormal_components_isotropic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 6))
    pca = fit_pca(X, dims=6)
    gram = pca.components @ pca.components.T
    assert np.allclose(gram, np.eye(6), atol=1e-9)
    assert pca.explained_variance.max() / pca.explained_variance.min() < 2.0


def test_pca_sign_convention():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 5))
    pca = fit_pca(X, dims=3)
    for row in pca.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_pca_rank_deficient_padding():
    rng = np.random.default_rng(4)
    t = rng.normal(size=(50, 2))
    X = np.hstack([t, t @ np.array([[1.0, 0.5], [0.5, 1.0]])])  # rank 2 in 4-D
    with pytest.warns(RuntimeWarning):
        pca = fit_pca(X, dims=4)
    assert pca.rank_deficient
    assert (pca.explained_variance[2:] == 0).all()
    gram = pca.components @ pca.components.T
    assert np.allclose(gram, np.eye(4), atol=1e-6)


def test_pca_project_contracts():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 6))
    pca = fit_pca(X, dims=4)
    assert pca_project(pca, pca.mean) == pytest.approx(np.zeros(4), abs=1e-12)
    x = rng.normal(size=6)
    assert pca_project(pca, x) == pytest.approx(pca.components @ (x - pca.mean), abs=1e-12)
    # vectors inside the component span reconstruct exactly
    z = rng.normal(size=4)
    in_span = pca.mean + z @ pca.components
    assert pca.components.T @ pca_project(pca, in_span) + pca.mean == pytest.approx(in_span, abs=1e-6)
    with pytest.raises(DimensionMismatch):
        pca_project(pca, np.zeros(7))


# --- MLP forward ---------------------------------------------------------------

def test_forward_unit_norm():
    rng = np.random.default_rng(0)
    m = init_projection_model(rng, in_dim=5, hidden_dim=16, out_dim=8)
    for _ in range(5):
        y = mlp_forward(m, rng.normal(size=5))
        assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-6)


def test_forward_zero_weights_fallback():
    rng = np.random.default_rng(0)
    m = init_projection_model(rng, in_dim=3, hidden_dim=4, out_dim=5)
    for k in m.params:
        m.params[k] = np.zeros_like(m.params[k])
    y = mlp_forward(m, np.ones(3))
    assert y == pytest.approx([1.0, 0.0, 0.0, 0.0, 0.0])


def test_forward_matches_hand_unrolled():
    m = init_projection_model(np.random.default_rng(0), in_dim=2, hidden_dim=2, out_dim=2)
    m.normalizer = Normalizer(mean=np.array([1.0, -1.0]), std=np.array([2.0, 0.5]))
    m.params = {
        "W1": np.array([[0.3, -0.2], [0.1, 0.4]]),
        "b1": np.array([0.05, -0.05]),
        "W2": np.array([[0.2, 0.1], [-0.3, 0.25]]),
        "b2": np.array([0.0, 0.1]),
        "W3": np.array([[0.5, -0.1], [0.2, 0.3]]),
        "b3": np.array([0.01, 0.02]),
    }

    def g(x):
        return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))

    x = np.array([2.0, 0.0])
    z = (x - np.array([1.0, -1.0])) / np.array([2.0, 0.5])
    h1 = g(z @ m.params["W1"] + m.params["b1"])
    h2 = g(h1 @ m.params["W2"] + m.params["b2"])
    out = h2 @ m.params["W3"] + m.params["b3"]
    expected = out / np.linalg.norm(out)
    assert mlp_forward(m, x) == pytest.approx(expected, abs=1e-12)


# --- cosine loss -----------------------------------------------------------

def test_cosine_loss_values():
    v = np.array([1.0, 2.0, -1.0])
    assert cosine_loss(v, v) == pytest.approx(0.0, abs=1e-12)
    assert cosine_loss(v, -v) == pytest.approx(2.0, abs=1e-12)
    assert cosine_loss(3.0 * v, v) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ZeroVector):
        cosine_loss(v, np.zeros(3))


def test_loss_cosine_identity_reference_pairs():
    # paired (cosine, loss) evaluation records satisfy loss = 1 - cosine
    for cos_val, loss_val in [(0.324, 0.676), (0.136, 0.864), (0.030, 0.970), (0.025, 0.975)]:
        assert abs((1.0 - cos_val) - loss_val) < 1e-9


# --- gradients ---------------------------------------------------------------

def _flat_params(m):
    return {k: m.params[k] for k in PARAM_NAMES}


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    m = init_projection_model(rng, in_dim=5, hidden_dim=8, out_dim=6)
    G = rng.normal(size=(8, 5))
    T = rng.normal(size=(8, 6))
    loss, grads = analytic_gradients(m, G, T, train_mode=False)
    h = 1e-4
    worst = 0.0
    for name in PARAM_NAMES:
        p = m.params[name]
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            ij = it.multi_index
            orig = p[ij]
            p[ij] = orig + h
            lp, _, _ = batch_cosine_loss(m, G, T)
            p[ij] = orig - h
            lm, _, _ = batch_cosine_loss(m, G, T)
            p[ij] = orig
            fd = (lp - lm) / (2 * h)
            rel = abs(grads[name][ij] - fd) / max(1.0, abs(grads[name][ij]))
            worst = max(worst, rel)
            it.iternext()
    assert worst < 1e-4


def test_gradients_zero_at_stationary_point():
    rng = np.random.default_rng(8)
    m = init_projection_model(rng, in_dim=3, hidden_dim=4, out_dim=4)
    G = rng.normal(size=(4, 3))
    y, _ = forward_batch(m, G)
    # targets exactly equal the (pre-normalization-scaled) predictions
    _loss, grads = analytic_gradients(m, G, 2.5 * y, train_mode=False)
    assert np.abs(grads["W3"]).max() < 1e-8
    assert np.abs(grads["b3"]).max() < 1e-8


def test_gradients_eval_mode_seed_independent():
    rng = np.random.default_rng(9)
    m = init_projection_model(rng, in_dim=4, hidden_dim=6, out_dim=5)
    G = rng.normal(size=(6, 4))
    T = rng.normal(size=(6, 5))
    _, g1 = analytic_gradients(m, G, T, train_mode=False, rng=np.random.default_rng(1))
    _, g2 = analytic_gradients(m, G, T, train_mode=False, rng=np.random.default_rng(999))
    for k in PARAM_NAMES:
        assert np.array_equal(g1[k], g2[k])


# --- selection ---------------------------------------------------------------

def test_select_singleton():
    g = np.array([1.0, 0.0])
    r = select_candidate(g, np.array([[0.5, 0.5]]))
    assert r.selected == 0
    assert r.geoalign == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_select_antipodal():
    g = np.random.default_rng(0).normal(size=32)
    r = select_candidate(g, np.vstack([g, -g]))
    assert r.selected == 0
    assert r.scores == pytest.approx([1.0, -1.0], abs=1e-12)


def test_select_matches_brute_force_and_scale_invariance():
    rng = np.random.default_rng(10)
    g = rng.normal(size=32)
    C = rng.normal(size=(6, 32))
    r = select_candidate(g, C)
    expected = np.array([c @ g / (np.linalg.norm(c) * np.linalg.norm(g)) for c in C])
    assert r.scores == pytest.approx(expected, abs=1e-12)
    assert r.selected == int(np.argmax(expected))
    assert r.geoalign == pytest.approx(expected.max())
    assert r.geoalign >= r.scores.max() - 1e-15
    scaled = select_candidate(2.0 * g, C * rng.uniform(0.1, 5.0, size=(6, 1)))
    assert scaled.selected == r.selected


def test_select_errors():
    with pytest.raises(EmptyCandidateSet):
        select_candidate(np.ones(3), np.zeros((0, 3)))
    with pytest.raises(ZeroVector):
        select_candidate(np.zeros(3), np.ones((2, 3)))
    with pytest.raises(ZeroVector):
        select_candidate(np.ones(3), np.vstack([np.ones(3), np.zeros(3)]))


# --- training ----------------------------------------------------------------

def _planted_data(n=300, noise=0.02, seed=0):
    rng = np.random.default_rng(seed)
    M = np.linalg.qr(rng.normal(size=(16, 5)))[0].T  # 5 x 16 orthonormal rows
    G = rng.dirichlet(np.full(5, 0.7), size=n) * 2.0
    T = G @ M + noise * rng.normal(size=(n, 16))
    T -= T.mean(axis=0)  # center, as the PCA stage does in the pipeline
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    return G, T


def test_train_projection_learns_planted_map():
    G, T = _planted_data()
    cfg = TrainConfig(max_epochs=60, hidden_dim=64, seed=42)
    _model, history = train_projection(G, T, cfg)
    best = min(h["val_cosine"] for h in history)
    assert max(h["val_cosine"] for h in history) >= 0.90


def test_train_projection_controls_stay_low():
    G, T = _planted_data(seed=3)
    rng = np.random.default_rng(5)
    cfg = TrainConfig(max_epochs=30, hidden_dim=32, seed=42)
    _m, hist_shuffled = train_projection(G[rng.permutation(G.shape[0])], T, cfg)
    assert max(h["val_cosine"] for h in hist_shuffled) <= 0.15
    _m, hist_zero = train_projection(np.zeros_like(G), T, cfg)
    assert abs(max(h["val_cosine"] for h in hist_zero)) <= 0.15


def test_training_deterministic_and_history_identity():
    G, T = _planted_data(n=120, seed=7)
    cfg = TrainConfig(max_epochs=10, hidden_dim=16, seed=11)
    m1, h1 = train_projection(G, T, cfg)
    m2, h2 = train_projection(G, T, cfg)
    for k in PARAM_NAMES:
        assert np.array_equal(m1.params[k], m2.params[k])
    assert h1 == h2
    for rec in h1:
        assert abs(rec["val_loss"] - (1.0 - rec["val_cosine"])) < 1e-9
        assert abs(rec["train_loss"] - (1.0 - rec["train_cosine"])) < 1e-9
    best_epoch = h1[0]["best_epoch"]
    assert h1[best_epoch]["val_loss"] == min(r["val_loss"] for r in h1)


def test_validation_split_deterministic():
    tr1, va1 = validation_split(100, 0.15, 42)
    tr2, va2 = validation_split(100, 0.15, 42)
    assert np.array_equal(tr1, tr2) and np.array_equal(va1, va2)
    assert va1.size == 15 and tr1.size == 85
    assert np.array_equal(np.sort(np.concatenate([tr1, va1])), np.arange(100))


def test_model_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    m = init_projection_model(rng, in_dim=5, hidden_dim=8, out_dim=6)
    m.pca = fit_pca(rng.normal(size=(40, 10)), dims=6)
    p = tmp_path / "model.bin"
    save_projection_model(p, m)
    loaded = load_projection_model(p)
    x = rng.normal(size=5)
    assert mlp_forward(loaded, x) == pytest.approx(mlp_forward(m, x), abs=0)
    assert np.array_equal(loaded.pca.components, m.pca.components)
    # identical content -> identical bytes
    p2 = tmp_path / "model2.bin"
    save_projection_model(p2, loaded)
    assert p.read_bytes() == p2.read_bytes()
