import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import Normalizer

from lowlight.calib import CameraCalibrator, Undistorter
from lowlight.classify import SoftmaxClassifier, make_feature_clusters
from lowlight.enhance import (
    CLAHE,
    AdaptiveEqualizer,
    AheParams,
    ClaheParams,
    HistogramEqualizer,
    adaptive_equalize,
    clahe,
    equalize,
    make_enhancer,
)
from lowlight.exceptions import InvalidParamsError

ESTIMATORS = [
    HistogramEqualizer(classic=True),
    AdaptiveEqualizer(beta=1.1, low_threshold=60),
    CLAHE(tile_width=40, clip_limit=2.0),
    SoftmaxClassifier(n_classes=3, epochs=7),
    CameraCalibrator(max_iter=20),
    Undistorter(fx=100.0, k1=-0.1),
]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_get_params_and_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin is not est
    assert twin.get_params() == params
    assert type(est)(**params).get_params() == params


def test_set_params():
    est = CLAHE().set_params(clip_limit=3.0)
    assert est.clip_limit == 3.0


def test_transformers_match_functions(rng):
    imgs = rng.integers(0, 120, (3, 64, 64), dtype=np.uint8)
    for est, fn in [
        (HistogramEqualizer(), lambda im: equalize(im)),
        (AdaptiveEqualizer(beta=1.5), lambda im: adaptive_equalize(im, AheParams(beta=1.5))),
        (CLAHE(), lambda im: clahe(im, ClaheParams())),
    ]:
        out = est.fit_transform(imgs)
        assert out.dtype == np.uint8 and out.shape == imgs.shape
        for got, im in zip(out, imgs):
            assert np.array_equal(got, fn(im))


def test_transformer_accepts_lists_of_mixed_shapes(rng):
    imgs = [rng.integers(0, 256, (40, 50), dtype=np.uint8), rng.integers(0, 256, (33, 35, 3), dtype=np.uint8)]
    out = AdaptiveEqualizer().transform(imgs)
    assert isinstance(out, list)
    assert [o.shape for o in out] == [(40, 50), (33, 35, 3)]


def test_image_pipeline(rng):
    imgs = rng.integers(0, 60, (2, 64, 64), dtype=np.uint8)
    pipe = make_pipeline(CLAHE(), Undistorter(fx=80.0, fy=80.0, cx=32.0, cy=32.0))
    out = pipe.fit_transform(imgs)
    assert np.array_equal(out, CLAHE().transform(imgs))


def test_classifier_in_pipeline_with_cross_validation():
    X, y, _ = make_feature_clusters(n_per_class=20, n_features=48, conditions=("original",), seed=8)
    pipe = make_pipeline(Normalizer(), SoftmaxClassifier(learning_rate=1.0, epochs=60, batch_size=10))
    scores = cross_val_score(pipe, X, y, cv=3)
    assert scores.mean() > 0.9


def test_make_enhancer():
    assert isinstance(make_enhancer("he"), HistogramEqualizer)
    assert make_enhancer("clahe", clip_limit=2.5).clip_limit == 2.5
    with pytest.raises(InvalidParamsError):
        make_enhancer("gamma")


def test_invalid_params_raise_at_transform(rng):
    img = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    with pytest.raises(InvalidParamsError):
        CLAHE(clip_limit=-1.0).transform([img])
    with pytest.raises(InvalidParamsError):
        AdaptiveEqualizer(beta=0.0).transform([img])
