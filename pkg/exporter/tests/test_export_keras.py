import numpy as np
import pytest

keras = pytest.importorskip("keras")

from surromip.predictors import load_predictor  # noqa: E402
from surromip_exporter import (  # noqa: E402
    ExportJob,
    UnsupportedModelError,
    export_model,
    verify_export,
)


@pytest.fixture(autouse=True)
def double_precision():
    old = keras.backend.floatx()
    keras.backend.set_floatx("float64")
    yield
    keras.backend.set_floatx(old)


def make_net(seed=0):
    keras.utils.set_random_seed(seed)
    model = keras.Sequential([
        keras.layers.Input(shape=(3,)),
        keras.layers.Dense(6, activation="relu"),
        keras.layers.Dense(2, activation="linear"),
    ])
    model.build((None, 3))
    return model


def test_dense_export_matches(tmp_path):
    job = ExportJob("keras", make_net(), str(tmp_path / "net.json"))
    export_model(job)
    assert verify_export(job, n_samples=500) <= 1e-9
    p = load_predictor(job.out_path)
    assert p.input_dim == 3 and p.output_dim == 2


def test_rejects_unsupported_layers(tmp_path):
    keras.utils.set_random_seed(0)
    model = keras.Sequential([
        keras.layers.Input(shape=(2,)),
        keras.layers.Dense(3, activation="tanh"),
        keras.layers.Dense(1, activation="linear"),
    ])
    model.build((None, 2))
    with pytest.raises(UnsupportedModelError, match="tanh"):
        export_model(ExportJob("keras", model, str(tmp_path / "x.json")))

    model = keras.Sequential([
        keras.layers.Input(shape=(2,)),
        keras.layers.Dense(3, activation="relu"),
    ])
    model.build((None, 2))
    with pytest.raises(UnsupportedModelError, match="final"):
        export_model(ExportJob("keras", model, str(tmp_path / "y.json")))
