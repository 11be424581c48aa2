import pytest

from surromip_exporter import ExportJob, UnsupportedModelError, export_model
from surromip_exporter.export import _convert_lgb, _convert_xgb


def _installed(name):
    try:
        __import__(name)
        return True
    except ImportError:
        return False


@pytest.mark.skipif(_installed("lightgbm"), reason="lightgbm is installed")
def test_lgb_missing_is_actionable():
    with pytest.raises(UnsupportedModelError, match="pip install lightgbm"):
        _convert_lgb(object())


@pytest.mark.skipif(_installed("xgboost"), reason="xgboost is installed")
def test_xgb_missing_is_actionable():
    with pytest.raises(UnsupportedModelError, match="pip install xgboost"):
        _convert_xgb(object())


def test_unknown_framework_rejected(tmp_path):
    with pytest.raises(Exception, match="unknown framework"):
        ExportJob("caffe", object(), str(tmp_path / "x.json"))
