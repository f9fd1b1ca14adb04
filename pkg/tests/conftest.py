import numpy as np
import pytest

from lpocv import Sample
from lpocv.bases import (make_haar_scaling_model, make_haar_wavelet_model,
                         make_histogram_model, make_piecewise_poly_model,
                         make_trig_model)


@pytest.fixture
def three_points() -> Sample:
    """The worked three-observation fixture {0.1, 0.2, 0.7}."""
    return Sample(np.array([0.1, 0.2, 0.7]))


def assorted_models():
    """One representative model per family, desk-sized."""
    return [
        make_histogram_model(1),
        make_histogram_model(2),
        make_histogram_model(5),
        make_trig_model(0),
        make_trig_model(2),
        make_haar_scaling_model(0),
        make_haar_scaling_model(2),
        make_haar_wavelet_model(0),
        make_haar_wavelet_model(2),
        make_piecewise_poly_model(0, 1),
        make_piecewise_poly_model(1, 2),
        make_piecewise_poly_model(2, 3),
    ]


@pytest.fixture(params=assorted_models(), ids=lambda m: m.label)
def any_model(request):
    return request.param
