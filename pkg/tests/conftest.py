import numpy as np
import pytest
from hypothesis import settings

from mom.network import random_instance, synthesize_pseudoranges

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


def clean_problem(m, n, dim, seed):
    inst = random_instance(m, n, dim, seed=seed)
    return inst, synthesize_pseudoranges(inst)


def rel_error(sol, inst):
    est = np.concatenate([np.ravel(sol.receivers), np.ravel(sol.offsets)])
    ref = np.concatenate([inst.receivers.ravel(), inst.offsets.ravel()])
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
