import numpy as np
import pytest

from faircon.data import SynthConfig, generate_synthetic

# Verdict lines registered by the acceptance tests; echoed after the run so
# they are visible whether or not output capture is on.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_paired_batch(rng, n_anchors=4, dim=6, n_labels=2, n_groups=2, unit=True):
    """Random batch with valid anchor/view pairing; optionally unit-norm rows."""
    z = rng.normal(size=(2 * n_anchors, dim))
    if unit:
        z /= np.linalg.norm(z, axis=1, keepdims=True)
    labels = rng.integers(0, n_labels, size=n_anchors)
    attrs = rng.integers(0, n_groups, size=n_anchors)
    return z, np.tile(labels, 2), np.tile(attrs, 2)


@pytest.fixture(scope="session")
def tiny_corpus():
    # small enough that train-loop tests stay in the low seconds
    cfg = SynthConfig(n_train=240, n_val=80, n_test=120, doc_len=8, vocab_size=40, seed=7)
    return cfg, generate_synthetic(cfg)
