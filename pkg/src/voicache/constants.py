POSITIVE_LABEL = 1
"""Class label of cluster 1 (and of the "busy" state in the asymmetric preset)."""

NEGATIVE_LABEL = -1
"""The other class label."""

LABELS = (POSITIVE_LABEL, NEGATIVE_LABEL)

POLICY_VOI_FULL = "voi_full"
"""Probe by VOP, forget by VOF and recall by VOR."""

POLICY_VOP_ONLY = "vop_only"
"""Probe by VOP, never forget."""

POLICY_RANDOM = "random"
"""Probe with a fixed probability."""

POLICY_UNCERTAIN = "uncertain"
"""Probe when the predictive probability is inside the uncertainty band."""

POLICY_NAMES = (POLICY_VOI_FULL, POLICY_VOP_ONLY, POLICY_RANDOM, POLICY_UNCERTAIN)

UNCERTAINTY_BAND = (0.3, 0.7)
"""Closed interval of predictive probabilities probed by the uncertainty policy."""

EP_TOLERANCE = 1e-6
"""Largest site change accepted as an EP fixed point."""

EP_MAX_SWEEPS = 50

COVARIANCE_JITTER = 1e-10

SYMMETRY_TOLERANCE = 1e-10

CAVITY_SINGULARITY_TOLERANCE = 1e-12
"""Sites whose cavity denominator is smaller than this can't be removed."""

HAZARD_TAIL_THRESHOLD = -6.0
"""Below this the hazard ratio is computed with the scaled complementary error function."""

SUMMARY_FILENAME = "summary.csv"
STEPS_FILENAME = "steps.csv"
COMPARISON_FILENAME = "comparison.txt"

STREAM_LENGTH_HORIZON = "stream_len"
"""Config value making the optimization horizon equal to the stream length."""
