"""
Stream-based active learning that decides, per incoming point, whether to probe
for a label, which labeled points to forget and cache, and which cached points
to recall, all by value of information under a Bayesian linear probit
classifier.
"""
