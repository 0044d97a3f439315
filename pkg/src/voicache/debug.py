def set_voicache_debug(enabled):
    """
    Enables/disables invariant checks and other helpful debug features
    globally in voicache.

    When enabled, posteriors are checked for symmetry and positive
    definiteness after every update and learner states are checked for point
    conservation after every step. These checks are too expensive for long
    runs.

    :param bool enabled: If enabled or not.
    """
    global _VOICACHE_DEBUG
    _VOICACHE_DEBUG = bool(enabled)


def is_voicache_debug_enabled():
    """
    :rtype: bool
    :return: Are voicache debug features enabled globally?
    """
    return _VOICACHE_DEBUG


_VOICACHE_DEBUG = False
