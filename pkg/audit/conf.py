from django.conf import settings


def audit_setting(name, override=None):
    """reads a FRONTIERLAG setting, preferring an explicit per-call override"""
    if override is not None:
        return override
    try:
        return settings.FRONTIERLAG[name]
    except KeyError:
        raise KeyError('FRONTIERLAG setting "{}" is not configured'.format(name))
