from datetime import datetime
import pytz


def get_timezone(timezone_name='UTC'):
    """Resolve a zone name, falling back to UTC on unknown names"""
    try:
        return pytz.timezone(timezone_name)
    except pytz.UnknownTimeZoneError:
        return pytz.utc


def now_utc():
    """Get current datetime in UTC"""
    return datetime.now(pytz.utc)


def format_local_datetime(utc_dt, timezone_name='UTC', format_str='%Y-%m-%dT%H:%M:%S%z'):
    """Format a UTC datetime in the configured zone"""
    if utc_dt is None:
        return ''

    if utc_dt.tzinfo is None:
        utc_dt = pytz.utc.localize(utc_dt)

    return utc_dt.astimezone(get_timezone(timezone_name)).strftime(format_str)
