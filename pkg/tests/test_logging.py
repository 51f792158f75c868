import logging

from lmsc_hmm import EXCLUDED_LOGGERS, ExcludeSpecificLoggersFilter


def _record(name: str) -> logging.LogRecord:
    return logging.LogRecord(name, logging.INFO, __file__, 1, "message", None, None)


def test_root_filter_drops_only_the_excluded_loggers():
    log_filter = ExcludeSpecificLoggersFilter()
    assert EXCLUDED_LOGGERS == ("numexpr",)
    assert not log_filter.filter(_record("numexpr.utils"))
    assert log_filter.filter(_record("lmsc_hmm.src.hmm.baum_welch"))
    assert log_filter.filter(_record("root"))


def test_filter_is_installed_on_the_root_logger():
    assert any(isinstance(f, ExcludeSpecificLoggersFilter) for f in logging.getLogger().filters)
