__version__ = "0.1.0"

import logging
import os

MODULE_PATH = os.path.dirname(os.path.realpath(__file__))
CONFIG_PATH = f"{MODULE_PATH}/src/cli/configs"


# numexpr, loaded by pandas when installed, logs its thread setup at INFO
EXCLUDED_LOGGERS = ('numexpr',)


# Create a custom filter to exclude specific loggers
class ExcludeSpecificLoggersFilter(logging.Filter):
    def filter(self, record):
        excluded_loggers = EXCLUDED_LOGGERS
        return not any(record.name.startswith(excluded) for excluded in excluded_loggers)


# Configure logging
logging.basicConfig(
    level=os.environ.get("LMSC_HMM_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logging.getLogger('numexpr').setLevel(logging.WARNING)

# Get the root logger
log = logging.getLogger()

# Add the custom filter to the root logger
log.addFilter(ExcludeSpecificLoggersFilter())
