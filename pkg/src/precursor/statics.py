DEFAULT_ENCODING = "utf-8"
OUTPUT_DIR_ENV = "PRECURSOR_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "precursor-out"
MANIFEST_NAME = "manifest.yaml"

# Ingestion.
PRICE_COLUMNS = ("timestamp", "issue", "price")
CALENDAR_COLUMNS = ("date", "open_skip_minutes")
NEWS_COLUMNS = ("date", "count")
DEFAULT_OPEN_SKIP = 0

# Intraday profile.
DEFAULT_MIN_BUCKET = 30

# Market mode.
DEFAULT_COVERAGE = 1.0

# Sampling and estimation.
DEFAULT_DT = 1
DEFAULT_K_MIN = 20
MIN_FIT_LAGS = 8
MIN_LAG_PAIRS = 100
LAG_LENGTH_FACTOR = 10
DEFAULT_DETREND_BLOCK = 8
DETREND_MODES = ("none", "local-block")
FIT_FORMS = ("asymptotic", "exact")

# Moment scaling.
DEFAULT_Q_LIST = (1.0, 2.0, 3.0, 4.0, 5.0)
DEFAULT_DT_LIST = tuple(2**j for j in range(13))
MAX_Q = 5.0
MAX_DT = 4096
MIN_MOMENT_SAMPLES = 50
MIN_ZETA_CELLS = 4
HEAVY_TAIL_TOP = 0.01
HEAVY_TAIL_SHARE = 0.5

# Window scan.
PAPER_WINDOW = 39698
MIN_WINDOW_FACTOR = 100
DEFAULT_LARGE_MULTIPLE = 2.0

# Circulant embedding.
EMBEDDING_TOLERANCE = 1e-8
DENSE_FALLBACK_LIMIT = 2**14

# Omori.
DEFAULT_THRESHOLDS = (4.0, 5.0, 6.0, 7.0)
MIN_OMORI_EVENTS = 20
MIN_OMORI_HORIZON = 10.0

# News coupling.
MIN_NEWS_POINTS = 5

COMMANDS = (
    "simulate",
    "simulate-omori",
    "market-mode",
    "estimate",
    "spectrum",
    "window-scan",
    "omori",
    "news-fit",
)
