from .__version__ import __version__  # noqa: F401
from .background import BackgroundQueue, replicate  # noqa: F401
from .estimate import (  # noqa: F401
    CovCurve,
    MomentTable,
    MrwFit,
    ZetaSpectrum,
    fit_lambda_L,
    fit_zeta,
    log_abs_cov,
    moment_scaling,
    theoretical_log_abs_cov,
    zeta_theoretical,
)
from .events import (  # noqa: F401
    OmoriFit,
    ShockFrame,
    SideFit,
    cumulative_frequencies,
    cumulative_frequency,
    find_main_shock,
    fit_omori,
)
from .exceptions import *  # noqa: F403
from .market import MarketMode, compute_market_mode  # noqa: F401
from .models import (  # noqa: F401
    IntradayProfile,
    PriceSeries,
    ReturnSeries,
    Series,
    TradingCalendar,
)
from .news import (  # noqa: F401
    NewsCoupling,
    NewsSeries,
    deseasonalize_news,
    fit_news_coupling,
    join_news,
    load_news,
)
from .scan import WindowEstimate, daily_large_count, trajectory_frame, window_scan  # noqa: F401
from .simulate import (  # noqa: F401
    MrwParams,
    OmoriParams,
    omori_spike_series,
    rho,
    rho_asymptotic,
    simulate_mrw,
    simulate_omega,
    simulate_omori_events,
)
from .timeseries import (  # noqa: F401
    coarse_grain,
    deseasonalize,
    detrend_local,
    intraday_profile,
    load_prices,
    log_returns,
)
