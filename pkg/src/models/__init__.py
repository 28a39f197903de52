from src.models.aids import AidsFit, AidsParameters, fit_aids, translog_price_index
from src.models.double_log import DoubleLogFit, fit_double_log
from src.models.elasticity import ElasticityTable, elasticity_table
from src.models.emissions import EmissionElasticityTable, EmissionWeights, emission_elasticities
from src.models.panel import FuelPanel, derive_activity, load_panel
