from .experiment import ExperimentMixin
from .features import FeaturesMixin
from .theory import TheoryMixin
import os
from config import logger, project_root
from dotenv import load_dotenv

# Ensure .env is loaded if not already
load_dotenv(os.path.join(project_root, '.env'))


class CascadeBenchAPI(
    ExperimentMixin,
    FeaturesMixin,
    TheoryMixin
):
    def __init__(self, output_root=None):
        ExperimentMixin.__init__(self)
        self.output_root = output_root or os.environ.get("CASCADE_BANDITS_OUTPUT_DIR") or os.path.join(os.getcwd(), "results")
        logger.info(f"CascadeBenchAPI initialized (outputs under {self.output_root})")
