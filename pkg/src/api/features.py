"""
Features Mixin for cascade-bandits

Provides feature generation for the CascadeBenchAPI class:
- generate_features: Truncated-SVD item features from a 0/1 click CSV
"""

import os
from typing import Any, Dict, Optional

from config import logger
from bandits.linear import generate_features, load_training_matrix


class FeaturesMixin:
    def generate_features(self, train_path: str, d: int, K: int, output: Optional[str] = None) -> Dict[str, Any]:
        A = load_training_matrix(train_path)
        features = generate_features(A, d, K)
        path = output or os.path.join(self.output_root, f"features_d{d}.json")
        features.to_json(path, K)
        logger.info(f"Features for {features.L} items written to {path}")
        return {
            "d": features.d,
            "L": features.L,
            "K": K,
            "scale": features.scale,
            "max_column_norm": features.max_column_norm(),
            "path": path,
        }
