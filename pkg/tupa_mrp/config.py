"""
Configuration management for TUPA-MRP.
"""
import configparser
import os
from pathlib import Path
from typing import Any, Optional


class Config:
    """Configuration wrapper: INI file first, DEFAULTS second."""

    DEFAULTS = {
        # Training
        'epochs': 20,
        'seed': 1,
        'feature_buckets': 16384,
        'multitask': False,
        # Parsing
        'step_budget_factor': 10,
        # Evaluation
        'restarts': 10,
        'iterations': 5000,
        'exact_limit': 5040,
        'jobs': 1,
        # Data
        'data_dir': os.environ.get('TUPA_MRP_DATA', str(Path.cwd() / 'data')),
    }

    SECTIONS = ['Training', 'Parsing', 'Evaluation', 'Data', 'DEFAULT']

    # Template for generating new config files
    TEMPLATE = """[Training]
# Passes over the training corpus
epochs = 20

# Every random decision (shuffling, synthetic data, scorer restarts) derives from this
seed = 1

# Size of the hashed feature space for each weight table
feature_buckets = 16384

# Add the framework tag as a feature (for models trained on several frameworks)
multitask = false

[Parsing]
# Greedy parsing stops after factor * (2n + 10) transitions
step_budget_factor = 10

[Evaluation]
# Correspondence search: random restarts and hill-climbing iterations per restart
restarts = 10
iterations = 5000

# Enumerate all correspondences when there are at most this many
exact_limit = 5040

# Worker threads for corpus-level scoring
jobs = 1

[Data]
# Where bundled corpora are generated and looked up
data_dir = {data_dir}
"""

    def __init__(self, config_path: Optional[str] = None):
        self.config = configparser.ConfigParser()
        self.config_path = self._find_config(config_path)

        if config_path and not self.config_path:
            raise FileNotFoundError(f"Config file '{config_path}' not found.")

        if self.config_path:
            self.config.read(self.config_path, encoding='utf-8')
            self._validate()

    def _find_config(self, config_path: Optional[str] = None) -> Optional[Path]:
        """Find the config file, or None to run on defaults."""
        if config_path:
            return Path(config_path) if Path(config_path).exists() else None

        search_paths = [
            Path.cwd() / 'tupa_mrp.ini',
            Path.home() / '.tupa_mrp' / 'config.ini',
        ]

        for path in search_paths:
            if path.exists():
                return path

        return None

    def _validate(self):
        """Numeric settings have to be positive, anything else is a typo."""
        for key in ('epochs', 'feature_buckets', 'step_budget_factor', 'restarts', 'jobs', 'exact_limit'):
            value = self.getint(key, -1)
            if value <= 0:
                raise ValueError(f"'{key}' must be a positive integer, got {self.get(key)!r}")
        if self.getint('iterations', -1) < 0:
            raise ValueError(f"'iterations' must be non-negative, got {self.get('iterations')!r}")

    def get(self, key: str, default: Any = None) -> Any:
        for section in self.SECTIONS:
            if self.config.has_section(section) and self.config.has_option(section, key):
                return self.config.get(section, key)
            if section == 'DEFAULT' and key in self.config.defaults():
                return self.config.defaults()[key]

        return self.DEFAULTS.get(key, default)

    def getint(self, key: str, default: int = 0) -> int:
        value = self.get(key, default)
        try:
            return int(value)
        except (TypeError, ValueError):
            return default

    def getfloat(self, key: str, default: float = 0.0) -> float:
        value = self.get(key, default)
        try:
            return float(value)
        except (TypeError, ValueError):
            return default

    def getbool(self, key: str, default: bool = False) -> bool:
        value = self.get(key, default)
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            return value.lower() in ('true', 'yes', '1', 'on')
        return bool(value)

    @classmethod
    def write_template(cls, path: Path) -> Path:
        content = cls.TEMPLATE.format(data_dir=str(cls.DEFAULTS['data_dir']).replace('\\', '/'))
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(content)
        return path
