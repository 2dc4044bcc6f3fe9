# Configuration package
from .manager import ConfigManager, ScenarioConfig
from .presets import PRESETS, preset_names, render_preset

__all__ = ["ConfigManager", "ScenarioConfig", "PRESETS", "preset_names", "render_preset"]
