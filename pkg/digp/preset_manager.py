"""
Preset Manager - built-in and custom experiment presets persisted as JSON
"""

import json
import logging
import re
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from digp.config import DEFAULT_ALPHA_GRID, PRESETS_DIR
from digp.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

# ============================================================================
# CONSTANTS
# ============================================================================

PRESET_NAME_PATTERN = re.compile(r"^[a-z0-9][a-z0-9_-]{0,49}$")

DISTRIBUTED = ["diomp", "disp", "difrogs"]
EVERY_ALGORITHM = ["omp", "sp", "frogs"] + DISTRIBUTED


def _default_presets() -> Dict[str, Dict[str, Any]]:
    """Desk-scale versions of the published sweeps (Q = P = 10)."""
    grid_to_020 = [a for a in DEFAULT_ALPHA_GRID if a <= 0.20]
    presets = {
        "fig2": {
            "description": "Inner/outer iteration counts of DiSP and DiFROGS vs ring degree",
            "config": {
                "algorithms": ["disp", "difrogs"],
                "topology": ["ring:all"],
                "alpha": [0.10, 0.15, 0.20, 0.25],
                "signal": "gaussian", "smnr": 20.0,
            },
        },
        "fig3": {
            "description": "SRER vs alpha for ring degrees C_0 .. C_9, Gaussian signal, SMNR 20 dB",
            "config": {
                "algorithms": DISTRIBUTED,
                "topology": ["ring:all"],
                "alpha": grid_to_020,
                "signal": "gaussian", "smnr": 20.0,
            },
        },
        "fig4": {
            "description": "Fixed C_2 against random C_2,rand, Gaussian signal, SMNR 20 dB",
            "config": {
                "algorithms": DISTRIBUTED,
                "topology": ["ring:2", "rand:2"],
                "alpha": list(DEFAULT_ALPHA_GRID),
                "signal": "gaussian", "smnr": 20.0,
            },
        },
        "fig5": {
            "description": "Local, distributed (C_2) and joint (C_9) algorithms, Gaussian signal, clean",
            "config": {
                "algorithms": EVERY_ALGORITHM,
                "topology": ["ring:2", "ring:9"],
                "alpha": list(DEFAULT_ALPHA_GRID),
                "signal": "gaussian", "smnr": "clean",
            },
        },
        "fig6": {
            "description": "Local, distributed (C_2) and joint (C_9) algorithms, Gaussian signal, SMNR 20 dB",
            "config": {
                "algorithms": EVERY_ALGORITHM,
                "topology": ["ring:2", "ring:9"],
                "alpha": list(DEFAULT_ALPHA_GRID),
                "signal": "gaussian", "smnr": 20.0,
            },
        },
        "fig7": {
            "description": "Local, distributed (C_2) and joint (C_9) algorithms, binary signal, clean",
            "config": {
                "algorithms": EVERY_ALGORITHM,
                "topology": ["ring:2", "ring:9"],
                "alpha": list(DEFAULT_ALPHA_GRID),
                "signal": "binary", "smnr": "clean",
            },
        },
        "fig8": {
            "description": "Local, distributed (C_2) and joint (C_9) algorithms, binary signal, SMNR 20 dB",
            "config": {
                "algorithms": EVERY_ALGORITHM,
                "topology": ["ring:2", "ring:9"],
                "alpha": list(DEFAULT_ALPHA_GRID),
                "signal": "binary", "smnr": 20.0,
            },
        },
        "net100": {
            "description": "100-node Watts-Strogatz network (q=3, p=0.3) against disconnected nodes",
            "config": {
                "nodes": 100,
                "algorithms": DISTRIBUTED,
                "topology": ["watts:3,0.3", "ring:0"],
                "alpha": [0.15],
                "signal": "gaussian", "smnr": 20.0,
                "q_trials": 2, "p_trials": 2,
            },
        },
    }
    created_at = datetime.now().isoformat()
    out = {}
    for name, preset in presets.items():
        config = {"name": name, "description": preset["description"], **preset["config"]}
        config.setdefault("q_trials", 10)
        config.setdefault("p_trials", 10)
        out[name] = {
            "id": name,
            "type": "builtin",
            "description": preset["description"],
            "config": config,
            "created_at": created_at,
        }
    return out


# ============================================================================
# PRESET MANAGER CLASS
# ============================================================================

class PresetManager:
    """
    Manages experiment presets.

    Built-in sweeps come from ``_default_presets`` on every load; only the
    user-saved presets are persisted, under ``custom/metadata.json``.
    """

    def __init__(self, presets_dir: Optional[Union[str, Path]] = None):
        """Initialize preset manager and create the custom presets directory."""
        self.presets_dir = Path(presets_dir) if presets_dir is not None else PRESETS_DIR
        self.custom_dir = self.presets_dir / "custom"

        self._ensure_directories()

        self.presets: Dict[str, Dict[str, Any]] = {}
        self._load_presets()

    def _ensure_directories(self):
        try:
            self.custom_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.warning(f"Cannot create preset directory {self.custom_dir}: {e}")

    def _read_metadata(self, metadata_file: Path) -> Dict[str, Any]:
        if not metadata_file.exists():
            return {}
        try:
            with open(metadata_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Failed to load presets from {metadata_file}: {e}")
            return {}
        if not isinstance(data, dict):
            logger.warning(f"Ignoring {metadata_file}: expected a JSON object")
            return {}
        return data

    def _load_presets(self):
        """Built-in presets first, then the custom ones that do not clash."""
        builtin = _default_presets()
        self.presets.update(builtin)

        for preset_id, info in self._read_metadata(self.custom_dir / "metadata.json").items():
            if preset_id in builtin:
                logger.warning(f"Custom preset {preset_id!r} shadows a built-in preset and is ignored")
                continue
            if not isinstance(info, dict) or not isinstance(info.get("config"), dict):
                logger.warning(f"Custom preset {preset_id!r} has no config and is ignored")
                continue
            self.presets[preset_id] = {**info, "id": preset_id, "type": "custom"}

    def _save_custom_metadata(self):
        metadata_file = self.custom_dir / "metadata.json"
        entries = {k: v for k, v in self.presets.items() if v.get("type") == "custom"}
        try:
            with open(metadata_file, "w", encoding="utf-8") as f:
                json.dump(entries, f, indent=2, ensure_ascii=False)
        except OSError as e:
            raise OSError(f"Cannot write presets to {metadata_file}: {e}") from e

    def list_presets(self) -> List[Dict[str, Any]]:
        """
        List all presets, built-in ones first.

        Returns:
            List of preset metadata dictionaries
        """
        return sorted(self.presets.values(), key=lambda p: (p.get("type") != "builtin", p["id"]))

    def get_preset(self, preset_id: str) -> Optional[Dict[str, Any]]:
        return self.presets.get(preset_id)

    def load_config(self, preset_id: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        """
        Build an ExperimentConfig from a preset.

        Args:
            preset_id: Preset identifier
            overrides: Field values replacing the preset's

        Returns:
            Validated ExperimentConfig

        Raises:
            ValueError: If the preset does not exist or the result is invalid
        """
        preset = self.presets.get(preset_id)
        if preset is None:
            raise ValueError(f"Unknown preset: {preset_id}. Available: {sorted(self.presets)}")
        return ExperimentConfig(**{**preset["config"], **(overrides or {})})

    def save_custom_preset(self, name: str, config: Union[ExperimentConfig, Dict[str, Any]], description: str = "") -> str:
        """
        Save a custom preset.

        Args:
            name: Preset identifier (lowercase letters, digits, '-' or '_')
            config: Experiment configuration to store
            description: Free text shown by list-experiments

        Returns:
            Preset ID

        Raises:
            ValueError: If the name is invalid or taken by a built-in
        """
        if not name or not isinstance(name, str):
            raise ValueError("Invalid preset name")
        name = name.strip()
        if not PRESET_NAME_PATTERN.match(name):
            raise ValueError(f"Preset name {name!r} must be 1-50 characters of [a-z0-9_-]")
        existing = self.presets.get(name)
        if existing is not None and existing.get("type") == "builtin":
            raise ValueError(f"Preset {name!r} is built-in and cannot be overwritten")

        if not isinstance(config, ExperimentConfig):
            config = ExperimentConfig(**config)
        data = config.model_dump()
        data["name"] = name
        if description:
            data["description"] = description

        self.presets[name] = {
            "id": name,
            "type": "custom",
            "description": description or config.description,
            "config": data,
            "created_at": datetime.now().isoformat(),
        }
        self._save_custom_metadata()
        logger.info(f"Custom preset saved: {name}")
        return name

    def delete_preset(self, preset_id: str) -> bool:
        """
        Delete a custom preset.

        Returns:
            True if deleted, False if not found

        Raises:
            ValueError: If the preset is built-in
        """
        preset = self.presets.get(preset_id)
        if preset is None:
            return False
        if preset.get("type") == "builtin":
            raise ValueError(f"Preset {preset_id!r} is built-in and cannot be deleted")
        del self.presets[preset_id]
        self._save_custom_metadata()
        logger.info(f"Custom preset deleted: {preset_id}")
        return True


__all__ = ["PresetManager"]
