"""Common error taxonomy shared by the library, CLI, and HTTP service."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base error carrying a machine-readable code and the offending element."""

    code = "error"

    def __init__(self, message: str, element: str | None = None):
        super().__init__(message)
        self.message = message
        self.element = element

    def to_json(self) -> dict:
        payload = {"code": self.code, "message": self.message}
        if self.element is not None:
            payload["element"] = self.element
        return payload


class UrdfError(ToolkitError):
    """Robot description document is malformed or violates model invariants."""

    code = "urdf_error"


class SrdfError(ToolkitError):
    """Semantic configuration is malformed or references unknown entities."""

    code = "srdf_error"


class KinematicsError(ToolkitError):
    """A kinematics query was made with invalid inputs (missing values, bad group)."""

    code = "kinematics_error"


class PlanningError(ToolkitError):
    """A plan request is invalid (bad start state, unresolvable goal, bad params)."""

    code = "planning_error"


class PluginError(ToolkitError):
    """Plugin registry misuse: duplicate registration or unknown lookup."""

    code = "plugin_error"


class ConfigError(ToolkitError):
    """Configuration generation or parsing failure."""

    code = "config_error"


class BundleWriteError(ToolkitError):
    """Refusal or failure while writing a config bundle to disk."""

    code = "bundle_write_error"
