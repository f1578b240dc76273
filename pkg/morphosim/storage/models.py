"""Records persisted next to experiment outputs"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from morphosim import __version__


@dataclass
class RunManifest:
    """Everything needed to reconstruct one CLI run"""
    subcommand: str
    parameters: Dict[str, object] = field(default_factory=dict)
    seed: Optional[int] = None
    outputs: List[str] = field(default_factory=list)
    version: str = __version__

    def lines(self) -> List[str]:
        """Flat key=value lines, parameters in sorted key order."""
        rows = [f"subcommand={self.subcommand}", f"version={self.version}"]
        rows.append(f"seed={'' if self.seed is None else self.seed}")
        for key in sorted(self.parameters):
            rows.append(f"param.{key}={_format_value(self.parameters[key])}")
        for i, path in enumerate(self.outputs):
            rows.append(f"output.{i}={path}")
        return rows


def _format_value(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)
