"""Convention-over-configuration project layout.

A scaffolded project keeps everything under ``TFP/``: critical test scripts
in ``TFP/Critical``, the master suite at ``TFP/MasterPerformance.xml`` and
the persisted application identity in ``TFP/app.id``. A service file maps to
its script purely by name: the stem (last extension stripped) plus the
script suffix, so ``BookSearch.svc`` resolves to
``TFP/Critical/BookSearchPerformance.xml`` with zero per-service config.

An optional ``TFP/tfp.conf`` (flat ``key=value`` lines, ``#`` comments)
overrides the directory names; overrides must stay inside the project root.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path, PurePosixPath

from .errors import (
    AlreadyScaffoldedError,
    BadConfigError,
    EmptyStemError,
    EscapesRootError,
    FieldError,
    IoError,
)
from .model import ApplicationIdentity, new_app_identity

DEFAULT_CRITICAL_DIR = "TFP/Critical"
DEFAULT_MASTER_PATH = "TFP/MasterPerformance.xml"
DEFAULT_SCRIPT_SUFFIX = "Performance.xml"
DEFAULT_APP_ID_PATH = "TFP/app.id"
CONFIG_RELATIVE_PATH = "TFP/tfp.conf"

# Keys load_layout consumes, plus keys other components are known to read
# from the same file (they get no unknown-key warning).
_LAYOUT_KEYS = frozenset({"critical_dir", "master_path", "script_suffix"})
_KNOWN_KEYS = _LAYOUT_KEYS | {"service_url"}

MASTER_TEMPLATE = """\
<?xml version="1.0" encoding="UTF-8"?>
<tfp:masterScript xmlns:tfp="urn:tfpaas:script:v1">
  <tfp:scenario name="example">
    <tfp:case>
      <tfp:url>http://localhost:8080/ExampleService</tfp:url>
      <tfp:method>GET</tfp:method>
    </tfp:case>
    <tfp:criteria>
      <tfp:response>1000</tfp:response>
      <tfp:tps>1</tfp:tps>
      <tfp:bps>8</tfp:bps>
    </tfp:criteria>
  </tfp:scenario>
</tfp:masterScript>
"""


@dataclass(frozen=True)
class ProjectLayout:
    """Where one project keeps its performance-test artifacts.

    The relative paths are stored forward-slash normalized and are
    guaranteed to resolve inside ``root``.
    """

    root: Path
    critical_dir: str = DEFAULT_CRITICAL_DIR
    master_path: str = DEFAULT_MASTER_PATH
    script_suffix: str = DEFAULT_SCRIPT_SUFFIX
    app_id_path: str = DEFAULT_APP_ID_PATH

    def __post_init__(self) -> None:
        object.__setattr__(self, "root", Path(self.root))
        for name in ("critical_dir", "master_path", "app_id_path"):
            normalized = getattr(self, name).replace("\\", "/")
            object.__setattr__(self, name, normalized)
            self._check_contained(name, normalized)
        if "/" in self.script_suffix or "\\" in self.script_suffix:
            raise FieldError("script_suffix", "must not contain path separators")
        if not self.script_suffix:
            raise FieldError("script_suffix", "must not be empty")

    def _check_contained(self, name: str, relative: str) -> None:
        base = self.root.resolve()
        candidate = (self.root / relative).resolve()
        if not candidate.is_relative_to(base):
            raise EscapesRootError(f"{name}={relative!r} resolves outside {base}")

    @property
    def critical_dir_abs(self) -> Path:
        return self.root / self.critical_dir

    @property
    def master_abs(self) -> Path:
        return self.root / self.master_path

    @property
    def app_id_abs(self) -> Path:
        return self.root / self.app_id_path

    @property
    def config_abs(self) -> Path:
        return self.root / CONFIG_RELATIVE_PATH


def read_config(path: Path | str) -> dict[str, str]:
    """Parse a flat ``key=value`` file; later lines win on duplicate keys."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    entries: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadConfigError(f"{path.name} line {number}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise BadConfigError(f"{path.name} line {number}: empty key")
        entries[key] = value.strip()
    return entries


def load_layout(root: Path | str) -> tuple[ProjectLayout, list[str]]:
    """Layout for ``root``: defaults, merged with ``TFP/tfp.conf`` overrides
    when that file exists. Unknown config keys come back as warnings."""
    root = Path(root)
    config_file = root / CONFIG_RELATIVE_PATH
    warnings: list[str] = []
    overrides: dict[str, str] = {}
    if config_file.is_file():
        for key, value in read_config(config_file).items():
            if key in _LAYOUT_KEYS:
                overrides[key] = value
            elif key not in _KNOWN_KEYS:
                warnings.append(f"{config_file.name}: unknown key {key!r}")
    return ProjectLayout(root=root, **overrides), warnings


def service_name(service_file: Path | str) -> str:
    """Derive the service name from a file path: the final path component
    with only its last extension stripped, case preserved."""
    name = PurePosixPath(str(service_file).replace("\\", "/")).name
    stem, dot, _ = name.rpartition(".")
    if not dot:
        stem = name
    if not stem:
        raise EmptyStemError(f"no service name derivable from {name!r}")
    return stem


def resolve_critical(service_file: Path | str, layout: ProjectLayout) -> Path:
    """Map a service file to its critical test script path.

    Pure name arithmetic: the script need not exist, and neither does the
    service file.
    """
    return layout.critical_dir_abs / f"{service_name(service_file)}{layout.script_suffix}"


def scaffold_project(root: Path | str, user_name: str) -> ProjectLayout:
    """Create the project template under ``root`` and mint its identity.

    Refuses to run twice: an existing ``TFP`` directory is an error, never
    silently merged.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"project root does not exist: {root}")
    if (root / "TFP").exists():
        raise AlreadyScaffoldedError(f"{root / 'TFP'} already exists")
    identity = new_app_identity(user_name)
    layout = ProjectLayout(root=root)
    try:
        layout.critical_dir_abs.mkdir(parents=True)
        layout.master_abs.write_text(MASTER_TEMPLATE, encoding="utf-8")
        write_app_identity(layout.app_id_abs, identity)
    except OSError as exc:
        raise IoError(f"scaffold failed: {exc}") from exc
    return layout


def write_app_identity(path: Path | str, identity: ApplicationIdentity) -> None:
    try:
        Path(path).write_text(
            f"app_id={identity.app_id}\nuser_name={identity.user_name}\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_app_identity(path: Path | str) -> ApplicationIdentity:
    entries = read_config(path)
    app_id = entries.get("app_id")
    user_name = entries.get("user_name")
    if app_id is None or user_name is None:
        raise BadConfigError(f"{Path(path).name}: needs app_id and user_name lines")
    try:
        return ApplicationIdentity(app_id=app_id, user_name=user_name)
    except FieldError as exc:
        raise BadConfigError(f"{Path(path).name}: {exc.field}: {exc.message}") from exc
