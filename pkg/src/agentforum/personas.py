"""Expert persona profiles and the on-disk persona catalog.

Profiles are YAML documents with four fixed groups::

    agent_id: HCI_Researcher
    basic_info:
      research_area: ...
      short_bio: ...
    research_and_professional_focus:
      focus_areas: [...]
      methodology: ...
      publication_channels: [...]
    skills_and_expertise:
      technical_skills: [...]
      analytical_skills: [...]
      domain_expertise: [...]
    personalities_and_characteristics:
      communication_style: ...
      audience_expertise_level: novice | intermediate | expert

A catalog directory (one file per persona) is loaded at service startup;
profiles remain editable at runtime through the service API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import yaml

from .digests import digest

GROUPS = (
    "basic_info",
    "research_and_professional_focus",
    "skills_and_expertise",
    "personalities_and_characteristics",
)


class ExpertiseLevel(str, Enum):
    NOVICE = "novice"
    INTERMEDIATE = "intermediate"
    EXPERT = "expert"


class PersonaError(ValueError):
    """Malformed persona document."""


def _as_tuple(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(str(v) for v in value)


@dataclass(frozen=True)
class AgentPersona:
    agent_id: str
    research_area: str
    short_bio: str
    focus_areas: tuple[str, ...] = ()
    methodology: str = ""
    publication_channels: tuple[str, ...] = ()
    technical_skills: tuple[str, ...] = ()
    analytical_skills: tuple[str, ...] = ()
    domain_expertise: tuple[str, ...] = ()
    communication_style: str = ""
    audience_expertise_level: ExpertiseLevel = ExpertiseLevel.EXPERT

    def to_dict(self) -> dict:
        """Nested dict in the catalog file schema (group and field names verbatim)."""
        return {
            "agent_id": self.agent_id,
            "basic_info": {
                "research_area": self.research_area,
                "short_bio": self.short_bio,
            },
            "research_and_professional_focus": {
                "focus_areas": list(self.focus_areas),
                "methodology": self.methodology,
                "publication_channels": list(self.publication_channels),
            },
            "skills_and_expertise": {
                "technical_skills": list(self.technical_skills),
                "analytical_skills": list(self.analytical_skills),
                "domain_expertise": list(self.domain_expertise),
            },
            "personalities_and_characteristics": {
                "communication_style": self.communication_style,
                "audience_expertise_level": self.audience_expertise_level.value,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AgentPersona":
        agent_id = data.get("agent_id")
        if not agent_id:
            raise PersonaError("persona document missing agent_id")
        for group in GROUPS:
            if not isinstance(data.get(group), Mapping):
                raise PersonaError(f"persona {agent_id!r} missing group {group!r}")
        basic = data["basic_info"]
        focus = data["research_and_professional_focus"]
        skills = data["skills_and_expertise"]
        traits = data["personalities_and_characteristics"]
        level_raw = traits.get("audience_expertise_level", "expert")
        try:
            level = ExpertiseLevel(level_raw)
        except ValueError as exc:
            raise PersonaError(
                f"persona {agent_id!r}: audience_expertise_level must be "
                f"novice|intermediate|expert, got {level_raw!r}"
            ) from exc
        return cls(
            agent_id=str(agent_id),
            research_area=str(basic.get("research_area", "")),
            short_bio=str(basic.get("short_bio", "")),
            focus_areas=_as_tuple(focus.get("focus_areas")),
            methodology=str(focus.get("methodology", "")),
            publication_channels=_as_tuple(focus.get("publication_channels")),
            technical_skills=_as_tuple(skills.get("technical_skills")),
            analytical_skills=_as_tuple(skills.get("analytical_skills")),
            domain_expertise=_as_tuple(skills.get("domain_expertise")),
            communication_style=str(traits.get("communication_style", "")),
            audience_expertise_level=level,
        )

    @property
    def digest(self) -> str:
        return digest(self.to_dict())


def load_persona(path: Path | str) -> AgentPersona:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, Mapping):
        raise PersonaError(f"{path}: not a mapping document")
    return AgentPersona.from_dict(data)


def save_persona(persona: AgentPersona, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(persona.to_dict(), fh, sort_keys=False, allow_unicode=True)


def load_catalog(directory: Path | str) -> dict[str, AgentPersona]:
    """Load every ``*.yaml`` persona in a directory, keyed by agent_id."""
    catalog: dict[str, AgentPersona] = {}
    for path in sorted(Path(directory).glob("*.yaml")):
        persona = load_persona(path)
        if persona.agent_id in catalog:
            raise PersonaError(f"duplicate agent_id {persona.agent_id!r} in catalog")
        catalog[persona.agent_id] = persona
    return catalog


def default_catalog() -> dict[str, AgentPersona]:
    """The catalog bundled with the package."""
    return load_catalog(Path(__file__).parent / "personas")


def roster_personas(
    catalog: Mapping[str, AgentPersona], roster: Iterable[str]
) -> dict[str, AgentPersona]:
    missing = [a for a in roster if a not in catalog]
    if missing:
        raise PersonaError(f"agents not in catalog: {missing}")
    return {a: catalog[a] for a in roster}
