"""Supported encoder registry.

Each entry names a pretrained speech model, the hub checkpoint it
resolves to by default, the backend family that knows how to run it, and
the embedding width it produces. ``hidden_size`` is the per-layer width
for transformer encoders and the native embedding size for ECAPA.
"""

from dataclasses import dataclass

from .errors import UnknownModel

WAV2VEC2_FAMILY = "wav2vec2"
WHISPER_FAMILY = "whisper"
ECAPA_FAMILY = "ecapa"


@dataclass(frozen=True)
class ModelInfo:
    name: str
    hub_id: str
    family: str
    hidden_size: int
    # hidden-state layers exposed by the encoder, counting the
    # pre-transformer feature projection; ECAPA exposes none
    n_hidden_states: int


REGISTRY: dict[str, ModelInfo] = {
    m.name: m
    for m in (
        ModelInfo("wav2vec2-base", "facebook/wav2vec2-base", WAV2VEC2_FAMILY, 768, 13),
        ModelInfo("hubert-base", "facebook/hubert-base-ls960", WAV2VEC2_FAMILY, 768, 13),
        ModelInfo("wavlm-base-plus", "microsoft/wavlm-base-plus", WAV2VEC2_FAMILY, 768, 13),
        ModelInfo("whisper-base-encoder", "openai/whisper-base", WHISPER_FAMILY, 512, 7),
        ModelInfo("ecapa-tdnn", "speechbrain/spkrec-ecapa-voxceleb", ECAPA_FAMILY, 192, 0),
    )
}

MODEL_NAMES = tuple(REGISTRY)


def resolve_model(name: str) -> ModelInfo:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; supported: {', '.join(MODEL_NAMES)}"
        ) from None
