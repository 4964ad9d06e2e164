"""Model loading and batched embedding computation.

Three backend families cover the registry: raw-waveform transformer
encoders (wav2vec2, HuBERT, WavLM), the log-mel Whisper encoder, and
ECAPA-TDNN via speechbrain. Transformer families expose hidden states
for layer averaging; ECAPA emits its native utterance embedding and has
no layer axis.

All pooling runs in float64 on the CPU so results do not depend on
batch composition beyond boundary effects of padding, and repeat runs
with the same configuration are deterministic.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import LayerSelectionError, ModelUnavailable
from .registry import ECAPA_FAMILY, WAV2VEC2_FAMILY, WHISPER_FAMILY, ModelInfo


def normalize_layers(layers: tuple[int, ...] | None, n_states: int) -> tuple[int, ...]:
    """Resolve possibly-negative layer indices against the model's count.

    Index 0 is the pre-transformer feature projection; 1..L are the
    transformer blocks. None selects every exposed hidden state.
    """
    if n_states < 1:
        raise LayerSelectionError("model exposes no hidden-state layers")
    if layers is None:
        return tuple(range(n_states))
    resolved = []
    for k in layers:
        idx = k + n_states if k < 0 else k
        if not 0 <= idx < n_states:
            raise LayerSelectionError(
                f"layer {k} out of range for a model with {n_states} hidden states"
            )
        resolved.append(idx)
    if len(set(resolved)) != len(resolved):
        raise LayerSelectionError(f"duplicate layers after resolution: {resolved}")
    return tuple(resolved)


def pool_hidden_states(
    hidden_states, valid_frames, layer_indices: tuple[int, ...]
) -> np.ndarray:
    """Average selected layers, then mean-pool each item over its own
    valid frames (padding excluded). Returns (B, H) float64."""
    stacked = np.stack(
        [np.asarray(h, dtype=np.float64) for h in hidden_states], axis=0
    )
    avg = stacked[list(layer_indices)].mean(axis=0)  # (B, T, H)
    out = np.empty((avg.shape[0], avg.shape[2]), dtype=np.float64)
    for i, nf in enumerate(valid_frames):
        nf = max(1, min(int(nf), avg.shape[1]))
        out[i] = avg[i, :nf].mean(axis=0)
    return out


def _load_pretrained(loader, checkpoint: str, what: str):
    # hub tooling raises OSError for missing/unreachable checkpoints and
    # ValueError subclasses for ids it refuses to resolve
    try:
        return loader(checkpoint)
    except (OSError, ValueError) as exc:
        raise ModelUnavailable(
            f"could not load {what} from {checkpoint!r} (not cached locally and "
            f"hub unreachable?): {exc}"
        ) from exc


class _TransformerBackend:
    """Shared batching/pooling loop; subclasses supply the forward pass."""

    def __init__(self, info: ModelInfo, checkpoint: str, device: str):
        import torch

        self._torch = torch
        self.info = info
        self.checkpoint = checkpoint
        self.device = device
        self.model, self.feature_extractor = self._load(checkpoint)
        self.model.eval().to(device)
        self.n_hidden_states = self._count_hidden_states()
        self.hidden_size = self._hidden_size()

    def embed_batch(self, waves: list[np.ndarray], layer_indices) -> np.ndarray:
        with self._torch.inference_mode():
            hidden, valid = self._forward(waves)
        return pool_hidden_states(hidden, valid, layer_indices)


class Wav2Vec2Backend(_TransformerBackend):
    family = WAV2VEC2_FAMILY

    def _load(self, checkpoint):
        from transformers import AutoFeatureExtractor, AutoModel, Wav2Vec2FeatureExtractor

        model = _load_pretrained(AutoModel.from_pretrained, checkpoint, "model")
        try:
            fe = AutoFeatureExtractor.from_pretrained(checkpoint)
        except OSError:
            # checkpoint ships no preprocessor config; family default
            fe = Wav2Vec2FeatureExtractor()
        return model, fe

    def _count_hidden_states(self) -> int:
        return int(self.model.config.num_hidden_layers) + 1

    def _hidden_size(self) -> int:
        return int(self.model.config.hidden_size)

    def _conv_out_len(self, n: int) -> int:
        cfg = self.model.config
        for kernel, stride in zip(cfg.conv_kernel, cfg.conv_stride):
            n = (n - kernel) // stride + 1
        return n

    def _forward(self, waves):
        # normalize each utterance alone, then pad: batch composition must
        # not leak into per-item scaling
        fe = self.feature_extractor
        prepped = [
            np.asarray(
                fe(
                    [np.asarray(w, dtype=np.float32)],
                    sampling_rate=16_000,
                    return_tensors="np",
                )["input_values"][0],
                dtype=np.float32,
            )
            for w in waves
        ]
        max_len = max(len(v) for v in prepped)
        values = np.full(
            (len(prepped), max_len), float(fe.padding_value), dtype=np.float32
        )
        mask = np.zeros((len(prepped), max_len), dtype=np.int64)
        for i, v in enumerate(prepped):
            values[i, : len(v)] = v
            mask[i, : len(v)] = 1
        inputs = {"input_values": self._torch.from_numpy(values).to(self.device)}
        if getattr(fe, "return_attention_mask", False):
            # group-norm models run maskless by design; padded frames are
            # excluded from pooling either way
            inputs["attention_mask"] = self._torch.from_numpy(mask).to(self.device)
        out = self.model(**inputs, output_hidden_states=True)
        hidden = [h.cpu() for h in out.hidden_states]
        valid = [self._conv_out_len(len(w)) for w in waves]
        return hidden, valid


class WhisperEncoderBackend(_TransformerBackend):
    family = WHISPER_FAMILY

    def _load(self, checkpoint):
        from transformers import AutoFeatureExtractor, WhisperFeatureExtractor, WhisperModel

        model = _load_pretrained(WhisperModel.from_pretrained, checkpoint, "model")
        try:
            fe = AutoFeatureExtractor.from_pretrained(checkpoint)
        except OSError:
            fe = WhisperFeatureExtractor()
        return model, fe

    def _count_hidden_states(self) -> int:
        return int(self.model.config.encoder_layers) + 1

    def _hidden_size(self) -> int:
        return int(self.model.config.d_model)

    def _forward(self, waves):
        batch = self.feature_extractor(
            [np.asarray(w, dtype=np.float32) for w in waves],
            sampling_rate=16_000,
            return_tensors="pt",
        )
        features = batch["input_features"].to(self.device)
        encoder = self.model.get_encoder()
        out = encoder(features, output_hidden_states=True)
        hidden = [h.cpu() for h in out.hidden_states]
        # mel frames cover ceil(len/hop); the encoder conv stack halves them
        hop = int(self.feature_extractor.hop_length)
        t_enc = hidden[0].shape[1]
        n_mel = features.shape[-1]
        valid = [
            min(t_enc, math.ceil(min(n_mel, math.ceil(len(w) / hop)) / 2))
            for w in waves
        ]
        return hidden, valid


class EcapaBackend:
    """Speaker-verification embedding; no hidden-state layers."""

    family = ECAPA_FAMILY

    def __init__(self, info: ModelInfo, checkpoint: str, device: str):
        try:
            import torch
            from speechbrain.inference.speaker import EncoderClassifier
        except ImportError as exc:
            raise ModelUnavailable(
                "ecapa-tdnn requires the speechbrain package "
                "(pip install 'extractor[ecapa]')"
            ) from exc
        self._torch = torch
        self.info = info
        self.checkpoint = checkpoint
        self.device = device
        try:
            self.classifier = EncoderClassifier.from_hparams(
                source=checkpoint, run_opts={"device": device}
            )
        except OSError as exc:
            raise ModelUnavailable(
                f"could not load ecapa-tdnn from {checkpoint!r}: {exc}"
            ) from exc
        self.n_hidden_states = 0
        self.hidden_size = info.hidden_size

    def embed_batch(self, waves: list[np.ndarray], layer_indices) -> np.ndarray:
        torch = self._torch
        max_len = max(len(w) for w in waves)
        padded = torch.zeros(len(waves), max_len)
        lens = torch.empty(len(waves))
        for i, w in enumerate(waves):
            padded[i, : len(w)] = torch.from_numpy(np.asarray(w, dtype=np.float32))
            lens[i] = len(w) / max_len
        with torch.inference_mode():
            emb = self.classifier.encode_batch(padded.to(self.device), lens)
        return emb.squeeze(1).cpu().numpy().astype(np.float64)


_FAMILIES = {
    WAV2VEC2_FAMILY: Wav2Vec2Backend,
    WHISPER_FAMILY: WhisperEncoderBackend,
    ECAPA_FAMILY: EcapaBackend,
}


def load_backend(info: ModelInfo, checkpoint: str | None, device: str = "cpu"):
    """Instantiate the backend for a registry entry.

    checkpoint overrides the registry hub id with a local path or an
    alternative hub repository.
    """
    target = checkpoint if checkpoint else info.hub_id
    if isinstance(target, Path):
        target = str(target)
    return _FAMILIES[info.family](info, target, device)
