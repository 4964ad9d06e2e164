from pathlib import Path

import pytest

CLIPS = Path(__file__).parent / "data" / "clips"


@pytest.fixture(scope="session")
def clips_dir() -> Path:
    return CLIPS


def _tiny_wav2vec2_config():
    from transformers import Wav2Vec2Config

    # two conv layers (stride 10 total) and two transformer blocks keep
    # forwards fast while exercising the full code path
    return Wav2Vec2Config(
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        conv_dim=(32, 32),
        conv_stride=(5, 2),
        conv_kernel=(10, 3),
        num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=4,
    )


@pytest.fixture(scope="session")
def tiny_w2v2_checkpoint(tmp_path_factory) -> Path:
    """Random-weight wav2vec2 with no bundled preprocessor config."""
    import torch
    from transformers import Wav2Vec2Model

    path = tmp_path_factory.mktemp("ckpt") / "w2v2-tiny"
    torch.manual_seed(101)
    Wav2Vec2Model(_tiny_wav2vec2_config()).save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tiny_w2v2_masked_checkpoint(tmp_path_factory) -> Path:
    """Same architecture but shipping a mask-aware feature extractor."""
    import torch
    from transformers import Wav2Vec2FeatureExtractor, Wav2Vec2Model

    path = tmp_path_factory.mktemp("ckpt") / "w2v2-tiny-masked"
    torch.manual_seed(101)
    Wav2Vec2Model(_tiny_wav2vec2_config()).save_pretrained(path)
    Wav2Vec2FeatureExtractor(return_attention_mask=True).save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tiny_whisper_checkpoint(tmp_path_factory) -> Path:
    import torch
    from transformers import WhisperConfig, WhisperModel

    path = tmp_path_factory.mktemp("ckpt") / "whisper-tiny"
    torch.manual_seed(102)
    config = WhisperConfig(
        d_model=32,
        encoder_layers=2,
        encoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_layers=1,
        decoder_attention_heads=2,
        decoder_ffn_dim=64,
        num_mel_bins=80,
        max_source_positions=1500,
        max_target_positions=64,
    )
    WhisperModel(config).save_pretrained(path)
    return path
