import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from speccomp.compression import forward, preset_state
from speccomp.estimators import (
    CompressionTransformer,
    SpeakerEmbedder,
    SpectrogramTransformer,
)
from speccomp.frontend import Waveform, stft_magnitude
from speccomp.training import gen_synthetic_corpus


class TestSpectrogramTransformer:
    def test_single_waveform(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1, 1, 16000)
        transformer = SpectrogramTransformer()
        out = transformer.fit_transform(samples)
        assert out.shape == (98, 257)
        np.testing.assert_array_equal(out, stft_magnitude(Waveform(samples, 16000)))

    def test_list_of_waveforms(self):
        rng = np.random.default_rng(1)
        waves = [rng.uniform(-1, 1, 1000), rng.uniform(-1, 1, 2000)]
        outs = SpectrogramTransformer().fit(waves).transform(waves)
        assert len(outs) == 2
        assert outs[0].shape[1] == outs[1].shape[1] == 257

    def test_get_set_params(self):
        transformer = SpectrogramTransformer(n_fft=256, window_len=200, hop=100)
        params = transformer.get_params()
        assert params["n_fft"] == 256
        cloned = clone(transformer)
        assert cloned.get_params() == params

    def test_invalid_params_caught_at_fit(self):
        with pytest.raises(ValueError):
            SpectrogramTransformer(n_fft=500).fit(None)


class TestCompressionTransformer:
    def test_fit_infers_channels_and_matches_forward(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 10, size=(20, 33))
        transformer = CompressionTransformer(preset="cube-root", mode="cd")
        out = transformer.fit(x).transform(x)
        assert transformer.state_.n_channels == 33
        np.testing.assert_array_equal(out, forward(x, transformer.state_))

    def test_list_input(self):
        rng = np.random.default_rng(3)
        xs = [rng.uniform(0, 5, size=(10, 8)), rng.uniform(0, 5, size=(12, 8))]
        outs = CompressionTransformer(preset="drc", mode="mr-cd").fit(xs).transform(xs)
        assert len(outs) == 2 and outs[0].shape == (10, 8)

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            CompressionTransformer().transform(np.ones((3, 4)))

    def test_from_state(self):
        state = preset_state("power-law", "cd", 16)
        transformer = CompressionTransformer.from_state(state)
        x = np.random.default_rng(4).uniform(0, 3, size=(5, 16))
        np.testing.assert_array_equal(transformer.transform(x), forward(x, state))

    def test_pipeline_composition(self):
        rng = np.random.default_rng(5)
        waves = [rng.uniform(-1, 1, 1200) for _ in range(3)]
        pipeline = Pipeline([
            ("stft", SpectrogramTransformer()),
            ("compress", CompressionTransformer(preset="cube-root", mode="cd")),
        ])
        outs = pipeline.fit_transform(waves)
        assert len(outs) == 3
        assert np.all(outs[0] >= 0)

    def test_clone_roundtrip(self):
        transformer = CompressionTransformer(preset="drc", mode="mr-cd", n_regimes=4)
        cloned = clone(transformer)
        assert cloned.get_params()["n_regimes"] == 4


class TestSpeakerEmbedder:
    def _toy_data(self):
        corpus = gen_synthetic_corpus(3, 4, duration_s=0.2, seed=0, n_channels=12)
        X = [x for x, _ in corpus.utterances]
        y = [label for _, label in corpus.utterances]
        return X, y

    def test_fit_transform_shapes(self):
        X, y = self._toy_data()
        embedder = SpeakerEmbedder(embed_dim=8, epochs=2, batch_size=4)
        embeddings = embedder.fit(X, y).transform(X)
        assert embeddings.shape == (len(X), 8)
        assert hasattr(embedder, "report_")
        assert len(embedder.report_.loss_history) == 2

    def test_deterministic(self):
        X, y = self._toy_data()
        a = SpeakerEmbedder(embed_dim=8, epochs=2, batch_size=4, seed=3).fit(X, y)
        b = SpeakerEmbedder(embed_dim=8, epochs=2, batch_size=4, seed=3).fit(X, y)
        np.testing.assert_array_equal(a.transform(X), b.transform(X))

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            SpeakerEmbedder().transform([np.ones((5, 4))])

    def test_label_shape_validated(self):
        X, y = self._toy_data()
        with pytest.raises(ValueError):
            SpeakerEmbedder(epochs=1).fit(X, y[:-1])

    def test_get_params_includes_training_knobs(self):
        params = SpeakerEmbedder(learning_rate=0.01, m=0.1).get_params()
        assert params["learning_rate"] == 0.01
        assert params["m"] == 0.1
