import numpy as np
import pytest

from tssf import dataio, manifold
from tssf.errors import FormatError, InvalidInput, NotPositiveDefinite


def small_set(rng, c=3, n=40, t=6, sessions=1):
    data = rng.standard_normal((c, n, t))
    labels = np.where(np.arange(t) % 2 == 0, 1, -1)
    session_ids = np.arange(t) % sessions
    names = [f"ch{i}" for i in range(c)]
    return dataio.TrialSet(data=data, labels=labels, session_ids=session_ids, channel_names=names)


class TestTrialSet:
    def test_validation(self, rng):
        with pytest.raises(InvalidInput):
            dataio.TrialSet(
                data=rng.standard_normal((2, 3)),
                labels=[1, -1],
                session_ids=[0, 0],
                channel_names=["a", "b"],
            )
        with pytest.raises(InvalidInput):
            dataio.TrialSet(
                data=rng.standard_normal((2, 3, 2)),
                labels=[1, 2],
                session_ids=[0, 0],
                channel_names=["a", "b"],
            )

    def test_subset(self, rng):
        ts = small_set(rng, t=6)
        sub = ts.subset([0, 2, 4])
        assert sub.n_trials == 3
        np.testing.assert_array_equal(sub.trial(1), ts.trial(2))


class TestEegtFormat:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        ts = small_set(rng, c=4, n=17, t=5, sessions=2)
        ts.channel_names[0] = "Fz(µ)"  # non-ASCII name survives
        path = tmp_path / "trials.eegt"
        dataio.write_trials(ts, path)
        back = dataio.read_trials(path)
        np.testing.assert_array_equal(back.data, ts.data)
        np.testing.assert_array_equal(back.labels, ts.labels)
        np.testing.assert_array_equal(back.session_ids, ts.session_ids)
        assert back.channel_names == ts.channel_names
        # writing again produces identical bytes
        path2 = tmp_path / "again.eegt"
        dataio.write_trials(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_bad_magic(self, tmp_path, rng):
        path = tmp_path / "x.eegt"
        dataio.write_trials(small_set(rng), path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            dataio.read_trials(path)

    def test_bad_version(self, tmp_path, rng):
        path = tmp_path / "x.eegt"
        dataio.write_trials(small_set(rng), path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            dataio.read_trials(path)

    def test_truncated(self, tmp_path, rng):
        path = tmp_path / "x.eegt"
        dataio.write_trials(small_set(rng), path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(FormatError):
            dataio.read_trials(path)

    def test_trailing_bytes(self, tmp_path, rng):
        path = tmp_path / "x.eegt"
        dataio.write_trials(small_set(rng), path)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(FormatError):
            dataio.read_trials(path)


class TestManifest:
    def test_load_merges_sessions(self, tmp_path, rng):
        a, b = small_set(rng, t=4), small_set(rng, t=6)
        dataio.write_trials(a, tmp_path / "a.eegt")
        dataio.write_trials(b, tmp_path / "b.eegt")
        manifest = tmp_path / "files.txt"
        manifest.write_text("# one file per session\n3 a.eegt\n7 b.eegt\n")
        merged = dataio.load_manifest(manifest)
        assert merged.n_trials == 10
        np.testing.assert_array_equal(np.unique(merged.session_ids), [3, 7])
        np.testing.assert_array_equal(merged.data[:, :, :4], a.data)

    def test_bad_lines(self, tmp_path):
        manifest = tmp_path / "m.txt"
        manifest.write_text("notanint file.eegt\n")
        with pytest.raises(FormatError):
            dataio.read_manifest(manifest)
        manifest.write_text("\n")
        with pytest.raises(FormatError):
            dataio.read_manifest(manifest)


class TestEmpiricalCovariance:
    def test_identity_trial(self):
        # 2 channels x 2 samples, no centering: X X^T / N = I / 2
        with pytest.warns(UserWarning):  # N <= C rank warning
            cov = dataio.empirical_covariance(np.eye(2), center=False, scale=True)
        np.testing.assert_allclose(cov, np.eye(2) / 2, atol=1e-15)

    def test_constant_row_rejected(self, rng):
        trial = rng.standard_normal((3, 50))
        trial[1] = 2.5
        with pytest.raises(NotPositiveDefinite):
            dataio.empirical_covariance(trial)

    def test_direct_sum_oracle(self, rng):
        trial = rng.standard_normal((4, 60))
        cov = dataio.empirical_covariance(trial)
        centered = trial - trial.mean(axis=1, keepdims=True)
        oracle = np.zeros((4, 4))
        for n in range(60):
            oracle += np.outer(centered[:, n], centered[:, n])
        oracle /= 60
        np.testing.assert_allclose(cov, oracle, atol=1e-12)

    def test_unscaled(self, rng):
        trial = rng.standard_normal((3, 50))
        scaled = dataio.empirical_covariance(trial, scale=True)
        raw = dataio.empirical_covariance(trial, scale=False)
        np.testing.assert_allclose(raw, 50 * scaled, rtol=1e-12)

    def test_scaling_leaves_filter_directions(self, rng):
        # 1/N scaling moves the Frechet mean by the same scalar and leaves
        # generalized eigenvector directions untouched
        ts = small_set(rng, c=3, n=100, t=8)
        covs = dataio.covariances(ts, scale=True)
        covs_raw = dataio.covariances(ts, scale=False)
        mean = manifold.frechet_mean(covs)
        mean_raw = manifold.frechet_mean(covs_raw)
        np.testing.assert_allclose(mean_raw, 100 * mean, rtol=1e-8)
        g1 = manifold.ged(covs[0], mean)
        g2 = manifold.ged(covs_raw[0], mean_raw)
        angle = manifold.subspace_angle_by_cluster(
            g1.eigenvectors, g2.eigenvectors, g1.eigenvalues
        )
        assert angle < 1e-8


class TestFirBandpass:
    @staticmethod
    def tone(freq, fs=250.0, n=1000):
        t = np.arange(n) / fs
        return np.sin(2 * np.pi * freq * t)

    def make_set(self, signal):
        data = np.tile(signal, (2, 1))[:, :, None]
        return dataio.TrialSet(
            data=data, labels=[1], session_ids=[0], channel_names=["a", "b"]
        )

    def test_passband_tone_retained(self):
        ts = self.make_set(self.tone(10.0))
        out = dataio.fir_bandpass(ts, 8.0, 32.0, 250.0)
        rms_in = np.sqrt(np.mean(ts.data**2))
        rms_out = np.sqrt(np.mean(out.data**2))
        assert rms_out >= 0.9 * rms_in

    def test_stopband_tone_suppressed(self):
        ts = self.make_set(self.tone(2.0))
        out = dataio.fir_bandpass(ts, 8.0, 32.0, 250.0)
        rms_in = np.sqrt(np.mean(ts.data**2))
        rms_out = np.sqrt(np.mean(out.data**2))
        assert rms_out <= 0.1 * rms_in

    def test_zero_signal(self):
        ts = self.make_set(np.zeros(1000))
        out = dataio.fir_bandpass(ts, 8.0, 32.0, 250.0)
        np.testing.assert_allclose(out.data, 0.0, atol=1e-15)

    def test_invalid_band(self, rng):
        ts = small_set(rng, n=600)
        with pytest.raises(InvalidInput):
            dataio.fir_bandpass(ts, 32.0, 8.0, 250.0)
        with pytest.raises(InvalidInput):
            dataio.fir_bandpass(ts, 8.0, 200.0, 250.0)
        with pytest.raises(InvalidInput):
            dataio.fir_bandpass(ts, 8.0, 32.0, 250.0, taps=128)


class TestSynth:
    def test_identity_mixing_class_variances(self):
        cfg = dataio.SynthConfig(
            channels=2,
            samples=4000,
            trials_per_class=20,
            seed=5,
            n_discriminative=2,
            var_pos=(4.0, 1.0),
            var_neg=(1.0, 4.0),
            noise_sigma=0.0,
            mixing="identity",
        )
        ts = dataio.synth_generate(cfg)
        covs = dataio.covariances(ts)
        pos = covs[ts.labels == 1].mean(axis=0)
        neg = covs[ts.labels == -1].mean(axis=0)
        np.testing.assert_allclose(np.diag(pos), [4.0, 1.0], rtol=0.1)
        np.testing.assert_allclose(np.diag(neg), [1.0, 4.0], rtol=0.1)

    def test_seed_reproducibility(self):
        cfg = dataio.SynthConfig(channels=3, samples=50, trials_per_class=4, seed=9)
        a = dataio.synth_generate(cfg)
        b = dataio.synth_generate(cfg)
        np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_mixing_closed_form(self):
        cfg = dataio.SynthConfig(
            channels=3,
            samples=5000,
            trials_per_class=20,
            seed=2,
            n_discriminative=1,
            var_pos=(6.0,),
            var_neg=(0.5,),
            noise_sigma=0.0,
            mixing="random",
        )
        ts = dataio.synth_generate(cfg)
        # recover the mixing matrix the generator drew
        rng = np.random.default_rng(cfg.seed)
        u, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        v, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        mix = (u * rng.uniform(0.5, 1.5, size=3)) @ v.T
        covs = dataio.covariances(ts)
        pos = covs[ts.labels == 1].mean(axis=0)
        expected = mix @ np.diag([6.0, 1.0, 1.0]) @ mix.T
        np.testing.assert_allclose(pos, expected, rtol=0.1, atol=0.05)

    def test_sessions_balanced(self):
        cfg = dataio.SynthConfig(channels=2, samples=30, trials_per_class=8, sessions=2)
        ts = dataio.synth_generate(cfg)
        for s in (0, 1):
            labels = ts.labels[ts.session_ids == s]
            assert (labels == 1).sum() == (labels == -1).sum() == 4

    def test_invalid_config(self):
        with pytest.raises(InvalidInput):
            dataio.SynthConfig(noise_sigma=-1.0).validate()
        with pytest.raises(InvalidInput):
            dataio.SynthConfig(n_discriminative=9, channels=8).validate()
        with pytest.raises(InvalidInput):
            dataio.SynthConfig(var_pos=(1.0,)).validate()

    def test_config_from_text(self, tmp_path):
        path = tmp_path / "synth.cfg"
        path.write_text(
            "# demo config\n"
            "channels: 4\n"
            "samples: 64\n"
            "trials_per_class: 10\n"
            "seed: 3\n"
            "var_pos: 4, 1\n"
            "var_neg: 1, 4\n"
            "noise_sigma: 0.25\n"
            "mixing: identity\n"
        )
        cfg = dataio.SynthConfig.from_text(path)
        assert cfg.channels == 4 and cfg.noise_sigma == 0.25 and cfg.mixing == "identity"

    def test_config_bad_key(self, tmp_path):
        path = tmp_path / "synth.cfg"
        path.write_text("channel_count: 4\n")
        with pytest.raises(InvalidInput):
            dataio.SynthConfig.from_text(path)


class TestTrialCsv:
    def test_read(self, tmp_path):
        path = tmp_path / "trial.csv"
        path.write_text("1.0,2.0,3.0\n4.0,5.0,6.0\n")
        arr = dataio.read_trial_csv(path)
        np.testing.assert_array_equal(arr, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    def test_bad_csv(self, tmp_path):
        path = tmp_path / "trial.csv"
        path.write_text("1.0,oops\n")
        with pytest.raises(FormatError):
            dataio.read_trial_csv(path)
