import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ndbench.descriptors import (Descriptor, FeatureMap, GistConfig, PcaModel, Region, RmacConfig,
                                 block_pool, gabor_responses, gist_extract, pca_train, pca_whiten,
                                 regional_max, rmac_aggregate, rmac_regions, spoc_aggregate,
                                 triplet_loss, whiten_raw)

SMALL_GIST = GistConfig(image_side=64, boundary_extension=8)


def fmap(rng, h, w, c):
    return FeatureMap(rng.random((h, w, c)).astype(np.float32))


class TestSpoc:
    def test_single_fiber(self):
        v = np.array([[[1.0, 2.0, 3.0]]])
        np.testing.assert_array_equal(spoc_aggregate(FeatureMap(v)).values, [1, 2, 3])

    def test_constant_map(self):
        d = spoc_aggregate(FeatureMap(np.full((3, 5, 4), 0.5)))
        np.testing.assert_allclose(d.values, 0.5 * 15)

    def test_triple_loop_oracle(self):
        m = fmap(np.random.default_rng(0), 7, 7, 512)
        expect = np.zeros(512)
        for c in range(512):
            for i in range(7):
                for j in range(7):
                    expect[c] += float(m.data[i, j, c])
        np.testing.assert_allclose(spoc_aggregate(m).values, expect, rtol=1e-5, atol=1e-5)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 10))
    def test_linear_in_scale(self, h, w, a):
        m = fmap(np.random.default_rng(h * 7 + w), h, w, 8)
        scaled = FeatureMap(m.data * np.float32(a))
        np.testing.assert_allclose(spoc_aggregate(scaled).values, a * spoc_aggregate(m).values, rtol=1e-5)

    def test_empty_and_negative_maps_rejected(self):
        with pytest.raises(ValueError):
            FeatureMap(np.zeros((0, 3, 2)))
        with pytest.raises(ValueError):
            FeatureMap(-np.ones((2, 2, 2)))


class TestPca:
    def test_hand_example(self):
        pca = pca_train(np.array([[1.0, 0], [-1, 0], [0, 2], [0, -2]]))
        np.testing.assert_allclose(pca.eigenvalues, [2.0, 0.5])
        np.testing.assert_allclose(np.abs(pca.components), [[0, 1], [1, 0]], atol=1e-12)

    def test_white_input_gives_unit_eigenvalues(self):
        x = np.concatenate([np.eye(4), -np.eye(4)]) * np.sqrt(4)
        pca = pca_train(x)
        np.testing.assert_allclose(pca.eigenvalues, 1.0, atol=1e-12)
        np.testing.assert_allclose(pca.components @ pca.components.T, np.eye(4), atol=1e-12)

    def test_covariance_becomes_identity(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1000, 64)) @ rng.standard_normal((64, 64))
        pca = pca_train(x, epsilon=0.0)
        w = whiten_raw(x, pca)
        cov = w.T @ w / len(w)
        assert np.max(np.abs(cov - np.eye(64))) < 1e-6

    def test_identity_model(self):
        v = np.array([3.0, 4.0])
        np.testing.assert_allclose(pca_whiten(v, PcaModel.identity(2)).values, [0.6, 0.8], rtol=1e-6)

    def test_mean_gives_zero_sentinel(self):
        pca = pca_train(np.random.default_rng(2).standard_normal((20, 5)))
        d = pca_whiten(pca.mean, pca)
        assert not d.normalized and not np.any(d.values)

    @settings(max_examples=25, deadline=None)
    @given(arrays(np.float64, 6, elements=st.floats(-100, 100)))
    def test_output_unit_norm(self, v):
        pca = pca_train(np.random.default_rng(3).standard_normal((50, 6)))
        d = pca_whiten(v, pca)
        if d.normalized:
            assert abs(np.linalg.norm(d.values.astype(np.float64)) - 1) < 1e-6

    def test_errors(self):
        with pytest.raises(ValueError):
            pca_train(np.ones((1, 3)))
        with pytest.raises(ValueError):
            pca_whiten(np.ones(4), PcaModel.identity(3))

    def test_rank_deficient_allowed(self):
        x = np.random.default_rng(4).standard_normal((30, 2)) @ np.ones((2, 4))
        pca = pca_train(x)
        assert np.all(pca.eigenvalues >= 0)
        assert np.all(np.isfinite(whiten_raw(x, pca)))

    def test_save_load(self, tmp_path):
        pca = pca_train(np.random.default_rng(5).standard_normal((40, 3)), epsilon=1e-6)
        pca.save(tmp_path / "p.npz")
        back = PcaModel.load(tmp_path / "p.npz")
        np.testing.assert_array_equal(back.components, pca.components)
        assert back.epsilon == pca.epsilon

    def test_deterministic(self):
        x = np.random.default_rng(6).standard_normal((100, 8))
        a, b = pca_train(x), pca_train(x.copy())
        np.testing.assert_array_equal(a.components, b.components)


def regions_by_hand_8x8():
    return [(0, 0, 8), (0, 0, 5), (0, 3, 5), (3, 0, 5), (3, 3, 5)]


def regions_by_hand_6x10():
    # long side gets one extra region: overlap of 2 regions is 1/3, closest to 0.4
    return [(0, 0, 6), (0, 4, 6)] + [(t, l, 4) for t in (0, 2) for l in (0, 3, 6)]


class TestRmac:
    def test_region_grid_square(self):
        got = [(r.top, r.left, r.side) for r in rmac_regions(8, 8, RmacConfig(2))]
        assert got == regions_by_hand_8x8()

    def test_region_grid_wide(self):
        got = [(r.top, r.left, r.side) for r in rmac_regions(6, 10, RmacConfig(2))]
        assert got == regions_by_hand_6x10()
        tall = [(r.left, r.top, r.side) for r in rmac_regions(10, 6, RmacConfig(2))]
        assert sorted(tall) == sorted(regions_by_hand_6x10())

    def test_regions_inside_map(self):
        for h in range(2, 30, 3):
            for w in range(2, 30, 4):
                for r in rmac_regions(h, w, RmacConfig(3)):
                    assert r.top >= 0 and r.left >= 0
                    assert r.top + r.side <= h and r.left + r.side <= w

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            rmac_regions(1, 1, RmacConfig(2))

    def test_against_region_oracle(self):
        rng = np.random.default_rng(7)
        m = fmap(rng, 8, 8, 32)
        pca = pca_train(rng.random((200, 32)))
        total = np.zeros(32)
        for top, left, side in regions_by_hand_8x8():
            v = np.zeros(32)
            for c in range(32):
                v[c] = max(float(m.data[i, j, c]) for i in range(top, top + side)
                           for j in range(left, left + side))
            w = np.diag(1 / np.sqrt(pca.eigenvalues + pca.epsilon)) @ pca.components @ (v - pca.mean)
            total += w / np.linalg.norm(w)
        expect = total / np.linalg.norm(total)
        got = rmac_aggregate(m, RmacConfig(2), pca)
        assert got.normalized
        np.testing.assert_allclose(got.values, expect, atol=1e-5)

    def test_single_region_case(self):
        rng = np.random.default_rng(8)
        m = fmap(rng, 4, 4, 6)
        pca = pca_train(rng.random((50, 6)))
        got = rmac_aggregate(m, RmacConfig(1), pca)
        expect = pca_whiten(m.data.max(axis=(0, 1)), pca)
        np.testing.assert_allclose(got.values, expect.values, atol=1e-6)

    def test_regional_max_shape(self):
        m = fmap(np.random.default_rng(9), 5, 5, 3)
        out = regional_max(m, [Region(0, 0, 5), Region(1, 1, 2)])
        assert out.shape == (2, 3)
        np.testing.assert_allclose(out[1], m.data[1:3, 1:3].max(axis=(0, 1)))


class TestGist:
    def test_dim_512(self):
        img = np.random.default_rng(0).random((512, 512)) * 255
        cfg = GistConfig(blocks=4)
        d = gist_extract(img, cfg)
        assert d.dim == 512 == cfg.dim

    def test_zero_image(self):
        d = gist_extract(np.zeros((64, 64)), SMALL_GIST)
        assert not np.any(d.values)

    def test_block_pool_loop_oracle(self):
        img = np.random.default_rng(1).random((64, 64))
        cfg = GistConfig(image_side=64, boundary_extension=8, blocks=3)
        resp = gabor_responses(img, cfg)
        edges = [(b * 64) // 3 for b in range(4)]
        expect = []
        for k in range(cfg.n_filters):
            for by in range(3):
                for bx in range(3):
                    blk = resp[k, edges[by]:edges[by + 1], edges[bx]:edges[bx + 1]]
                    expect.append(sum(float(x) for x in blk.ravel()) / blk.size)
        np.testing.assert_allclose(block_pool(resp, 3), expect, rtol=1e-10)
        np.testing.assert_allclose(gist_extract(img, cfg).values, expect, rtol=1e-6)

    def test_translation_changes_descriptor(self):
        a = np.zeros((64, 64))
        a[32, 32] = 255
        b = np.roll(a, (20, 20), axis=(0, 1))
        assert not np.array_equal(gist_extract(a, SMALL_GIST).values, gist_extract(b, SMALL_GIST).values)

    def test_bit_deterministic(self):
        img = np.random.default_rng(2).random((64, 64))
        assert gist_extract(img, SMALL_GIST).values.tobytes() == gist_extract(img.copy(), SMALL_GIST).values.tobytes()

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            gist_extract(np.zeros((64, 32)), SMALL_GIST)
        with pytest.raises(ValueError):
            gist_extract(np.zeros((64, 64, 3)), SMALL_GIST)
        with pytest.raises(ValueError):
            gist_extract(np.zeros((32, 32)), SMALL_GIST)

    def test_energy_pooling(self):
        img = np.random.default_rng(3).random((64, 64))
        resp = gabor_responses(img, SMALL_GIST)
        np.testing.assert_allclose(block_pool(resp, 4, "energy"), block_pool(resp**2, 4, "mean"))


class TestTriplet:
    def test_all_equal_gives_half_margin(self):
        q = np.ones(3)
        assert triplet_loss(q, q, q, 0.7) == pytest.approx(0.35)

    def test_inactive_hinge(self):
        assert triplet_loss([0, 0], [1, 0], [0, 2], 1.0) == 0.0

    def test_active_hinge(self):
        assert triplet_loss([0, 0], [1, 0], [0, 2], 4.0) == 0.5

    def test_descriptor_inputs_and_mismatch(self):
        d = Descriptor(np.array([1.0, 0.0]))
        assert triplet_loss(d, d, d, 2.0) == 1.0
        with pytest.raises(ValueError):
            triplet_loss([0, 0], [0, 0, 0], [0, 0], 1.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 4, elements=st.floats(-5, 5)), arrays(np.float64, 4, elements=st.floats(-5, 5)),
           arrays(np.float64, 4, elements=st.floats(-5, 5)), st.floats(0, 3))
    def test_nonnegative_and_monotone_in_margin(self, q, p, n, m):
        lo = triplet_loss(q, p, n, m)
        assert lo >= 0 and triplet_loss(q, p, n, m + 1) >= lo
