import math

import numpy as np
import pytest

from tripler import calibration as cal
from tripler import circuit, steady
from tripler.calibration import CalibrationChain, Linecut
from tripler.errors import BelowThresholdError, NoSignalError

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def chain():
    return CalibrationChain(gain_db=66.0, noise_floor_w=0.44e-9, x=9.97e11)


def synthetic_linecuts(params, chain, x_true, deltas_hz, noise=0.0, seed=0,
                       n=40):
    """Linecuts generated from the forward model at a known chain parameter."""
    rng = np.random.default_rng(seed)
    cuts = []
    co = cal._FluxCoeffs.at(params, 0.0)
    for dhz in deltas_hz:
        d1 = TWO_PI * dhz
        window = steady.existence_window(d1 / co.alpha1, co.Gamma1 / co.alpha1)
        per_watt = cal.pump_intensity(1.0, x_true, co, d1)
        pd = np.geomspace(0.5 * window[0] / per_watt,
                          1.2 * window[1] / per_watt, n)
        pout = cal._linecut_model(pd, x_true, co, d1, chain.gain_db)
        pout = pout * (1.0 + noise * rng.standard_normal(pout.shape))
        cuts.append(Linecut(delta1=d1, flux=0.0, pd_w=pd,
                            pout_w=np.maximum(pout, 0.0)))
    return cuts


class TestPowerConversions:
    def test_drive_power_zero(self):
        assert cal.drive_power(0.0, 80.0, TWO_PI * 5.5e9) == 0.0

    def test_drive_roundtrip(self):
        omega = TWO_PI * 5.504e9
        for pd in np.geomspace(1e-18, 1e-3, 100):
            b2 = cal.drive_amplitude_sq(pd, 81.9, omega)
            back = cal.drive_power(b2, 81.9, omega)
            assert back == pytest.approx(pd, rel=1e-12)

    def test_output_for_hundred_photons(self):
        omega = TWO_PI * 5.504e9
        g1e = omega / (2 * 19e3)
        p = cal.output_power(100.0, g1e, 66.0, omega)
        assert 2.1e-9 < p < 3.1e-9

    def test_output_roundtrip(self):
        omega = TWO_PI * 5.4e9
        g1e = omega / (2 * 19e3)
        for n in np.geomspace(0.1, 1e4, 50):
            p = cal.output_power(n, g1e, 66.0, omega)
            assert cal.photon_number(p, g1e, 66.0, omega) == \
                pytest.approx(n, rel=1e-12)

    def test_decibel_doubling_identity(self):
        omega = TWO_PI * 5.4e9
        g1e = omega / (2 * 19e3)
        base = cal.output_power(7.0, g1e, 66.0, omega)
        up = cal.output_power(7.0, g1e, 66.0 + 10 * math.log10(2.0), omega)
        assert up == pytest.approx(2.0 * base, rel=1e-12)

    def test_dbm_conversions(self):
        assert cal.dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-12)
        assert cal.watt_to_dbm(1e-3) == pytest.approx(0.0, abs=1e-12)
        for dbm in np.linspace(-120, 10, 27):
            assert cal.watt_to_dbm(cal.dbm_to_watt(dbm)) == \
                pytest.approx(dbm, abs=1e-12)


class TestFit:
    def test_recovery_with_noise(self, params, chain):
        x0 = 1e12
        cuts = synthetic_linecuts(params, chain, x0,
                                  [-4e6, -8e6, -12e6], noise=0.01, seed=4)
        res = cal.fit_x(cuts, params, chain)
        assert res.x == pytest.approx(x0, rel=0.02)
        assert res.n_points >= 15
        assert res.x_sigma < 0.05 * x0
        assert len(res.curves) == 3

    def test_objective_unimodal(self, params, chain):
        x0 = 1e12
        cuts = synthetic_linecuts(params, chain, x0, [-8e6], noise=0.0)

        def rss(x):
            total = 0.0
            co = cal._FluxCoeffs.at(params, 0.0)
            for lc in cuts:
                mask = lc.pout_w > chain.noise_floor_w
                model = cal._linecut_model(lc.pd_w[mask], x, co, lc.delta1,
                                           chain.gain_db)
                total += float(np.sum((model - lc.pout_w[mask]) ** 2))
            return total

        xs = np.geomspace(x0 / 100, x0 * 100, 200)
        vals = np.array([rss(x) for x in xs])
        k = int(np.argmin(vals))
        assert 0 < k < len(xs) - 1
        # the abrupt oscillation onset crossing data-grid points leaves a
        # ~1e-4-relative staircase on the objective; unimodal at scale
        tol = 1e-3 * (vals.max() - vals.min())
        assert np.all(np.diff(vals[:k + 1]) <= tol)
        assert np.all(np.diff(vals[k:]) >= -tol)

    @pytest.mark.skip(reason="no digitized measured linecuts are bundled; "
                             "when supplied, the fit is expected to land on "
                             "X = 9.97e11 within 5%")
    def test_measured_linecuts(self):
        pass

    def test_no_signal_error(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        d1 = -TWO_PI * 8e6
        pd = np.geomspace(1e-9, 1e-6, 10)
        quiet = Linecut(delta1=d1, flux=0.0, pd_w=pd,
                        pout_w=np.full(10, 1e-12))
        with pytest.raises(NoSignalError):
            cal.fit_x([quiet], params, chain)
        with pytest.raises(NoSignalError):
            cal.fit_x([], params, chain)

    def test_linecut_validation(self):
        with pytest.raises(ValueError):
            Linecut(delta1=-1.0, flux=0.0, pd_w=np.array([2.0, 1.0]),
                    pout_w=np.array([0.0, 0.0]))
        with pytest.raises(ValueError):
            Linecut(delta1=-1.0, flux=0.0, pd_w=np.array([1.0, 2.0]),
                    pout_w=np.array([0.0, -1.0]))


class TestMaxOutput:
    def test_threshold_closed_form(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        got = cal.predict_max_output(params, 0.0, -th, chain)
        expect = cal.output_power(0.7 * 4 * th / (7 * co.alpha1),
                                  co.Gamma1_ext, chain.gain_db,
                                  co.omega1 - th)
        assert got == pytest.approx(expect, rel=1e-6)

    def test_below_threshold_error(self, params, chain):
        with pytest.raises(BelowThresholdError):
            cal.predict_max_output(params, 0.0, -1e3, chain)

    def test_monotone_beyond_twice_threshold(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        mags = np.linspace(2 * th, 40 * th, 100)
        vals = [cal.predict_max_output(params, 0.0, -m, chain) for m in mags]
        assert np.all(np.diff(vals) > 0)

    def test_slope_ratio_matches_coefficient_oracle(self, params, chain):
        def slope(flux):
            co = cal._FluxCoeffs.at(params, flux)
            th = steady.THRESHOLD_FACTOR * co.Gamma1
            d = np.array([20 * th, 21 * th])
            p = [cal.predict_max_output(params, flux, -m, chain) for m in d]
            return (p[1] - p[0]) / (d[1] - d[0])

        def coeff(flux):
            # far from threshold: P ~ 0.7*(8/7)*hbar*w1*2*Gamma_ext*10^(G/10)
            #                          * |delta1| / alpha1
            co = cal._FluxCoeffs.at(params, flux)
            return co.omega1 * co.Gamma1_ext / co.alpha1

        ratio = slope(0.3) / slope(0.0)
        oracle = coeff(0.3) / coeff(0.0)
        assert ratio == pytest.approx(oracle, rel=5e-3)
        # to leading order this is the inverse Kerr-coefficient ratio
        a0 = cal._FluxCoeffs.at(params, 0.0).alpha1
        a3 = cal._FluxCoeffs.at(params, 0.3).alpha1
        assert ratio == pytest.approx(a0 / a3, rel=0.15)


class TestVisibleThreshold:
    def test_vanishing_floor_gives_true_threshold(self, params):
        quiet = CalibrationChain(gain_db=66.0, noise_floor_w=1e-30)
        co = cal._FluxCoeffs.at(params, 0.0)
        got = cal.visible_threshold(params, 0.0, quiet)
        assert got == pytest.approx(-steady.THRESHOLD_FACTOR * co.Gamma1,
                                    rel=1e-9)

    def test_never_shallower_than_true_threshold(self, params, chain):
        for flux in np.linspace(0.0, 0.42, 15):
            co = cal._FluxCoeffs.at(params, flux)
            got = cal.visible_threshold(params, flux, chain)
            assert -got >= steady.THRESHOLD_FACTOR * co.Gamma1 * (1 - 1e-12)

    def test_noise_limited_threshold_crossing(self, params):
        # with the floor exactly at the predicted threshold-peak power the
        # visible threshold sits at the true one; raising the floor pushes
        # it deeper into the red
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        p_at_th = cal.predict_max_output(
            params, 0.0, -th * (1 + 1e-9),
            CalibrationChain(gain_db=66.0, noise_floor_w=1.0))
        soft = CalibrationChain(gain_db=66.0, noise_floor_w=0.9 * p_at_th)
        hard = CalibrationChain(gain_db=66.0, noise_floor_w=10 * p_at_th)
        assert cal.visible_threshold(params, 0.0, soft) == \
            pytest.approx(-th, rel=1e-9)
        deep = cal.visible_threshold(params, 0.0, hard)
        assert -deep > 2 * th
        check = cal.predict_max_output(params, 0.0, deep, hard)
        assert check == pytest.approx(hard.noise_floor_w, rel=1e-6)


class TestRegionMap:
    def test_above_threshold_all_region_one(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        d1 = np.array([-0.5 * th, -0.9 * th])
        pd = np.geomspace(1e-9, 1e-3, 20)
        rmap = cal.region_map(params, 0.0, chain, d1, pd)
        assert np.all(rmap.labels == "I")
        assert np.all(np.isnan(rmap.boundary_pd_w))

    def test_boundary_linear_in_detuning(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        d1 = np.array([-10 * th, -20 * th])
        pd = np.geomspace(1e-9, 1e-3, 5)
        rmap = cal.region_map(params, 0.0, chain, d1, pd)
        # generator-plane boundary scales linearly with |delta1| up to the
        # slow drift of the signal frequency prefactor
        assert rmap.boundary_pd_w[1] / rmap.boundary_pd_w[0] == \
            pytest.approx(2.0, rel=1e-3)

    def test_cells_match_window(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        d1 = np.array([-TWO_PI * 8e6])
        pd = np.geomspace(1e-12, 1e-2, 400)
        rmap = cal.region_map(params, 0.0, chain, d1, pd)
        labels = rmap.labels[0]
        inside = np.nonzero(labels == "exists")[0]
        assert inside.size > 0
        # contiguous band
        assert np.all(np.diff(inside) == 1)
        v = cal.pump_intensity(pd, chain.x, co, d1[0])
        window = steady.existence_window(d1[0] / co.alpha1,
                                         co.Gamma1 / co.alpha1)
        expect = (v >= window[0]) & (v <= window[1])
        assert np.array_equal(labels == "exists", expect)

    def test_boundary_concave_monotone_in_dbm(self, params, chain):
        co = cal._FluxCoeffs.at(params, 0.0)
        th = steady.THRESHOLD_FACTOR * co.Gamma1
        d1 = -np.linspace(2 * th, 60 * th, 40)
        pd = np.geomspace(1e-9, 1e-3, 5)
        rmap = cal.region_map(params, 0.0, chain, d1, pd)
        dbm = cal.watt_to_dbm(rmap.boundary_pd_w)
        mag = -d1 / TWO_PI / 1e6
        slope = np.diff(dbm) / np.diff(mag)
        assert np.all(slope > 0)
        assert np.all(np.diff(slope) < 1e-12)

    def test_requires_fitted_x(self, params):
        nochain = CalibrationChain(gain_db=66.0, noise_floor_w=1e-10)
        with pytest.raises(ValueError):
            cal.region_map(params, 0.0, nochain, np.array([-1e6]),
                           np.array([1e-9]))
