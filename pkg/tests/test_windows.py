from clobserver import windows, ClObserverConfigError, ClObserverInsufficientHistoryError, ClObserverTimeGridError
import unittest
import math
import numpy as np


class TestWindowConfig(unittest.TestCase):
    def test_steps(self):
        cfg = windows.WindowConfig(0.5, 0.3, 5e-4)
        self.assertEqual(cfg.tau1_steps, 1000)
        self.assertEqual(cfg.tau2_steps, 600)
        self.assertEqual(cfg.span_steps, 1600)
        self.assertEqual(cfg.capacity, 1601)

    def test_not_a_multiple(self):
        with self.assertRaises(ClObserverConfigError):
            windows.WindowConfig(0.5003, 0.3, 1e-3)

    def test_non_positive(self):
        with self.assertRaises(ClObserverConfigError):
            windows.WindowConfig(0.0, 0.3, 1e-3)
        with self.assertRaises(ClObserverConfigError):
            windows.WindowConfig(0.5, 0.3, 0.0)

    def test_ready(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3, start_time=1.0)
        self.assertFalse(cfg.ready(1.79))
        self.assertTrue(cfg.ready(1.8))


    def test_quadrature(self):
        self.assertEqual(windows.WindowConfig(0.5, 0.3, 1e-3).quadrature, windows.QUADRATURE_TRAPEZOID)
        with self.assertRaises(ClObserverConfigError):
            windows.WindowConfig(0.5, 0.3, 1e-3, quadrature='simpson')

class TestSignalBuffer(unittest.TestCase):
    def test_ring_eviction(self):
        buf = windows.SignalBuffer(0.1, 3)
        for k in range(5):
            buf.append(k * 0.1, float(k))
        self.assertEqual(len(buf), 3)
        times, values = buf.samples()
        np.testing.assert_allclose(values, [2.0, 3.0, 4.0])
        np.testing.assert_allclose(times, [0.2, 0.3, 0.4])
        self.assertAlmostEqual(buf.oldest_time, 0.2)
        self.assertAlmostEqual(buf.latest_time, 0.4)

    def test_window(self):
        buf = windows.SignalBuffer(0.1, 10, (2,))
        for k in range(10):
            buf.append(k * 0.1, [k, -k])
        times, values = buf.window(0.6, 3)
        np.testing.assert_allclose(times, [0.3, 0.4, 0.5, 0.6])
        np.testing.assert_allclose(values[:, 0], [3, 4, 5, 6])

    def test_window_not_covered(self):
        buf = windows.SignalBuffer(0.1, 4)
        for k in range(4):
            buf.append(k * 0.1, 0.0)
        with self.assertRaises(ClObserverInsufficientHistoryError):
            buf.window(0.3, 4)
        with self.assertRaises(ClObserverInsufficientHistoryError):
            windows.SignalBuffer(0.1, 4).window(0.0, 0)

    def test_off_grid_append(self):
        buf = windows.SignalBuffer(0.1, 4)
        buf.append(0.0, 1.0)
        with self.assertRaises(ClObserverTimeGridError):
            buf.append(0.25, 1.0)

    def test_clear(self):
        buf = windows.SignalBuffer(0.1, 4)
        buf.append(0.0, 1.0)
        buf.clear()
        self.assertEqual(len(buf), 0)
        buf.append(5.0, 2.0)
        self.assertEqual(buf.latest_time, 5.0)


class TestWindowOperators(unittest.TestCase):
    def test_zero_before_ready(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        buf = _filled(cfg, lambda t: t * t, 0.5)
        self.assertEqual(windows.window_position_delta(buf, 0.5, cfg).tolist(), 0.0)
        self.assertEqual(windows.double_integral(buf, 0.5, cfg).tolist(), 0.0)

    def test_position_delta_of_parabola(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        buf = _filled(cfg, lambda t: t * t, 1.0)
        self.assertAlmostEqual(float(windows.window_position_delta(buf, 1.0, cfg)), 2 * 0.5 * 0.3, places=10)

    def test_double_integral_of_constant(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        buf = _filled(cfg, lambda t: 2.0, 1.0)
        self.assertAlmostEqual(float(windows.double_integral(buf, 1.0, cfg)), 2 * 0.5 * 0.3, places=10)


    def test_double_integral_of_ramp(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        buf = _filled(cfg, lambda t: t, 1.0)
        self.assertAlmostEqual(float(windows.double_integral(buf, 1.0, cfg)), 0.09, places=10)

    def test_position_delta_of_affine_signal(self):
        cfg = windows.WindowConfig(0.5, 0.25, 0.125)
        buf = windows.SignalBuffer.for_window(cfg, (2,))
        for k in range(17):
            t = k * 0.125
            buf.append(t, [2.0 + 3.0 * t, -1.0 + 0.5 * t])
            np.testing.assert_array_equal(windows.window_position_delta(buf, t, cfg), [0.0, 0.0])

    def test_double_integral_is_linear(self):
        for quadrature in windows.QUADRATURES:
            cfg = windows.WindowConfig(0.4, 0.2, 1e-3, quadrature=quadrature)
            f_buf = _filled(cfg, lambda t: math.sin(3 * t), 1.0)
            g_buf = _filled(cfg, lambda t: t * t - 1.0, 1.0)
            mixed = _filled(cfg, lambda t: 2.5 * math.sin(3 * t) - 4.0 * (t * t - 1.0), 1.0)
            expected = 2.5 * windows.double_integral(f_buf, 1.0, cfg) - 4.0 * windows.double_integral(g_buf, 1.0, cfg)
            np.testing.assert_allclose(windows.double_integral(mixed, 1.0, cfg), expected,
                                       rtol=1e-12, atol=1e-15, err_msg=quadrature)

    def test_euler_rule_reproduces_euler_positions(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3, quadrature=windows.QUADRATURE_EULER)
        for t in (0.8, 1.0, 1.5):
            p_buf, a_buf = _euler_integrated(cfg, lambda s: math.sin(3 * s) + s, t, 0.7, -0.4)
            self.assertAlmostEqual(float(windows.double_integral(a_buf, t, cfg)),
                                   float(windows.window_position_delta(p_buf, t, cfg)), places=11)

    def test_double_integral_matches_position_delta(self):
        cfg = windows.WindowConfig(0.4, 0.2, 1e-3)
        p_buf = _filled(cfg, lambda t: math.sin(2 * t), 2.0)
        a_buf = _filled(cfg, lambda t: -4 * math.sin(2 * t), 2.0)
        self.assertAlmostEqual(float(windows.window_position_delta(p_buf, 2.0, cfg)),
                               float(windows.double_integral(a_buf, 2.0, cfg)), delta=1e-5)

    def test_quadrature_order(self):
        errors = []
        for h in (2e-3, 1e-3, 5e-4):
            cfg = windows.WindowConfig(TAU1, TAU2, h)
            buf = _filled(cfg, lambda t: t ** 3, T_END)
            errors.append(abs(float(windows.double_integral(buf, T_END, cfg)) - _cubic_double_integral(T_END)))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreaterEqual(math.log2(coarse / fine), 1.9)

    def test_matrix_samples(self):
        cfg = windows.WindowConfig(0.2, 0.1, 1e-2)
        buf = windows.SignalBuffer.for_window(cfg, (2, 3))
        for k in range(31):
            buf.append(k * 1e-2, np.full((2, 3), 2.0))
        np.testing.assert_allclose(windows.double_integral(buf, 0.3, cfg), np.full((2, 3), 2 * 0.2 * 0.1))


class TestTripletRecorder(unittest.TestCase):
    def test_triplet(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        recorder = windows.TripletRecorder(cfg, 1, 2)
        for k in range(1001):
            t = k * 1e-3
            recorder.record(t, [t * t], [1.0], [[1.0], [0.5]])
        P, F_hat, G_hat = recorder.triplet(1.0)
        self.assertAlmostEqual(float(P[0]), 0.3, places=10)
        self.assertAlmostEqual(float(F_hat[0]), 0.15, places=10)
        np.testing.assert_allclose(G_hat, [[0.15], [0.075]], atol=1e-10)

    def test_triplet_before_ready(self):
        cfg = windows.WindowConfig(0.5, 0.3, 1e-3)
        recorder = windows.TripletRecorder(cfg, 2, 4)
        recorder.record(0.0, [0.0, 0.0], [0.0, 0.0], np.zeros((4, 2)))
        P, F_hat, G_hat = recorder.triplet(0.0)
        self.assertEqual(P.shape, (2,))
        self.assertEqual(G_hat.shape, (4, 2))
        self.assertFalse(np.any(G_hat))


def _filled(cfg, f, t_end):
    buf = windows.SignalBuffer.for_window(cfg)
    for k in range(int(round(t_end / cfg.sample_period)) + 1):
        t = k * cfg.sample_period
        buf.append(t, f(t))
    return buf


def _euler_integrated(cfg, acceleration, t_end, p, q):
    p_buf = windows.SignalBuffer.for_window(cfg)
    a_buf = windows.SignalBuffer.for_window(cfg)
    h = cfg.sample_period
    for k in range(int(round(t_end / h)) + 1):
        t = k * h
        a = acceleration(t)
        p_buf.append(t, p)
        a_buf.append(t, a)
        p, q = p + h * q, q + h * a
    return p_buf, a_buf


def _cubic_double_integral(t):
    def fifth(x):
        return x ** 5
    return (fifth(t) - fifth(t - TAU2) - fifth(t - TAU1) + fifth(t - TAU1 - TAU2)) / 20


TAU1 = 0.5
TAU2 = 0.3
T_END = 1.0

if __name__ == '__main__':
    unittest.main()
