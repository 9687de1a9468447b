from clobserver import numerics, ClObserverConfigError
from clobserver.plants import manipulator, control, noise
import unittest
import math
import numpy as np


class TestManipulator(unittest.TestCase):
    def test_mass_at_zero(self):
        np.testing.assert_allclose(manipulator.manipulator_mass([0.0, 0.0]),
                                   [[3.957, 0.438], [0.438, 0.196]], atol=1e-12)

    def test_mass_at_right_angle(self):
        np.testing.assert_allclose(manipulator.manipulator_mass([0.3, math.pi / 2]),
                                   [[3.473, 0.196], [0.196, 0.196]], atol=1e-12)

    def test_mass_symmetric_and_bounded(self):
        rng = np.random.default_rng(SEED)
        for p2 in rng.uniform(-math.pi, math.pi, 50):
            m = manipulator.manipulator_mass([rng.uniform(-5, 5), p2])
            np.testing.assert_array_equal(m, m.T)
            eigenvalues = numerics.symmetric_eigenvalues(m)
            self.assertGreaterEqual(eigenvalues[0], 0.05)
            self.assertLessEqual(eigenvalues[-1], 4.5)

    def test_coriolis(self):
        np.testing.assert_array_equal(manipulator.manipulator_coriolis([0.0, 1.0], [0.0, 0.0]), np.zeros((2, 2)))
        np.testing.assert_allclose(manipulator.manipulator_coriolis([0.0, 0.0], [1.0, 2.0]), np.zeros((2, 2)),
                                   atol=1e-15)
        np.testing.assert_allclose(manipulator.manipulator_coriolis([0.0, math.pi / 2], [1.0, 1.0]),
                                   [[-0.242, -0.484], [0.242, 0.0]], atol=1e-12)

    def test_mass_derivative_minus_twice_coriolis_is_skew(self):
        rng = np.random.default_rng(SEED)
        h = 1e-6
        for _ in range(20):
            p = rng.uniform(-math.pi, math.pi, 2)
            q = rng.uniform(-3, 3, 2)
            m_dot = (manipulator.manipulator_mass(p + h * q) - manipulator.manipulator_mass(p - h * q)) / (2 * h)
            n = m_dot - 2 * manipulator.manipulator_coriolis(p, q)
            np.testing.assert_allclose(n, -n.T, atol=1e-6)

    def test_regressor_zero_velocity(self):
        x = np.array([0.4, -0.2, 0.0, 0.0])
        np.testing.assert_array_equal(manipulator.manipulator_regressor(x, [1.0, 2.0]), np.zeros((4, 2)))

    def test_decomposition_matches_truth(self):
        plant = manipulator.TwoLinkManipulator()
        rng = np.random.default_rng(SEED)
        for _ in range(20):
            x = rng.uniform(-2, 2, 4)
            u = rng.uniform(-10, 10, 2)
            known, sigma = plant.evaluate(x, u)
            self.assertEqual(sigma.shape, (4, 2))
            p, q = x[:2], x[2:]
            m = plant.mass(p)
            # M q' + V_m q + Y theta = u
            expected = np.linalg.solve(m, u - plant.coriolis(p, q) @ q
                                       - manipulator.friction_basis(q) @ plant.theta_true[:, 0])
            np.testing.assert_allclose(plant.acceleration(x, u), expected, atol=1e-10)
            np.testing.assert_allclose(known + sigma.T @ plant.theta_true[:, 0], plant.acceleration(x, u))

    def test_regressor_identifiable_along_reference(self):
        reference = control.SinusoidalReference()
        gram = np.zeros((4, 4))
        for t in np.linspace(0.0, 2 * math.pi, 1000):
            sigma = manipulator.manipulator_regressor(reference.state(t), np.zeros(2))
            gram += sigma @ sigma.T
        self.assertGreater(numerics.min_singular_value(gram), 1e-6 * numerics.norm2(gram))

    def test_nominal_model_hides_parameters(self):
        plant = manipulator.TwoLinkManipulator()
        nominal = plant.nominal()
        self.assertFalse(hasattr(nominal, 'theta_true'))
        x, u = np.array([0.1, 0.2, 0.3, 0.4]), np.array([1.0, -1.0])
        np.testing.assert_array_equal(nominal.f0(x, u), plant.f0(x, u))
        np.testing.assert_array_equal(nominal.regressor(x, u), plant.regressor(x, u))
        self.assertEqual((nominal.n, nominal.m, nominal.p), (2, 2, 4))

    def test_theta_true(self):
        np.testing.assert_array_equal(manipulator.TwoLinkManipulator().theta_true, [[5.3], [1.1], [8.45], [2.35]])

    def test_invalid_params(self):
        with self.assertRaises(ClObserverConfigError):
            manipulator.ManipulatorParams(a2=-1.0)
        with self.assertRaises(ClObserverConfigError):
            manipulator.ManipulatorParams(theta=(1.0, 2.0, 3.0))


class TestController(unittest.TestCase):
    def test_reference(self):
        reference = control.SinusoidalReference()
        t = 0.7
        np.testing.assert_allclose(reference.position(t), [math.sin(2.1) + math.sin(1.4)] * 2)
        np.testing.assert_allclose(reference.acceleration(t), [-9 * math.sin(2.1) - 4 * math.sin(1.4)] * 2)
        self.assertEqual(reference.state(t).shape, (4,))

    def test_feedforward_on_reference(self):
        plant = manipulator.TwoLinkManipulator()
        reference = control.SinusoidalReference()
        controller = control.PDTrackingController(plant, reference, control.ControllerGains(0.0, 0.0))
        for t in (0.0, 0.4, 1.3):
            u = controller(reference.state(t), t)
            np.testing.assert_allclose(plant.acceleration(reference.state(t), u), reference.acceleration(t),
                                       atol=1e-9)

    def test_closed_loop_tracking(self):
        plant = manipulator.TwoLinkManipulator()
        controller = control.PDTrackingController(plant)
        reference = controller.reference
        x = np.zeros(4)
        h = 5e-4
        worst, largest_input = 0.0, 0.0
        for k in range(6000):
            t = k * h
            u = controller(x, t)
            largest_input = max(largest_input, float(np.linalg.norm(u)))
            if t >= 2.0:
                worst = max(worst, float(np.linalg.norm(x[:2] - reference.position(t))))
            x = plant.euler_step(x, u, h)
        self.assertLess(worst, 0.05)
        self.assertTrue(math.isfinite(largest_input))

    def test_negative_gains(self):
        with self.assertRaises(ClObserverConfigError):
            control.ControllerGains(kp=-1.0)


class TestNoise(unittest.TestCase):
    def test_zero_variance_is_identity(self):
        model = noise.NoiseModel(0.0, 3)
        p = np.array([0.25, -1.5])
        measured = noise.measure(p, model)
        np.testing.assert_array_equal(measured, p)
        self.assertIsNot(measured, p)
        np.testing.assert_array_equal(noise.measure(p, None), p)

    def test_statistics(self):
        draws = noise.NoiseModel(0.001, 11).draw(1_000_000)
        sigma = math.sqrt(0.001)
        self.assertLess(abs(draws.mean()), 4 * sigma / 1000)
        self.assertLess(abs(draws.var() / 0.001 - 1), 0.05)

    def test_reproducible(self):
        first = [noise.measure(np.zeros(2), model) for model in [noise.NoiseModel(0.001, 7)] for _ in range(5)]
        second = [noise.measure(np.zeros(2), model) for model in [noise.NoiseModel(0.001, 7)] for _ in range(5)]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)
        other = noise.measure(np.zeros(2), noise.NoiseModel(0.001, 8))
        self.assertFalse(np.array_equal(first[0], other))

    def test_negative_variance(self):
        with self.assertRaises(ClObserverConfigError):
            noise.NoiseModel(-1.0)


SEED = 4242

if __name__ == '__main__':
    unittest.main()
