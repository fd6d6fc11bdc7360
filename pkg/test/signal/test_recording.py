import unittest

import numpy as np

from mklbci.exception import (ChannelSelectionError, EpochError,
                              ParameterError, SessionValidationError,
                              ShapeMismatchError)
from mklbci.signal.recording import (Marker, Recording, Trial, epoch,
                                     labels_of, ms_to_samples,
                                     select_channels)


def make_recording(channels=3, samples=5000, markers=((1000, 1),), fs=100, seed=40):
    rng = np.random.default_rng(seed)
    return Recording(
        rng.standard_normal((channels, samples)),
        fs,
        tuple(f'ch{i:03d}' for i in range(channels)),
        markers
    )


class RecordingTest(unittest.TestCase):
    def test_construct(self):
        rec = make_recording()
        self.assertEqual((rec.n_channels, rec.n_samples), (3, 5000))
        self.assertEqual(rec.markers, (Marker(1000, 1),))
        with self.assertRaises(ValueError):
            rec.data[0, 0] = 0

    def test_invalid(self):
        with self.assertRaises(ShapeMismatchError):
            Recording(np.zeros((2, 10)), 100, ('a',))
        with self.assertRaises(ParameterError):
            Recording(np.zeros((1, 10)), 0, ('a',))
        with self.assertRaises(SessionValidationError) as cm:
            Recording(np.zeros((1, 10)), 100, ('a',), ((3, 1), (10, -1)))
        self.assertIn('#1', str(cm.exception))

    def test_truncated_markers(self):
        rec = make_recording(markers=[(100 * i, 1) for i in range(1, 6)])
        self.assertEqual(len(rec.truncated_markers(2).markers), 2)
        self.assertIs(rec.truncated_markers(0), rec)
        self.assertIs(rec.truncated_markers(10), rec)

    def test_truncated_markers_balanced(self):
        labels = [1, 1, 1, 1, -1, 1, -1, -1, -1, -1]
        rec = make_recording(markers=[(100 * (i + 1), label) for i, label in enumerate(labels)])

        four = rec.truncated_markers(4).markers
        self.assertEqual([m.sample for m in four], [100, 200, 500, 700])
        self.assertEqual(sorted(m.label for m in four), [-1, -1, 1, 1])

        five = rec.truncated_markers(5).markers
        self.assertEqual([m.sample for m in five], [100, 200, 300, 500, 700])

        short = make_recording(markers=[(100, -1), (200, 1), (300, 1), (400, 1), (500, 1)])
        self.assertEqual([m.sample for m in short.truncated_markers(4).markers], [100, 200, 300])

    def test_trial(self):
        trial = Trial(np.ones((2, 5)), -1)
        self.assertEqual((trial.n_channels, trial.n_samples), (2, 5))
        np.testing.assert_array_equal(trial.scaled(3).data, 3 * np.ones((2, 5)))
        with self.assertRaises(ParameterError):
            Trial(np.ones((2, 5)), 0)
        np.testing.assert_array_equal(labels_of([trial, Trial(np.ones((2, 5)), 1)]), [-1, 1])


class EpochTest(unittest.TestCase):
    def test_window(self):
        rec = make_recording()
        trials = epoch(rec, 750, 3500)
        self.assertEqual(len(trials), 1)
        self.assertEqual(trials[0].n_samples, 275)
        np.testing.assert_array_equal(trials[0].data, rec.data[:, 1075:1350])
        self.assertEqual(trials[0].label, 1)

    def test_rounding(self):
        self.assertEqual(ms_to_samples(750, 100), 75)
        self.assertEqual(ms_to_samples(3500, 100), 350)
        self.assertEqual(ms_to_samples(12, 250), 3)
        self.assertEqual(ms_to_samples(25, 100), 3)
        self.assertEqual(ms_to_samples(15, 100), 2)
        self.assertEqual(ms_to_samples(-25, 100), -2)

    def test_empty_window(self):
        with self.assertRaises(ParameterError):
            epoch(make_recording(), 500, 500)

    def test_count(self):
        markers = [(10 + 40 * i, 1 if i % 2 else -1) for i in range(150)]
        rec = make_recording(channels=2, samples=6100, markers=markers)
        trials = epoch(rec, 0, 300)
        self.assertEqual(len(trials), 150)
        self.assertEqual([t.label for t in trials], [m[1] for m in markers])

    def test_out_of_range(self):
        rec = make_recording(markers=((1000, 1), (4900, -1)))
        with self.assertRaises(EpochError) as cm:
            epoch(rec, 750, 3500)
        self.assertIn('#1', str(cm.exception))

    def test_label_map(self):
        rec = make_recording(markers=((1000, 1), (2000, 2)))
        trials = epoch(rec, 0, 100, label_map={1: 1, 2: -1})
        self.assertEqual([t.label for t in trials], [1, -1])

    def test_translation(self):
        rng = np.random.default_rng(41)
        data = rng.standard_normal((2, 3000))
        shift = 37
        rec = Recording(data, 100, ('a', 'b'), ((500, 1), (1500, -1)))
        shifted = Recording(
            np.hstack([np.zeros((2, shift)), data]), 100, ('a', 'b'),
            ((500 + shift, 1), (1500 + shift, -1))
        )
        for a, b in zip(epoch(rec, 750, 1500), epoch(shifted, 750, 1500)):
            np.testing.assert_array_equal(a.data, b.data)
            self.assertEqual(a.label, b.label)


class SelectChannelsTest(unittest.TestCase):
    def test_identity(self):
        rec = make_recording()
        self.assertTrue(select_channels(rec, rec.channel_names).is_identical(rec))

    def test_reverse(self):
        rec = make_recording()
        out = select_channels(rec, reversed(rec.channel_names))
        np.testing.assert_array_equal(out.data, rec.data[::-1])
        self.assertEqual(out.channel_names, rec.channel_names[::-1])

    def test_subset(self):
        rec = make_recording(channels=119, samples=200, markers=())
        order = np.random.default_rng(42).permutation(119)[:62]
        wanted = [rec.channel_names[i] for i in order]
        out = select_channels(rec, wanted)
        self.assertEqual(out.data.shape, (62, 200))
        self.assertEqual(list(out.channel_names), wanted)

    def test_errors(self):
        rec = make_recording()
        with self.assertRaises(ChannelSelectionError) as cm:
            select_channels(rec, ['ch000', 'Cz', 'ch000'])
        msg = str(cm.exception)
        self.assertIn('Cz', msg)
        self.assertIn('ch000', msg)
